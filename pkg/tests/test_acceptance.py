"""Acceptance suite: every exit criterion at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion.  Each test prints PASS only after its assertions hold and also
enforces the stated runtime budget.
"""

import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from pagar_lab import example1
from pagar_lab.game import (TabularPolicySpace, argmax_mixed_utility_set,
                            minimax_regret, minimax_sets_from_matrix,
                            regret, simplex_policy_grid, utility_matrix)
from pagar_lab.irl import IrlLossKind, RewardFamily, RewardSet, delta_star
from pagar_lab.mdp import (DemonstrationSet, RewardFunction, Trajectory)
from pagar_lab.rand import (random_deterministic_mdp, random_mdp,
                            random_policy, random_tabular_reward)
from pagar_lab.solvers import (entropy, expected_discounted,
                               soft_policy_evaluation, solve_soft,
                               solve_standard, utility, visitation)
from pagar_lab.alignment import verify_bounds
from pagar_lab.training import (TrainConfig, estimate_objectives, exact_batch,
                                train_pagar)

PASS = "ACCEPTANCE PASS"


def _report(name, t0, budget):
    elapsed = time.time() - t0
    print(f"{PASS} {name} ({elapsed:.2f}s < {budget}s)")
    assert elapsed < budget


def test_criterion_01_example1_success_interval():
    """Exact rationals: 31/125 reach probability, 125/188 upper bound."""
    t0 = time.time()
    mdp = example1.build_mdp()
    q = example1.prob_s6_via_a2_exact(mdp)
    assert q == Fraction(31, 125)
    lo, hi = example1.success_interval_exact(mdp)
    assert lo == Fraction(1, 2)
    assert hi == Fraction(125, 188)
    assert hi != Fraction(125, 178)  # the main-text variant is an erratum
    _report("criterion 1: exact success interval", t0, 1.0)


def test_criterion_02_example1_irl_curve():
    """Windowed likelihood over the 1e-3 omega grid: omega*=1, d* in [2.6, 3]."""
    t0 = time.time()
    game = example1.Example1Game.build(omega_step=1e-3, p_step=1e-2)
    d_star, omega_star = game.delta_star()
    assert omega_star == pytest.approx(1.0, abs=1e-9)
    assert 2.6 <= d_star <= 3.0
    _report("criterion 2: IRL curve", t0, 10.0)


def test_criterion_03_example1_delta_sweep():
    """Protagonist curve: monotone, reaches 1 near delta*, succeeds below the
    computed threshold, threshold inside [0.8, 1.5]."""
    t0 = time.time()
    game = example1.Example1Game.build(omega_step=1e-3, p_step=1e-3)
    d_star, _ = game.delta_star()
    threshold, _ = game.success_threshold(step=0.005)
    assert 0.8 <= threshold <= 1.5

    deltas = np.arange(0.0, d_star + 1e-9, 0.02)
    ps = game.delta_sweep(deltas)
    assert np.all(np.diff(ps) >= -1e-9)                    # non-decreasing
    for d in (d_star - 0.05, d_star - 0.01, d_star):
        p, _ = game.protagonist_for(d)
        assert p == pytest.approx(1.0, abs=1e-3 + 1e-12)   # within grid step
    lo, hi = example1.success_interval_exact(game.mdp)
    below = deltas[deltas < threshold - 1e-9]
    for p in game.delta_sweep(below):
        assert float(lo) - 1e-9 <= p <= float(hi) + 1e-9
    print(f"    computed success threshold delta = {threshold:.3f}")
    _report("criterion 3: delta sweep", t0, 60.0)


def _hundred_instances():
    for k in range(100):
        rng = np.random.default_rng([77, k])
        mdp = random_mdp(rng, n_states=int(rng.integers(2, 7)),
                         n_actions=int(rng.integers(2, 4)), gamma=0.9)
        r = random_tabular_reward(rng, mdp, 2.0)
        yield rng, mdp, r


def test_criterion_04_pairwise_identities():
    """The pairwise advantage identity and its soft-optimal specialization
    hold within 1e-8 on 100 seeded random MDPs."""
    t0 = time.time()
    for rng, mdp, r in _hundred_instances():
        pi1, pi2 = random_policy(rng, mdp), random_policy(rng, mdp)
        _, _, adv = soft_policy_evaluation(mdp, pi2, r)
        lhs = utility(mdp, pi1, r) - utility(mdp, pi2, r)
        rhs = expected_discounted(mdp, pi1, adv) + entropy(mdp, pi2)
        assert abs(lhs - rhs) <= 1e-8

        sol = solve_soft(mdp, r)
        _, _, adv_opt = soft_policy_evaluation(mdp, sol.policy, r)
        gap = expected_discounted(mdp, sol.policy, adv_opt) \
            + entropy(mdp, sol.policy)
        assert abs(gap) <= 1e-8
    _report("criterion 4: advantage identities (100 instances)", t0, 30.0)


def test_criterion_05_regret_bounds():
    """Both advantage-gap bounds hold with non-negative slack on the same
    100 instances, pi1 random and pi2 soft-optimal."""
    t0 = time.time()
    for rng, mdp, r in _hundred_instances():
        rep = verify_bounds(mdp, r, random_policy(rng, mdp))
        assert rep.slack_on_pi1 >= 0.0
        assert rep.slack_on_pi2 >= 0.0
    _report("criterion 5: regret bounds (100 instances)", t0, 60.0)


def test_criterion_06_decision_rule_equivalence():
    """argmin-max-regret set equals argmax-mixed-utility set exactly on 50
    seeded finite games (81 policies x 5 rewards)."""
    t0 = time.time()
    for k in range(50):
        rng = np.random.default_rng([99, k])
        mdp = random_mdp(rng, n_states=4, n_actions=2, gamma=0.9)
        rewards = [random_tabular_reward(rng, mdp, 1.0)
                   for _ in range(int(rng.integers(2, 6)))]
        policies = simplex_policy_grid(mdp, step=0.5)   # 3^4 = 81 policies
        assert len(policies) <= 81
        u = utility_matrix(mdp, policies, rewards)
        regret_set, _ = minimax_sets_from_matrix(u)
        mixed_set, _ = argmax_mixed_utility_set(mdp, rewards, policies,
                                                u_matrix=u)
        assert regret_set == mixed_set
    _report("criterion 6: decision-rule equivalence (50 games)", t0, 120.0)


def test_criterion_07_convexity_and_offset_invariance():
    """Episode-mixture convexity within 1e-9 and exact argmin-set invariance
    under arbitrary per-reward offsets, 100 draws each."""
    t0 = time.time()
    for k in range(100):
        rng = np.random.default_rng([55, k])
        mdp = random_mdp(rng, n_states=4, n_actions=2, gamma=0.9)
        rewards = [random_tabular_reward(rng, mdp, 1.5) for _ in range(3)]
        pi1, pi2 = random_policy(rng, mdp), random_policy(rng, mdp)
        a = float(rng.random())
        worst1 = worst2 = worst_mix = -np.inf
        for r in rewards:
            pol, _ = solve_standard(mdp, r)
            u_best = utility(mdp, pol, r)
            u1, u2 = utility(mdp, pi1, r), utility(mdp, pi2, r)
            worst1 = max(worst1, u_best - u1)
            worst2 = max(worst2, u_best - u2)
            worst_mix = max(worst_mix, u_best - (a * u1 + (1 - a) * u2))
        assert worst_mix <= a * worst1 + (1 - a) * worst2 + 1e-9

        u = rng.normal(size=(8, 4))
        f = rng.normal(size=4) * 5.0
        base, _ = minimax_sets_from_matrix(u)
        shifted, _ = minimax_sets_from_matrix(u, offsets=f)
        assert base == shifted
    _report("criterion 7: convexity + offset invariance (100 draws)", t0, 60.0)


def _rollout(mdp, policy, max_len=30):
    s = int(np.argmax(mdp.initial))
    steps = []
    for _ in range(max_len):
        if mdp.is_terminal(s):
            break
        a = int(np.argmax(policy.probs[s]))
        steps.append((s, a))
        s = int(np.argmax(mdp.transition[s, a]))
    return Trajectory(tuple(steps), s)


def test_criterion_08_nash_construction():
    """On 20 constructed Nash instances, MinimaxRegret over the optimal
    reward set returns a zero-regret policy under the delta* witness."""
    t0 = time.time()
    for k in range(20):
        rng = np.random.default_rng([31, k])
        mdp = random_deterministic_mdp(rng, n_states=4, n_actions=2,
                                       gamma=0.9)
        values = -rng.uniform(0.2, 1.0, size=(mdp.n_states, mdp.n_actions))
        values[list(mdp.terminals), :] = 0.0
        base = RewardFunction.tabular(values)
        pol, _ = solve_standard(mdp, base)
        demo = _rollout(mdp, pol)
        assert mdp.is_terminal(demo.final_state)
        demos = DemonstrationSet((demo,))

        table = base.table()
        fam = RewardFamily(np.array([-1.0]), np.array([1.0]),
                           lambda p, _t=table: RewardFunction.tabular(p[0] * _t))
        kind = IrlLossKind.max_margin()
        d_star, witness = delta_star(mdp, demos, fam, kind, grid_step=0.25,
                                     refinements=0)
        assert d_star == pytest.approx(0.0, abs=1e-9)
        rset = RewardSet(family=fam, delta=d_star, loss=kind, grid_step=0.25)
        pi_p, _ = minimax_regret(mdp, rset, demos, TabularPolicySpace(0.25),
                                 subgradient_steps=0, restarts=0)
        assert regret(mdp, pi_p, witness).regret < 1e-6
    _report("criterion 8: Nash construction (20 instances)", t0, 120.0)


def test_criterion_09_estimator_consistency():
    """Every sample objective evaluated on the exact-weighted enumeration
    matches its closed-form expectation within 1e-8 on 20 instances."""
    t0 = time.time()
    cfg = TrainConfig()
    for k in range(20):
        rng = np.random.default_rng([42, k])
        L = int(rng.integers(3, 6))
        mdp = random_mdp(rng, n_states=int(rng.integers(3, 5)),
                         n_actions=2, gamma=0.9)
        r = random_tabular_reward(rng, mdp, 0.8)
        pi_a, pi_p = random_policy(rng, mdp), random_policy(rng, mdp)
        adv = random_tabular_reward(rng, mdp, 0.5).table()
        est = estimate_objectives(exact_batch(mdp, pi_a, L),
                                  exact_batch(mdp, pi_p, L),
                                  pi_p, pi_a, r, cfg, mdp,
                                  advantage_table=adv)

        fh = replace(mdp, horizon=L)
        rho_a, rho_p = visitation(fh, pi_a).rho, visitation(fh, pi_p).rho
        table = r.table()
        xi = pi_p.probs / pi_a.probs
        j1 = float(np.einsum("s,sa,sa->", rho_a, pi_a.probs,
                             (xi - 1.0) * table))
        j2 = float(np.einsum("s,sa,sa->", rho_p, pi_p.probs,
                             (1.0 - pi_a.probs / pi_p.probs) * table))
        clip = lambda d, w: np.clip(d, 1 - w, 1 + w)
        d3 = np.exp(table) / pi_a.probs
        j3 = float(np.einsum("s,sa,sa->", rho_p, pi_p.probs, table)) - float(
            np.einsum("s,sa,sa->", rho_a, pi_a.probs,
                      np.minimum(d3 * table,
                                 clip(d3, cfg.surrogate_clip) * table)))
        d4 = np.exp(table) / pi_p.probs
        j4 = float(np.einsum("s,sa,sa->", rho_p, pi_p.probs, table)) - float(
            np.einsum("s,sa,sa->", rho_p, pi_p.probs,
                      np.minimum(d4 * table,
                                 clip(d4, cfg.surrogate_clip) * table)))
        jpa = float(np.einsum("s,sa,sa->", rho_a, pi_a.probs,
                              np.minimum(xi * adv,
                                         clip(xi, cfg.sigma) * adv)))
        kl = np.einsum("sa,sa->s", pi_a.probs,
                       np.log(pi_a.probs) - np.log(pi_p.probs))
        c1 = -mdp.gamma * kl.max() / (1 - mdp.gamma)
        max_r = np.abs(table).max()
        assert abs(est.j_r1 - (j1 + c1 * max_r)) <= 1e-8
        assert abs(est.j_r2 - (j2 - c1 * max_r)) <= 1e-8
        assert abs(est.j_r3 - j3) <= 1e-8
        assert abs(est.j_r4 - j4) <= 1e-8
        assert abs(est.j_pi_a - jpa) <= 1e-8
        assert est.j_pagar == est.j_r1 + est.j_r2
    _report("criterion 9: estimator consistency (20 instances)", t0, 60.0)


def test_criterion_10_training_smoke():
    """train_pagar on the worked example with delta 0.5 below the computed
    threshold lands pi_P(a2|s0) inside [0.45, 0.70] in at least 2 of 3 fixed
    seeds within 2000 iterations; identical seeds reproduce identical traces."""
    t0 = time.time()
    game = example1.Example1Game.build(omega_step=5e-3, p_step=5e-3)
    threshold, _ = game.success_threshold()
    delta = threshold - 0.5

    mdp = example1.build_mdp()
    demos = example1.demonstrations()
    cfg = TrainConfig(n_iters=500, batch_size=16, windowed_max_len=5,
                      reward_family=example1.reward_family(),
                      irl_kind=example1.irl_kind(), average_rewards=True,
                      delta=delta, lambda0=1e3, mu=0.0, ratio_cap=1e16,
                      lr_policy=0.3, lr_reward=0.05)
    assert cfg.n_iters <= 2000
    wins = 0
    finals = []
    for seed in (1, 2, 3):
        pol, _ = train_pagar(mdp, demos, cfg, seed=seed)
        p = float(pol.probs[0, 1])
        finals.append(p)
        wins += 0.45 <= p <= 0.70
    assert wins >= 2, finals

    _, trace_a = train_pagar(mdp, demos, cfg, seed=1)
    _, trace_b = train_pagar(mdp, demos, cfg, seed=1)
    assert trace_a == trace_b
    print(f"    final pi(a2|s0) per seed: {[round(p, 4) for p in finals]}")
    _report("criterion 10: training smoke", t0, 300.0)
