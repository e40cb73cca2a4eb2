import itertools

import numpy as np
import pytest

from pagar_lab import example1
from pagar_lab.alignment import (FAILURE_AVOIDANCE, INCOMPARABLE,
                                 LIPSCHITZ_FAILURE_AVOIDANCE,
                                 SUCCESS_GUARANTEE, TOTALLY_DOMINATES,
                                 WEAKLY_TOTALLY_DOMINATES, CustomPredicate,
                                 VisitThreshold, check_guarantee_conditions,
                                 classify_alignment, domination,
                                 feature_l1_metric,
                                 policy_trajectory_distribution,
                                 tabular_lipschitz, verify_bounds,
                                 wasserstein1, wasserstein_to_expert)
from pagar_lab.errors import AssumptionViolated
from pagar_lab.game import WindowedUtility
from pagar_lab.mdp import (DemonstrationSet, Mdp, RewardFunction,
                           TabularPolicy)
from pagar_lab.rand import random_mdp, random_policy, random_tabular_reward
from pagar_lab.solvers import utility


class TestClassifyAlignment:
    def test_utility_defined_predicate_is_aligned(self, rng):
        mdp = random_mdp(rng, n_states=4, n_actions=2)
        r = random_tabular_reward(rng, mdp)
        grid = [random_policy(rng, mdp) for _ in range(40)]
        values = [utility(mdp, pi, r) for pi in grid]
        cut = float(np.quantile(values, 0.6))
        phi = CustomPredicate(lambda m, pi: utility(m, pi, r) >= cut)
        res = classify_alignment(mdp, r, phi, grid)
        assert res.aligned
        assert res.s_interval[1] == pytest.approx(max(values))
        assert res.s_interval[0] >= cut - 1e-9
        if res.f_interval is not None:
            assert res.f_interval[1] < res.s_interval[0]

    def test_example1_omega1_is_misaligned(self):
        mdp = example1.build_mdp()
        r = example1.reward_omega(1.0)
        phi = example1.task_predicate()
        model = WindowedUtility(example1.WINDOW)
        grid = [example1.policy_with_p(p) for p in np.linspace(0, 1, 21)]
        res = classify_alignment(
            mdp, r, phi, grid,
            utility_fn=lambda m, pi, rr: model.value(m, pi, rr))
        assert not res.aligned  # the reward-optimal policy (p=1) fails Phi

    def test_example1_omega_half_is_aligned_on_the_grid(self):
        # an interior omega rewards both the loop and the exit: its top
        # utility sits inside the success interval
        mdp = example1.build_mdp()
        r = example1.reward_omega(0.55)
        phi = example1.task_predicate()
        model = WindowedUtility(example1.WINDOW)
        grid = [example1.policy_with_p(p) for p in np.linspace(0, 1, 41)]
        res = classify_alignment(
            mdp, r, phi, grid,
            utility_fn=lambda m, pi, rr: model.value(m, pi, rr))
        assert res.aligned == (
            phi.holds(mdp, grid[int(np.argmax(
                [model.value(mdp, pi, r) for pi in grid]))]))

    def test_constant_reward_with_mixed_outcomes_misaligned(self, rng):
        mdp = random_mdp(rng, n_states=3, n_actions=2)
        r = RewardFunction.tabular(np.full((3, 2), 0.7))
        grid = [random_policy(rng, mdp) for _ in range(6)]
        flags = iter([True, False] * 3)
        phi = CustomPredicate(lambda m, pi, _f=flags: next(_f))
        res = classify_alignment(mdp, r, phi, grid)
        assert not res.aligned

    def test_intervals_certify_and_failures_persist(self, rng):
        # Soundness: every grid policy with utility inside S succeeds and
        # inside F fails.  Persistence: new witnesses cannot turn a
        # misaligned reward aligned while the utility maximum is unchanged.
        # (A sparse grid's S may legitimately extend downward when new
        # succeeding witnesses fill utility gaps.)
        checked = 0
        while checked < 5:
            mdp = random_mdp(rng, n_states=4, n_actions=2)
            r = random_tabular_reward(rng, mdp)
            cut = utility(mdp, random_policy(rng, mdp), r)
            phi = CustomPredicate(lambda m, pi: utility(m, pi, r) >= cut)
            small = [random_policy(rng, mdp) for _ in range(15)]
            extras = [random_policy(rng, mdp) for _ in range(30)]
            u_small = max(utility(mdp, pi, r) for pi in small)
            extras = [pi for pi in extras if utility(mdp, pi, r) <= u_small]
            big = small + extras
            res_small = classify_alignment(mdp, r, phi, small)
            res_big = classify_alignment(mdp, r, phi, big)
            checked += 1
            for grid, res in ((small, res_small), (big, res_big)):
                if not res.aligned:
                    continue
                for pi in grid:
                    u = utility(mdp, pi, r)
                    if res.s_interval[0] - 1e-12 <= u <= res.s_interval[1] + 1e-12:
                        assert phi.holds(mdp, pi)
                    if res.f_interval and (res.f_interval[0] - 1e-12 <= u
                                           <= res.f_interval[1] + 1e-12):
                        assert not phi.holds(mdp, pi)
            if not res_small.aligned:
                assert not res_big.aligned


class TestDomination:
    def test_self_comparison_incomparable(self, rng):
        mdp = random_mdp(rng, n_states=3, n_actions=2)
        rewards = [random_tabular_reward(rng, mdp) for _ in range(3)]
        pi = random_policy(rng, mdp)
        assert domination(mdp, pi, pi, rewards) == INCOMPARABLE

    def test_constant_utilities_flagged(self, rng):
        mdp = random_mdp(rng, n_states=3, n_actions=2)
        rewards = [RewardFunction.tabular(np.zeros((3, 2))) for _ in range(2)]
        pi1, pi2 = random_policy(rng, mdp), random_policy(rng, mdp)
        with pytest.raises(AssumptionViolated):
            domination(mdp, pi1, pi2, rewards)

    def test_weak_chain_implies_total(self):
        # Constructed utilities: pi1 weakly below pi2 weakly below pi3.
        # Verified through a diagonal MDP where each policy pins one state.
        mdp_T = np.zeros((3, 3, 3))
        for s in range(3):
            for a in range(3):
                mdp_T[s, a, a] = 1.0
        mdp = Mdp(n_states=3, n_actions=3, transition=mdp_T,
                  initial=np.array([1.0, 0.0, 0.0]), gamma=0.5)
        # rewards chosen so that U ranges are [1,2], [2,3], [3,4] scaled
        r1 = RewardFunction.tabular(np.array([[0.5, 1.0, 1.5]] * 3))
        r2 = RewardFunction.tabular(np.array([[1.0, 1.5, 2.0]] * 3))
        rewards = [r1, r2]
        pis = [TabularPolicy.deterministic(mdp, [a] * 3) for a in range(3)]
        assert domination(mdp, pis[0], pis[1], rewards) == \
            WEAKLY_TOTALLY_DOMINATES
        assert domination(mdp, pis[1], pis[2], rewards) == \
            WEAKLY_TOTALLY_DOMINATES
        assert domination(mdp, pis[0], pis[2], rewards) == TOTALLY_DOMINATES

    def test_transitivity_of_total_domination(self, rng):
        for _ in range(30):
            mdp = random_mdp(rng, n_states=3, n_actions=2)
            rewards = [random_tabular_reward(rng, mdp) for _ in range(3)]
            pis = [random_policy(rng, mdp) for _ in range(3)]
            try:
                d01 = domination(mdp, pis[0], pis[1], rewards)
                d12 = domination(mdp, pis[1], pis[2], rewards)
                d02 = domination(mdp, pis[0], pis[2], rewards)
            except AssumptionViolated:
                continue
            if d01 == TOTALLY_DOMINATES and d12 == TOTALLY_DOMINATES:
                assert d02 == TOTALLY_DOMINATES


def _vertex_w1_oracle(p_a, p_b, cost):
    """Exact LP optimum by enumerating basic feasible couplings (<=3x3)."""
    n, m = cost.shape
    cells = [(i, j) for i in range(n) for j in range(m)]
    best = np.inf
    n_basis = n + m - 1
    for basis in itertools.combinations(cells, n_basis):
        a = []
        b = []
        for i in range(n):
            row = np.zeros(n_basis)
            for k, (bi, bj) in enumerate(basis):
                if bi == i:
                    row[k] = 1.0
            a.append(row)
            b.append(p_a[i])
        for j in range(m):
            row = np.zeros(n_basis)
            for k, (bi, bj) in enumerate(basis):
                if bj == j:
                    row[k] = 1.0
            a.append(row)
            b.append(p_b[j])
        a = np.array(a)
        b = np.array(b)
        sol, res, rank, _ = np.linalg.lstsq(a, b, rcond=None)
        if np.any(sol < -1e-9) or np.linalg.norm(a @ sol - b) > 1e-9:
            continue
        best = min(best, sum(w * cost[i, j]
                             for w, (i, j) in zip(sol, basis)))
    return best


class TestWasserstein:
    def test_identical_distributions_zero(self):
        items = ["x", "y"]
        cost = np.array([[0.0, 1.0], [1.0, 0.0]])
        rep = wasserstein1((items, [0.3, 0.7]), (items, [0.3, 0.7]), cost)
        assert rep.w1 == pytest.approx(0.0, abs=1e-10)

    def test_two_point_masses(self):
        rep = wasserstein1((["a"], [1.0]), (["b"], [1.0]),
                           np.array([[2.5]]))
        assert rep.w1 == pytest.approx(2.5)

    def test_three_point_vs_vertex_oracle(self, rng):
        for _ in range(10):
            p_a = rng.dirichlet(np.ones(3))
            p_b = rng.dirichlet(np.ones(3))
            cost = rng.uniform(0, 2, size=(3, 3))
            rep = wasserstein1((list("abc"), p_a), (list("xyz"), p_b), cost)
            oracle = _vertex_w1_oracle(p_a, p_b, cost)
            assert rep.w1 == pytest.approx(oracle, abs=1e-7)
            # coupling marginals match
            assert np.allclose(rep.coupling.sum(axis=1), p_a, atol=1e-8)
            assert np.allclose(rep.coupling.sum(axis=0), p_b, atol=1e-8)

    def test_triangle_inequality(self, rng):
        pts = rng.normal(size=(3, 2))
        metric = np.array([[np.linalg.norm(x - y) for y in pts] for x in pts])
        dists = [rng.dirichlet(np.ones(3)) for _ in range(3)]
        items = list(range(3))
        w = {}
        for i in range(3):
            for j in range(3):
                w[(i, j)] = wasserstein1((items, dists[i]), (items, dists[j]),
                                         metric).w1
        for i, j, k in itertools.permutations(range(3), 3):
            assert w[(i, k)] <= w[(i, j)] + w[(j, k)] + 1e-8

    def test_feature_metric_lipschitz_consistency(self):
        # |r(tau) - r(tau')| <= max|w| * d for linear rewards
        mdp = example1.build_mdp()
        f1, f2 = example1.features()
        metric = feature_l1_metric((f1, f2), mdp.gamma)
        taus, _ = policy_trajectory_distribution(
            mdp, example1.policy_with_p(0.5), example1.WINDOW)
        r = example1.reward_omega(0.7)
        lip = tabular_lipschitz(r, taus, metric, mdp.gamma)
        assert lip <= max(abs(r.weights[0]), abs(r.weights[1])) + 1e-9

    def test_wasserstein_to_expert_zero_for_matching_policy(self):
        # expert = exact trajectory distribution of a known policy
        mdp = example1.build_mdp()
        pol = example1.policy_with_p(0.5)
        taus, probs = policy_trajectory_distribution(mdp, pol, example1.WINDOW)
        keep = probs > 0
        demos = DemonstrationSet(
            tuple(t for t, k in zip(taus, keep) if k),
            np.asarray(probs[keep]))
        f1, f2 = example1.features()
        metric = feature_l1_metric((f1, f2), mdp.gamma)
        grid = [example1.policy_with_p(p) for p in (0.0, 0.5, 1.0)]
        w_e, best_pi, _ = wasserstein_to_expert(mdp, demos, grid, metric,
                                                example1.WINDOW)
        assert w_e == pytest.approx(0.0, abs=1e-8)
        assert best_pi.probs[0, 1] == pytest.approx(0.5)


class TestVerifyBounds:
    def test_identical_policies_zero_slack(self, rng):
        mdp = random_mdp(rng, n_states=4, n_actions=2, gamma=0.9)
        r = random_tabular_reward(rng, mdp, 1.5)
        from pagar_lab.solvers import solve_soft
        pi2 = solve_soft(mdp, r).policy
        rep = verify_bounds(mdp, r, pi2)
        assert rep.alpha == pytest.approx(0.0, abs=1e-8)
        assert rep.lhs_on_pi1 == pytest.approx(0.0, abs=1e-7)
        assert rep.lhs_on_pi2 == pytest.approx(0.0, abs=1e-7)
        assert rep.passed

    def test_disjoint_point_masses_give_alpha_one(self, rng):
        # total variation between deterministic policies disagreeing at a
        # state is 1 at that state
        mdp = random_mdp(rng, n_states=3, n_actions=2, gamma=0.9)
        diff = TabularPolicy.deterministic(mdp, [1, 0, 0])
        r = random_tabular_reward(rng, mdp, 20.0)  # sharp soft optimum
        rep = verify_bounds(mdp, r, diff)
        from pagar_lab.solvers import solve_soft
        pi2 = solve_soft(mdp, r).policy
        tv = 0.5 * np.abs(diff.probs - pi2.probs).sum(axis=1).max()
        assert rep.alpha == pytest.approx(tv)

    def test_random_instances_pass(self, rng):
        for _ in range(25):
            mdp = random_mdp(rng, n_states=5, n_actions=3, gamma=0.9)
            r = random_tabular_reward(rng, mdp, 2.0)
            rep = verify_bounds(mdp, r, random_policy(rng, mdp))
            assert rep.passed
            assert rep.slack_on_pi1 >= 0.0
            assert rep.slack_on_pi2 >= 0.0


class TestGuaranteeCheckers:
    def _success_indicator_instance(self, rng, n_rewards=2):
        """All rewards equal and aligned with wide gaps; the optimum succeeds."""
        mdp = random_mdp(rng, n_states=4, n_actions=2)
        r = random_tabular_reward(rng, mdp)
        grid = [random_policy(rng, mdp) for _ in range(30)]
        values = np.array([utility(mdp, pi, r) for pi in grid])
        cut = float(np.quantile(values, 0.8))
        phi = CustomPredicate(lambda m, pi: utility(m, pi, r) >= cut)
        return mdp, [r] * n_rewards, phi, grid

    def test_identical_aligned_rewards_pass_t42(self, rng):
        hits = 0
        for _ in range(20):
            mdp, rewards, phi, grid = self._bimodal_instance(rng)
            rewards = rewards * 2  # duplicated reward list, wide gaps
            rep = check_guarantee_conditions(mdp, rewards, phi, grid, FAILURE_AVOIDANCE)
            if rep.premise_holds:
                hits += 1
                assert rep.conclusion_holds
        assert hits > 0

    def test_sign_pair_fails_premise(self, rng):
        mdp = random_mdp(rng, n_states=4, n_actions=2)
        r = random_tabular_reward(rng, mdp)
        neg = RewardFunction.tabular(-r.table())
        grid = [random_policy(rng, mdp) for _ in range(30)]
        values = np.array([utility(mdp, pi, r) for pi in grid])
        cut = float(np.quantile(values, 0.7))
        phi = CustomPredicate(lambda m, pi: utility(m, pi, r) >= cut)
        rep = check_guarantee_conditions(mdp, [r, neg], phi, grid, FAILURE_AVOIDANCE)
        # no policy performs well under both r and -r
        assert not rep.premise_holds
        assert rep.passed  # vacuously

    def _bimodal_instance(self, rng):
        """Two tight utility clusters far apart: narrow S and F, wide gap."""
        from pagar_lab.solvers import solve_standard
        mdp = random_mdp(rng, n_states=4, n_actions=2)
        r = random_tabular_reward(rng, mdp)
        best, _ = solve_standard(mdp, r)
        worst, _ = solve_standard(
            mdp, RewardFunction.tabular(-r.table()))

        def perturb(pi, eps):
            probs = (1 - eps) * pi.probs + eps * np.full_like(pi.probs, 0.5)
            return TabularPolicy(probs / probs.sum(axis=1, keepdims=True))

        grid = [perturb(best, e) for e in (0.0, 0.01, 0.02, 0.03)] + \
               [perturb(worst, e) for e in (0.0, 0.01, 0.02, 0.03)]
        values = np.array([utility(mdp, pi, r) for pi in grid])
        mid = 0.5 * (values.max() + values.min())
        phi = CustomPredicate(lambda m, pi: utility(m, pi, r) >= mid)
        return mdp, [r], phi, grid

    def test_t43_premise_implies_success(self, rng):
        # generator draws bimodal instances whose premise holds, then checks
        # the conclusion end-to-end
        hits = 0
        for _ in range(20):
            mdp, rewards, phi, grid = self._bimodal_instance(rng)
            rep = check_guarantee_conditions(mdp, rewards, phi, grid, SUCCESS_GUARANTEE)
            if rep.premise_holds:
                hits += 1
                assert rep.conclusion_holds
        assert hits > 0

    def test_c44_needs_lipschitz_inputs(self, rng):
        mdp, rewards, phi, grid = self._success_indicator_instance(rng)
        with pytest.raises(ValueError):
            check_guarantee_conditions(mdp, rewards, phi, grid,
                                       LIPSCHITZ_FAILURE_AVOIDANCE)

    def test_c44_with_lipschitz_and_we(self, rng):
        mdp, rewards, phi, grid = self._success_indicator_instance(rng)
        rewards = [RewardFunction.tabular(r.table(), lipschitz=1.0)
                   for r in rewards]
        rep = check_guarantee_conditions(mdp, rewards, phi, grid,
                                         LIPSCHITZ_FAILURE_AVOIDANCE,
                                         delta=0.0, w_e=0.0)
        assert rep.passed
