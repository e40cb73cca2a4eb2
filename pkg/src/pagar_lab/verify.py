"""Brute-force verification suites over seeded random instances.

Each check returns a result dict with a boolean "passed"; `run_suite`
aggregates them over n random instances and reports the first
counterexample.  The CLI's verify command and the acceptance tests both
drive this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .alignment import verify_bounds
from .game import (argmax_mixed_utility_set, minimax_sets_from_matrix,
                   simplex_policy_grid, utility_matrix)
from .mdp import Mdp, RewardFunction, TabularPolicy
from .rand import random_mdp, random_policy, random_tabular_reward
from .solvers import (entropy, expected_discounted, soft_policy_evaluation,
                      solve_soft, utility)

IDENTITY_ATOL = 1e-8

CONVEXITY_ATOL = 1e-9


def check_policy_difference_identity(mdp: Mdp, pi1: TabularPolicy,
                                     pi2: TabularPolicy, r: RewardFunction) -> dict:
    """U_r(pi1) - U_r(pi2) = E_{pi1}[sum gamma^t A_{pi2}] + H(pi2), exactly."""
    _, _, adv = soft_policy_evaluation(mdp, pi2, r)
    lhs = utility(mdp, pi1, r) - utility(mdp, pi2, r)
    rhs = expected_discounted(mdp, pi1, adv) + entropy(mdp, pi2)
    err = abs(lhs - rhs)
    return {"name": "policy_difference_identity", "error": err,
            "passed": err <= IDENTITY_ATOL}


def check_soft_optimal_entropy_identity(mdp: Mdp, r: RewardFunction) -> dict:
    """For the soft-optimal policy, E_pi[sum gamma^t A_pi] = -H(pi).

    (The sign follows from the pairwise difference identity at pi1 = pi2;
    the source's displayed remark carries a sign typo that its own proof
    corrects.)
    """
    sol = solve_soft(mdp, r)
    pi = sol.policy
    _, _, adv = soft_policy_evaluation(mdp, pi, r)
    lhs = expected_discounted(mdp, pi, adv)
    rhs = -entropy(mdp, pi)
    err = abs(lhs - rhs)
    return {"name": "soft_optimal_entropy_identity", "error": err,
            "passed": err <= IDENTITY_ATOL}


def check_regret_bounds(mdp: Mdp, pi1: TabularPolicy, r: RewardFunction,
                        corrupt: bool = False) -> dict:
    """Both advantage-gap bounds hold with non-negative slack."""
    rep = verify_bounds(mdp, r, pi1)
    slack1, slack2 = rep.slack_on_pi1, rep.slack_on_pi2
    if corrupt:  # negative-control mode: deliberately shrink the bound
        slack1 = rep.lhs_on_pi1 - 0.5 * rep.bound_on_pi1 - 1.0
        slack1, slack2 = -abs(slack1), slack2
    passed = slack1 >= -1e-12 and slack2 >= -1e-12
    return {"name": "regret_bounds", "slack1": slack1, "slack2": slack2,
            "alpha": rep.alpha, "epsilon": rep.epsilon, "passed": passed}


def check_decision_rule_equivalence(mdp: Mdp, rewards, policies) -> dict:
    """argmin max-regret set == argmax mixed-utility set on the finite game."""
    u = utility_matrix(mdp, policies, rewards)
    regret_set, _ = minimax_sets_from_matrix(u)
    mixed_set, _ = argmax_mixed_utility_set(mdp, rewards, policies, u_matrix=u)
    return {"name": "decision_rule_equivalence",
            "regret_set": sorted(regret_set), "mixed_set": sorted(mixed_set),
            "passed": regret_set == mixed_set}


def check_convexity(mdp: Mdp, rewards, pi1: TabularPolicy, pi2: TabularPolicy,
                    a: float) -> dict:
    """Worst-case regret is convex under episode-level policy mixtures.

    The mixture selects pi1 with probability a at episode start, so its
    utility under every reward is the a-blend of the component utilities.
    """
    from .solvers import solve_standard
    worst_mix, worst_1, worst_2 = -np.inf, -np.inf, -np.inf
    for r in rewards:
        _, v = solve_standard(mdp, r)
        u_best = float(mdp.initial @ v)
        u1, u2 = utility(mdp, pi1, r), utility(mdp, pi2, r)
        worst_1 = max(worst_1, u_best - u1)
        worst_2 = max(worst_2, u_best - u2)
        worst_mix = max(worst_mix, u_best - (a * u1 + (1.0 - a) * u2))
    gap = a * worst_1 + (1.0 - a) * worst_2 - worst_mix
    return {"name": "convexity", "gap": gap, "passed": gap >= -CONVEXITY_ATOL}


def check_offset_invariance(mdp: Mdp, rewards, policies,
                            rng: np.random.Generator) -> dict:
    """Subtracting any f(r) from every utility leaves the argmin set unchanged."""
    u = utility_matrix(mdp, policies, rewards)
    offsets = rng.uniform(-5.0, 5.0, size=len(rewards))
    base, _ = minimax_sets_from_matrix(u)
    shifted, _ = minimax_sets_from_matrix(u, offsets=offsets)
    return {"name": "offset_invariance", "base": sorted(base),
            "shifted": sorted(shifted), "passed": base == shifted}


@dataclass
class SuiteResult:
    n_instances: int
    checks_run: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {"n_instances": self.n_instances, "checks_run": self.checks_run,
                "passed": self.passed,
                "first_counterexample": self.failures[0] if self.failures else None,
                "n_failures": len(self.failures)}


def _instance_checks(seed: int, k: int, corrupt: bool) -> list:
    rng = np.random.default_rng([seed, k])
    mdp = random_mdp(rng, n_states=int(rng.integers(3, 7)),
                     n_actions=int(rng.integers(2, 4)), gamma=0.9)
    r = random_tabular_reward(rng, mdp, scale=2.0)
    pi1, pi2 = random_policy(rng, mdp), random_policy(rng, mdp)

    checks = [
        check_policy_difference_identity(mdp, pi1, pi2, r),
        check_soft_optimal_entropy_identity(mdp, r),
        check_regret_bounds(mdp, pi1, r, corrupt=corrupt),
        check_convexity(mdp, [r, random_tabular_reward(rng, mdp, 2.0)],
                        pi1, pi2, float(rng.random())),
    ]
    small = random_mdp(rng, n_states=3, n_actions=2, gamma=0.9)
    rewards = [random_tabular_reward(rng, small, 1.0) for _ in range(3)]
    policies = simplex_policy_grid(small, step=0.5)
    checks.append(check_decision_rule_equivalence(small, rewards, policies))
    checks.append(check_offset_invariance(small, rewards, policies, rng))
    return checks


def run_suite(n_instances: int, seed: int, corrupt: bool = False,
              max_threads: Optional[int] = None) -> SuiteResult:
    """Run every identity/bound/equivalence check over random instances.

    Instances are seeded independently as (seed, k), so results do not
    depend on the thread count.  With corrupt=True the bound check is
    deliberately broken (negative control for the CLI's exit-code contract).
    """
    result = SuiteResult(n_instances=n_instances)
    if max_threads is None:
        import os
        max_threads = int(os.environ.get("PAGAR_LAB_THREADS", "1"))
    if max_threads > 1 and n_instances > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=max_threads) as pool:
            all_checks = list(pool.map(
                lambda k: _instance_checks(seed, k, corrupt), range(n_instances)))
    else:
        all_checks = [_instance_checks(seed, k, corrupt)
                      for k in range(n_instances)]
    for k, checks in enumerate(all_checks):
        for chk in checks:
            result.checks_run += 1
            if not chk["passed"]:
                chk["instance"] = k
                result.failures.append(chk)
    return result
