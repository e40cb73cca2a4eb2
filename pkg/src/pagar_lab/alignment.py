"""Task-reward alignment, domination relations, Wasserstein machinery, and
brute-force verification of the advantage-based regret bounds.

Alignment is classified over a finite policy grid, so "aligned" is always
grid-relative; the grid density travels with the result.  Interval semantics:
a reward is aligned when the top utility level of the grid contains only
succeeding policies; the success interval S extends down through consecutive
all-success levels, and the failure interval F climbs up through consecutive
all-failure levels while staying strictly below inf S.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import AssumptionViolated, InfeasibleLP
from .mdp import (DemonstrationSet, Mdp, RewardFunction, TabularPolicy,
                  Trajectory, enumerate_trajectories, trajectory_probability,
                  trajectory_return, event_probability)
from .solvers import (soft_policy_evaluation, solve_soft, utility,
                      visitation)

LEVEL_ATOL = 1e-9


# ---------------------------------------------------------------------------
# task predicates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VisitThreshold:
    """Success iff every target state is visited with at least its required
    probability within its step window (state indices 0..max_len)."""

    targets: tuple  # of (state, min_probability, max_len)

    def __post_init__(self):
        targets = tuple((int(s), float(p), int(m)) for s, p, m in self.targets)
        if any(not 0.0 <= p <= 1.0 for _, p, _ in targets):
            raise ValueError("visit probabilities must lie in [0, 1]")
        object.__setattr__(self, "targets", targets)

    def holds(self, mdp: Mdp, pi: TabularPolicy) -> bool:
        return all(
            event_probability(mdp, pi, s, m) >= p - 1e-12
            for s, p, m in self.targets)


@dataclass(frozen=True)
class CustomPredicate:
    """Caller-supplied boolean over (mdp, policy)."""

    fn: Callable[[Mdp, TabularPolicy], bool]

    def holds(self, mdp: Mdp, pi: TabularPolicy) -> bool:
        return bool(self.fn(mdp, pi))


# ---------------------------------------------------------------------------
# alignment classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlignmentResult:
    aligned: bool
    s_interval: Optional[tuple]
    f_interval: Optional[tuple]
    u_range: tuple
    grid_size: int

    def to_dict(self) -> dict:
        return {
            "aligned": self.aligned,
            "s_interval": list(self.s_interval) if self.s_interval else None,
            "f_interval": list(self.f_interval) if self.f_interval else None,
            "u_range": list(self.u_range),
            "grid_size": self.grid_size,
        }


def _utility_levels(values: np.ndarray, atol: float = LEVEL_ATOL):
    """Group sorted utilities into equal-value levels (descending)."""
    order = np.argsort(values)[::-1]
    levels = []
    for i in order:
        if levels and abs(values[i] - levels[-1][0]) <= atol:
            levels[-1][1].append(i)
        else:
            levels.append([values[i], [i]])
    return levels


def classify_alignment(mdp: Mdp, r: RewardFunction, phi,
                       policy_grid: Sequence[TabularPolicy],
                       utility_fn: Optional[Callable] = None) -> AlignmentResult:
    """Classify task-reward alignment of r over a finite policy grid.

    `utility_fn(mdp, pi, r)` defaults to the exact DP utility; the worked
    example passes its windowed evaluator instead.
    """
    if not policy_grid:
        raise ValueError("policy grid must be non-empty")
    ufn = utility_fn or utility
    values = np.array([ufn(mdp, pi, r) for pi in policy_grid])
    succ = np.array([phi.holds(mdp, pi) for pi in policy_grid])
    levels = _utility_levels(values)
    u_range = (float(values.min()), float(values.max()))

    # success interval: consecutive all-success levels from the top
    s_interval = None
    if all(succ[i] for i in levels[0][1]):
        lo = levels[0][0]
        for value, idxs in levels:
            if not all(succ[i] for i in idxs):
                break
            lo = value
        s_interval = (float(lo), float(levels[0][0]))

    # failure interval: consecutive all-failure levels from the bottom,
    # strictly below inf S
    f_interval = None
    if s_interval is not None:
        hi = None
        for value, idxs in reversed(levels):
            if value >= s_interval[0] - LEVEL_ATOL:
                break
            if all(not succ[i] for i in idxs):
                hi = value
            else:
                break
        if hi is not None:
            f_interval = (float(levels[-1][0]), float(hi))

    return AlignmentResult(aligned=s_interval is not None,
                           s_interval=s_interval, f_interval=f_interval,
                           u_range=u_range, grid_size=len(policy_grid))


# ---------------------------------------------------------------------------
# domination
# ---------------------------------------------------------------------------

TOTALLY_DOMINATES = "TotallyDominates"
WEAKLY_TOTALLY_DOMINATES = "WeaklyTotallyDominates"
INCOMPARABLE = "Incomparable"


def domination(mdp: Mdp, pi1: TabularPolicy, pi2: TabularPolicy,
               rewards: Sequence[RewardFunction], utility_model=None) -> str:
    """Whether pi2 (weakly) totally dominates pi1 w.r.t. the reward list.

    TotallyDominates iff max_r U_r(pi1) < min_r U_r(pi2); the weak form uses
    <=.  A policy with constant utility across the rewards violates the
    standing assumption and raises instead of being classified.
    """
    from .game import StandardUtility
    model = utility_model or StandardUtility()
    u1 = np.array([model.value(mdp, pi1, r) for r in rewards])
    u2 = np.array([model.value(mdp, pi2, r) for r in rewards])
    for name, u in (("pi1", u1), ("pi2", u2)):
        if u.max() - u.min() <= 1e-9:
            raise AssumptionViolated(f"{name} has constant utility across rewards")
    if u1.max() < u2.min():
        return TOTALLY_DOMINATES
    if u1.max() <= u2.min():
        return WEAKLY_TOTALLY_DOMINATES
    return INCOMPARABLE


# ---------------------------------------------------------------------------
# Wasserstein-1 machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WassersteinReport:
    w1: float
    coupling: np.ndarray
    metric_name: str


def wasserstein1(dist_a, dist_b, metric, metric_name: str = "custom") -> WassersteinReport:
    """Exact W1 between two finite distributions via linear programming.

    Args:
        dist_a, dist_b: (items, probabilities) pairs; probabilities must each
            sum to 1.
        metric: either a (len_a, len_b) cost matrix or a symmetric
            non-negative callable metric(x, y) with zero diagonal.
    """
    items_a, p_a = dist_a
    items_b, p_b = dist_b
    p_a = np.asarray(p_a, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    if abs(p_a.sum() - 1.0) > 1e-9 or abs(p_b.sum() - 1.0) > 1e-9:
        raise ValueError("marginals must sum to 1")
    if callable(metric):
        cost = np.array([[metric(x, y) for y in items_b] for x in items_a])
    else:
        cost = np.asarray(metric, dtype=float)
    n, m = cost.shape

    a_eq = []
    b_eq = []
    for i in range(n):
        row = np.zeros((n, m))
        row[i, :] = 1.0
        a_eq.append(row.ravel())
        b_eq.append(p_a[i])
    for j in range(m):
        col = np.zeros((n, m))
        col[:, j] = 1.0
        a_eq.append(col.ravel())
        b_eq.append(p_b[j])
    res = optimize.linprog(cost.ravel(), A_eq=np.array(a_eq), b_eq=np.array(b_eq),
                           bounds=[(0, None)] * (n * m), method="highs")
    if not res.success:  # cannot occur with matched masses; guarded
        raise InfeasibleLP(res.message)
    coupling = res.x.reshape(n, m)
    return WassersteinReport(w1=float(res.fun), coupling=coupling,
                             metric_name=metric_name)


def trajectory_feature_vector(r_features, tau: Trajectory, gamma: float) -> np.ndarray:
    """Discounted per-feature returns of a trajectory (final state counted)."""
    return np.array([
        trajectory_return(RewardFunction.tabular(np.asarray(f, dtype=float)),
                          tau, gamma, include_final=True)
        for f in r_features])


def feature_l1_metric(r_features, gamma: float):
    """L1 distance between discounted feature-expectation vectors.

    Under this trajectory metric, max|w| is a literal Lipschitz constant of
    any linear reward with weights w: |r(tau) - r(tau')| <= max|w| * d.
    """
    feats = tuple(np.asarray(f, dtype=float) for f in r_features)

    def metric(tau_a: Trajectory, tau_b: Trajectory) -> float:
        va = trajectory_feature_vector(feats, tau_a, gamma)
        vb = trajectory_feature_vector(feats, tau_b, gamma)
        return float(np.abs(va - vb).sum())

    return metric


def tabular_lipschitz(r: RewardFunction, trajectories: Sequence[Trajectory],
                      metric, gamma: float) -> float:
    """Tightest Lipschitz constant of r over all support pairs of `metric`."""
    returns = [trajectory_return(r, t, gamma, include_final=True)
               for t in trajectories]
    best = 0.0
    for i in range(len(trajectories)):
        for j in range(i + 1, len(trajectories)):
            d = metric(trajectories[i], trajectories[j])
            if d > 1e-12:
                best = max(best, abs(returns[i] - returns[j]) / d)
    return best


def policy_trajectory_distribution(mdp: Mdp, pi: TabularPolicy, max_len: int):
    """Finite trajectory distribution of pi over the halted enumeration."""
    pairs = enumerate_trajectories(mdp, max_len)
    taus = [t for t, _ in pairs]
    probs = np.array([trajectory_probability(mdp, pi, t) for t in taus])
    return taus, probs


def demo_trajectory_distribution(demos: DemonstrationSet):
    return list(demos.trajectories), demos.weight_vector()


def wasserstein_to_expert(mdp: Mdp, demos: DemonstrationSet,
                          policy_grid: Sequence[TabularPolicy], metric,
                          max_len: int, metric_name: str = "feature_l1"):
    """W_E = min over the policy grid of W1(trajectories(pi), E).

    Returns:
        (w_e, best policy, its WassersteinReport)
    """
    demo_items, demo_probs = demo_trajectory_distribution(demos)
    best = None
    for pi in policy_grid:
        taus, probs = policy_trajectory_distribution(mdp, pi, max_len)
        rep = wasserstein1((taus, probs), (demo_items, demo_probs), metric,
                           metric_name=metric_name)
        if best is None or rep.w1 < best[2].w1:
            best = (rep.w1, pi, rep)
    return best


# ---------------------------------------------------------------------------
# advantage-based regret bound verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    """Both bound checks with slacks; passed iff both slacks >= 0."""

    lhs_on_pi1: float
    bound_on_pi1: float
    lhs_on_pi2: float
    bound_on_pi2: float
    alpha: float
    epsilon: float

    @property
    def slack_on_pi1(self) -> float:
        return self.bound_on_pi1 - self.lhs_on_pi1

    @property
    def slack_on_pi2(self) -> float:
        return self.bound_on_pi2 - self.lhs_on_pi2

    @property
    def passed(self) -> bool:
        return self.slack_on_pi1 >= -1e-12 and self.slack_on_pi2 >= -1e-12

    def to_dict(self) -> dict:
        return {
            "lhs_on_pi1": self.lhs_on_pi1, "bound_on_pi1": self.bound_on_pi1,
            "lhs_on_pi2": self.lhs_on_pi2, "bound_on_pi2": self.bound_on_pi2,
            "alpha": self.alpha, "epsilon": self.epsilon,
            "slack_on_pi1": self.slack_on_pi1,
            "slack_on_pi2": self.slack_on_pi2, "passed": self.passed,
        }


def verify_bounds(mdp: Mdp, r: RewardFunction, pi1: TabularPolicy) -> BoundReport:
    """Exact check of the two advantage-gap regret bounds.

    pi2 is the soft-optimal policy under r (computed internally).  With
    alpha = max_s TV(pi1(.|s), pi2(.|s)) and eps = max |A_pi2|, verifies

      |U(pi1) - U(pi2) - sum_t gamma^t E_{s~pi1}[dA(s)]| <= 2 a g e/(1-g)^2
      |U(pi1) - U(pi2) - sum_t gamma^t E_{s~pi2}[dA(s)]| <= 2 a g (2a+1) e/(1-g)^2

    where dA(s) is the expected pi2-advantage gap between acting by pi1 and
    by pi2.  All quantities are evaluated exactly with linear solves.
    """
    sol = solve_soft(mdp, r)
    pi2 = sol.policy
    _, _, adv = soft_policy_evaluation(mdp, pi2, r)

    diff = pi1.probs - pi2.probs
    delta_a = np.einsum("sa,sa->s", diff, adv)          # dA(s)
    alpha = float(0.5 * np.abs(diff).sum(axis=1).max())
    eps = float(np.abs(adv).max())

    u1 = utility(mdp, pi1, r)
    u2 = utility(mdp, pi2, r)
    rho1 = visitation(mdp, pi1).rho
    rho2 = visitation(mdp, pi2).rho
    lhs1 = abs(u1 - u2 - float(rho1 @ delta_a))
    lhs2 = abs(u1 - u2 - float(rho2 @ delta_a))
    g = mdp.gamma
    bound1 = 2.0 * alpha * g * eps / (1.0 - g) ** 2
    bound2 = 2.0 * alpha * g * (2.0 * alpha + 1.0) * eps / (1.0 - g) ** 2
    return BoundReport(lhs_on_pi1=lhs1, bound_on_pi1=bound1,
                       lhs_on_pi2=lhs2, bound_on_pi2=bound2,
                       alpha=alpha, epsilon=eps)


# ---------------------------------------------------------------------------
# theorem condition checkers
# ---------------------------------------------------------------------------

FAILURE_AVOIDANCE = "failure_avoidance"
SUCCESS_GUARANTEE = "success_guarantee"
LIPSCHITZ_FAILURE_AVOIDANCE = "lipschitz_failure_avoidance"
LIPSCHITZ_SUCCESS_GUARANTEE = "lipschitz_success_guarantee"


@dataclass(frozen=True)
class GuaranteeReport:
    which: str
    premise_holds: bool
    conclusion_holds: Optional[bool]
    details: dict

    @property
    def passed(self) -> bool:
        """Vacuously true when the premise fails."""
        return (not self.premise_holds) or bool(self.conclusion_holds)

    def to_dict(self) -> dict:
        return {"which": self.which, "premise_holds": self.premise_holds,
                "conclusion_holds": self.conclusion_holds,
                "passed": self.passed, "details": self.details}


def _interval_width(iv) -> float:
    return iv[1] - iv[0] if iv is not None else 0.0


def _gap(res: AlignmentResult) -> float:
    """inf S - sup F; +inf when F is absent."""
    if res.s_interval is None:
        return np.nan
    if res.f_interval is None:
        return np.inf
    return res.s_interval[0] - res.f_interval[1]


def check_guarantee_conditions(mdp: Mdp, rewards: Sequence[RewardFunction],
                               phi, policy_grid: Sequence[TabularPolicy],
                               which: str,
                               utility_fn: Optional[Callable] = None,
                               delta: Optional[float] = None,
                               w_e: Optional[float] = None) -> GuaranteeReport:
    """Evaluate the premises and conclusion of one guarantee over the grid.

    The failure-avoidance and success-guarantee checks use the interval
    geometry alone; their Lipschitz variants replace the policy-existence
    premise with the bound L_r * W_E - delta, which requires `delta` and
    `w_e`.  The minimax protagonist for the conclusion is the brute-force
    argmin of worst-case regret over the same grid and reward list.
    """
    ufn = utility_fn or utility
    results = [classify_alignment(mdp, r, phi, policy_grid, utility_fn=ufn)
               for r in rewards]
    aligned = [i for i, res in enumerate(results) if res.aligned]
    misaligned = [i for i, res in enumerate(results) if not res.aligned]
    details = {"aligned": aligned, "misaligned": misaligned}
    if not aligned:
        return GuaranteeReport(which, False, None, details)

    min_gap = min(_gap(results[i]) for i in aligned)
    max_f_width = max((_interval_width(results[i].f_interval) for i in aligned),
                      default=0.0)
    max_s_width = max(_interval_width(results[i].s_interval) for i in aligned)
    min_s_width = min(_interval_width(results[i].s_interval) for i in aligned)
    cond1 = (max_f_width < min_gap) and (max_s_width < min_gap)
    details.update(min_gap=min_gap, max_f_width=max_f_width,
                   max_s_width=max_s_width, min_s_width=min_s_width,
                   cond1=cond1)

    u = np.array([[ufn(mdp, pi, r) for r in rewards] for pi in policy_grid])
    best = u.max(axis=0)

    def in_interval(x, iv):
        return iv is not None and iv[0] - LEVEL_ATOL <= x <= iv[1] + LEVEL_ATOL

    if which == FAILURE_AVOIDANCE:
        witness = None
        for i in range(len(policy_grid)):
            ok_aligned = all(in_interval(u[i, j], results[j].s_interval)
                             for j in aligned)
            ok_mis = all(best[j] - u[i, j] < min_gap for j in misaligned)
            if ok_aligned and ok_mis:
                witness = i
                break
        premise = cond1 and witness is not None
        details["witness_policy"] = witness
    elif which == SUCCESS_GUARANTEE:
        witness = None
        for i in range(len(policy_grid)):
            if all(best[j] - u[i, j] < min_s_width for j in range(len(rewards))):
                witness = i
                break
        premise = cond1 and witness is not None
        details["witness_policy"] = witness
    elif which in (LIPSCHITZ_FAILURE_AVOIDANCE,
                   LIPSCHITZ_SUCCESS_GUARANTEE):
        if delta is None or w_e is None:
            raise ValueError("corollary checks need delta and w_e")
        lips = []
        for r in rewards:
            if r.lipschitz is None:
                raise ValueError("corollary checks need Lipschitz bounds on rewards")
            lips.append(r.lipschitz)
        if which == LIPSCHITZ_FAILURE_AVOIDANCE:
            ok_aligned = all(lips[j] * w_e - delta <= _interval_width(results[j].s_interval)
                             for j in aligned)
            ok_mis = all(lips[j] * w_e - delta < min_gap for j in misaligned)
            premise = cond1 and ok_aligned and ok_mis
        else:
            premise = cond1 and all(
                lips[j] * w_e - delta <= min_s_width for j in range(len(rewards)))
        details["lipschitz"] = lips
    else:
        raise ValueError(f"unknown guarantee id: {which}")

    if not premise:
        return GuaranteeReport(which, False, None, details)

    # conclusion: the minimax protagonist avoids F (failure avoidance) or
    # lands in S (success guarantee) for every aligned reward
    regrets = (best[None, :] - u).max(axis=1)
    i_star = int(np.argmin(regrets))
    details["protagonist"] = i_star
    if which in (FAILURE_AVOIDANCE, LIPSCHITZ_FAILURE_AVOIDANCE):
        conclusion = all(not in_interval(u[i_star, j], results[j].f_interval)
                         for j in aligned)
    else:
        conclusion = all(in_interval(u[i_star, j], results[j].s_interval)
                         for j in aligned)
    return GuaranteeReport(which, True, bool(conclusion), details)
