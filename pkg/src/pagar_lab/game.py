"""The protagonist/antagonist reward-design game.

Provides regret evaluation, exact small-scale MinimaxRegret solvers on
parametric or tabular policy spaces, the policy-conditioned mixed-reward
decision rule and its equivalence machinery, plus finite-matrix helpers used
by the brute-force verification suites.

Two utility models are supported.  The default evaluates policies by exact
dynamic programming over the full (discounted or finite) horizon.  The
windowed model evaluates policies over the trajectory tree truncated at
`max_len` steps with terminal halting, counting the final state's reward
once; the worked example's game is played under this model because its task
and IRL normalization live in the same window.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from ._parallel import parallel_map
from .errors import (AssumptionViolated, DegenerateDenominator,
                     EmptyRewardSet)
from .mdp import DemonstrationSet, Mdp, RewardFunction, TabularPolicy
from .solvers import solve_standard, utility, visitation

TIE_ATOL = 1e-12

CONSTANT_UTILITY_ATOL = 1e-9


# ---------------------------------------------------------------------------
# utility models
# ---------------------------------------------------------------------------

class StandardUtility:
    """Exact DP utilities over the MDP's own horizon semantics."""

    name = "standard"

    def value(self, mdp: Mdp, pi: TabularPolicy, r: RewardFunction) -> float:
        return utility(mdp, pi, r)

    def best_value(self, mdp: Mdp, r: RewardFunction) -> float:
        # infinite horizon: evaluate the greedy policy exactly so that the
        # optimum's regret is exactly zero instead of carrying VI tolerance
        pol, v = solve_standard(mdp, r)
        if mdp.horizon is not None:
            return float(mdp.initial @ v)
        return utility(mdp, pol, r)

    def best_policy(self, mdp: Mdp, r: RewardFunction) -> TabularPolicy:
        pol, _ = solve_standard(mdp, r)
        return pol


def _mean_state_reward(mdp: Mdp, table: np.ndarray) -> np.ndarray:
    # the final state's one-time reward averages over available actions only
    mask = mdp.action_mask()
    return (table * mask).sum(axis=1) / mask.sum(axis=1)


class WindowedUtility:
    """Trajectory utilities truncated at `max_len` steps with terminal halting.

    Returns count step rewards gamma^t * r(s_t, a_t) for t < T and the final
    state once at gamma^T (action-mean reward).  Values and maxima both come
    from backward induction on the halted tree, so `best_value` is the exact
    maximum over (possibly time-varying) policies.
    """

    name = "windowed"

    def __init__(self, max_len: int):
        if max_len < 1:
            raise ValueError("max_len must be >= 1")
        self.max_len = int(max_len)

    def value(self, mdp: Mdp, pi: TabularPolicy, r: RewardFunction) -> float:
        table = r.table()
        final = _mean_state_reward(mdp, table)
        term = mdp.terminal_mask
        rp = np.einsum("sa,sa->s", pi.probs, table)
        P = np.einsum("sa,sat->st", pi.probs, mdp.transition)
        v = final.copy()
        for _ in range(self.max_len):
            v_next = rp + mdp.gamma * (P @ v)
            v = np.where(term, final, v_next)
        return float(mdp.initial @ v)

    def best_value(self, mdp: Mdp, r: RewardFunction) -> float:
        table = r.table()
        final = _mean_state_reward(mdp, table)
        term = mdp.terminal_mask
        mask = mdp.action_mask()
        v = final.copy()
        for _ in range(self.max_len):
            q = table + mdp.gamma * np.einsum("sat,t->sa", mdp.transition, v)
            v_next = np.where(mask, q, -np.inf).max(axis=1)
            v = np.where(term, final, v_next)
        return float(mdp.initial @ v)

    def best_policy(self, mdp: Mdp, r: RewardFunction) -> TabularPolicy:
        # greedy first-step policy of the backward induction
        table = r.table()
        final = _mean_state_reward(mdp, table)
        term = mdp.terminal_mask
        mask = mdp.action_mask()
        v = final.copy()
        for _ in range(self.max_len):
            q = np.where(mask, table + mdp.gamma *
                         np.einsum("sat,t->sa", mdp.transition, v), -np.inf)
            v = np.where(term, final, q.max(axis=1))
        greedy = q.argmax(axis=1)
        probs = np.zeros((mdp.n_states, mdp.n_actions))
        probs[np.arange(mdp.n_states), greedy] = 1.0
        return TabularPolicy(probs)


# ---------------------------------------------------------------------------
# regret
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegretReport:
    """Regret of a protagonist under one reward, with the witnesses."""

    regret: float
    witness_reward: RewardFunction
    antagonist: TabularPolicy
    protagonist_utility: float
    antagonist_utility: float


def regret(mdp: Mdp, pi_p: TabularPolicy, r: RewardFunction,
           utility_model=None) -> RegretReport:
    """Regret(pi_P, r) = max_pi U_r(pi) - U_r(pi_P), antagonist from the
    standard optimum of the chosen utility model."""
    model = utility_model or StandardUtility()
    antagonist = model.best_policy(mdp, r)
    u_best = model.best_value(mdp, r)
    u_p = model.value(mdp, pi_p, r)
    return RegretReport(regret=u_best - u_p, witness_reward=r,
                        antagonist=antagonist, protagonist_utility=u_p,
                        antagonist_utility=u_best)


def max_regret(mdp: Mdp, pi_p: TabularPolicy, reward_set, demos: DemonstrationSet,
               utility_model=None) -> RegretReport:
    """Worst-case regret over the admissible members of a RewardSet grid.

    Raises:
        EmptyRewardSet: no grid member passes the membership test.
    """
    model = utility_model or StandardUtility()
    admissible = reward_set.admissible(mdp, demos)
    if not admissible:
        raise EmptyRewardSet(f"no grid member reaches delta={reward_set.delta}")
    best = None
    for _, r, _ in admissible:
        rep = regret(mdp, pi_p, r, utility_model=model)
        if best is None or rep.regret > best.regret:
            best = rep
    return best


# ---------------------------------------------------------------------------
# policy spaces and MinimaxRegret
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParametricPolicySpace:
    """Low-dimensional policy parameterization swept by nested grid search."""

    lower: np.ndarray
    upper: np.ndarray
    builder: Callable[[np.ndarray], TabularPolicy]
    grid_step: float = 1e-2

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def grid(self, lower=None, upper=None, step=None):
        lo = self.lower if lower is None else lower
        hi = self.upper if upper is None else upper
        st = self.grid_step if step is None else step
        axes = [np.linspace(l, h, max(int(round((h - l) / st)), 0) + 1)
                for l, h in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class TabularPolicySpace:
    """Per-state simplex grid over all states (coarse but exhaustive)."""

    step: float = 0.25
    grid_budget: int = 50_000

    def policies(self, mdp: Mdp) -> list:
        total = 1
        for s in range(mdp.n_states):
            total *= len(_simplex_grid(len(mdp.actions_at(s)), self.step))
            if total > self.grid_budget:
                raise ValueError(
                    f"exhaustive tabular grid exceeds {self.grid_budget} "
                    "policies; coarsen the step or reduce the state count")
        return simplex_policy_grid(mdp, self.step)


def _simplex_grid(n: int, step: float) -> list:
    """All points of the n-simplex with coordinates on a `step` lattice."""
    k = int(round(1.0 / step))
    out = []

    def rec(prefix, remaining, dims_left):
        if dims_left == 1:
            out.append(prefix + [remaining / k])
            return
        for i in range(remaining + 1):
            rec(prefix + [i / k], remaining - i, dims_left - 1)

    rec([], k, n)
    return [np.array(p) for p in out]


def simplex_policy_grid(mdp: Mdp, step: float = 0.25) -> list:
    """Product over states of per-state simplex grids (masked actions get 0)."""
    per_state = []
    for s in range(mdp.n_states):
        acts = mdp.actions_at(s)
        rows = []
        for point in _simplex_grid(len(acts), step):
            row = np.zeros(mdp.n_actions)
            row[list(acts)] = point
            rows.append(row)
        per_state.append(rows)
    policies = []

    def rec(s, rows):
        if s == mdp.n_states:
            policies.append(TabularPolicy(np.stack(rows)))
            return
        for row in per_state[s]:
            rec(s + 1, rows + [row])

    rec(0, [])
    return policies


def _max_regret_over(mdp, rewards, best_values, pi, model):
    """(worst regret, witness index) of pi over an explicit reward list."""
    worst, arg = -np.inf, -1
    for j, r in enumerate(rewards):
        g = best_values[j] - model.value(mdp, pi, r)
        if g > worst:
            worst, arg = g, j
    return worst, arg


def minimax_regret(mdp: Mdp, reward_set, demos: DemonstrationSet,
                   policy_space, utility_model=None,
                   refinements: int = 2, subgradient_steps: int = 200,
                   restarts: int = 5, seed: int = 0):
    """argmin over the policy space of the worst-case admissible regret.

    Parametric spaces use nested grid search with `refinements` rounds of 10x
    local refinement.  Tabular spaces use the exhaustive simplex grid as the
    authoritative answer, polished by projected gradient descent on the
    convex objective with random restarts (the polish is kept only when it
    improves on the grid).

    Returns:
        (TabularPolicy, RegretReport) for the worst admissible reward at the
        returned protagonist.
    """
    model = utility_model or StandardUtility()
    admissible = reward_set.admissible(mdp, demos)
    if not admissible:
        raise EmptyRewardSet(f"no grid member reaches delta={reward_set.delta}")
    rewards = [r for _, r, _ in admissible]
    best_values = parallel_map(lambda r: model.best_value(mdp, r), rewards)

    if isinstance(policy_space, ParametricPolicySpace):
        lo, hi = policy_space.lower.copy(), policy_space.upper.copy()
        step = policy_space.grid_step
        best_p, best_val = None, np.inf
        for _ in range(refinements + 1):
            for p in policy_space.grid(lo, hi, step):
                pi = policy_space.builder(p)
                val, _ = _max_regret_over(mdp, rewards, best_values, pi, model)
                if val < best_val - TIE_ATOL:
                    best_val, best_p = val, p
            lo = np.maximum(policy_space.lower, best_p - step)
            hi = np.minimum(policy_space.upper, best_p + step)
            step /= 10.0
        pi_star = policy_space.builder(best_p)
    else:
        candidates = policy_space.policies(mdp)
        vals = [
            _max_regret_over(mdp, rewards, best_values, pi, model)[0]
            for pi in candidates]
        i = int(np.argmin(vals))
        pi_star, best_val = candidates[i], vals[i]
        polished = _subgradient_polish(mdp, rewards, best_values, pi_star, model,
                                       steps=subgradient_steps,
                                       restarts=restarts, seed=seed)
        if polished is not None:
            pol_val, pol_pi = polished
            if pol_val < best_val - TIE_ATOL:
                pi_star, best_val = pol_pi, pol_val

    _, arg = _max_regret_over(mdp, rewards, best_values, pi_star, model)
    report = regret(mdp, pi_star, rewards[arg], utility_model=model)
    return pi_star, report


def _subgradient_polish(mdp, rewards, best_values, pi0, model, steps, restarts,
                        seed):
    """Projected subgradient descent on max-regret for full tabular policies.

    Only supports the standard utility model (gradients use exact visitation
    and Q-values).  Returns (value, policy) or None when unsupported.
    """
    if not isinstance(model, StandardUtility) or mdp.horizon is not None:
        return None
    from .solvers import standard_policy_evaluation

    rng = np.random.default_rng(seed)
    mask = mdp.action_mask()
    best = None
    starts = [pi0.probs]
    for _ in range(max(restarts - 1, 0)):
        raw = rng.random((mdp.n_states, mdp.n_actions)) * mask
        starts.append(raw / raw.sum(axis=1, keepdims=True))

    for start in starts:
        probs = start.copy()
        pi = TabularPolicy(probs)
        worst, _ = _max_regret_over(mdp, rewards, best_values, pi, model)
        if best is None or worst < best[0]:
            best = (worst, pi)
        for k in range(steps):
            pi = TabularPolicy(probs)
            worst, arg = _max_regret_over(mdp, rewards, best_values, pi, model)
            if worst < best[0]:
                best = (worst, pi)
            r = rewards[arg]
            rho = visitation(mdp, pi).rho
            _, q, _ = standard_policy_evaluation(mdp, pi, r)
            grad = rho[:, None] * q          # d(-U)/d pi(a|s) = -rho(s) q(s,a)
            lr = 0.5 / (1 + 0.1 * k)
            probs = _project_rows(probs + lr * grad, mask)
        pi = TabularPolicy(probs)
        worst, _ = _max_regret_over(mdp, rewards, best_values, pi, model)
        if worst < best[0]:
            best = (worst, pi)
    return best


def _project_rows(raw: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the simplex of allowed actions."""
    out = np.zeros_like(raw)
    for s in range(raw.shape[0]):
        idx = np.where(mask[s])[0]
        v = raw[s, idx]
        u = np.sort(v)[::-1]
        css = np.cumsum(u) - 1.0
        ks = np.arange(1, len(u) + 1)
        cond = u - css / ks > 0
        rho = ks[cond][-1]
        theta = css[rho - 1] / rho
        out[s, idx] = np.maximum(v - theta, 0.0)
        out[s, idx] /= out[s, idx].sum()
    return out


# ---------------------------------------------------------------------------
# decision rule (mixed rewarding)
# ---------------------------------------------------------------------------

NON_WEAKLY_DOMINATED = "non_weakly_dominated"
WEAKLY_DOMINATED = "weakly_dominated"
TOTALLY_DOMINATED = "totally_dominated"


@dataclass(frozen=True)
class DecisionRule:
    """Policy-conditioned mixed-reward decision rule for one policy.

    `baseline_weights` is the distribution P_pi over the reward grid;
    `star_reward` the regret-maximizing reward r*_pi (ties broken toward
    higher U_r(pi)); `coefficient` the affine weight on the star reward.
    For policies that are not weakly dominated the coefficient denominator
    is c - U_{r*}(pi) with c = max over non-weakly-dominated policies of
    min_r U_r(pi); for dominated policies the baseline utility replaces c
    (the printed constant breaks the minimax equivalence there; see the
    module tests).  `degenerate` marks a vanishing denominator, in which
    case mixed_utility uses the exact limit baseline_utility - regret.
    """

    baseline_weights: np.ndarray
    star_reward: RewardFunction
    star_index: int
    coefficient: float
    constant_c: float
    baseline_utility: float
    regret_value: float
    case: str
    degenerate: bool = False


def utility_matrix(mdp: Mdp, policies: Sequence[TabularPolicy],
                   rewards: Sequence[RewardFunction],
                   utility_model=None) -> np.ndarray:
    """U[i, j] = utility of policy i under reward j."""
    model = utility_model or StandardUtility()
    return np.array([[model.value(mdp, pi, r) for r in rewards]
                     for pi in policies])


def _classify_policies(u: np.ndarray):
    """Per-policy domination case labels from the utility matrix."""
    n = u.shape[0]
    row_min, row_max = u.min(axis=1), u.max(axis=1)
    if np.any(row_max - row_min <= CONSTANT_UTILITY_ATOL):
        bad = int(np.argmin(row_max - row_min))
        raise AssumptionViolated(
            f"policy {bad} has constant utility across the reward grid")
    cases = []
    for i in range(n):
        others = [k for k in range(n) if k != i]
        totally = any(row_max[i] < row_min[k] for k in others)
        weakly = any(row_max[i] <= row_min[k] for k in others)
        if totally:
            cases.append(TOTALLY_DOMINATED)
        elif weakly:
            cases.append(WEAKLY_DOMINATED)
        else:
            cases.append(NON_WEAKLY_DOMINATED)
    return cases, row_min, row_max


def _locate_policy(policies, pi):
    for i, cand in enumerate(policies):
        if cand is pi:
            return i
    for i, cand in enumerate(policies):
        if (isinstance(cand, TabularPolicy) and isinstance(pi, TabularPolicy)
                and cand.probs.shape == pi.probs.shape
                and np.array_equal(cand.probs, pi.probs)):
            return i
    return None


def build_decision_rule(mdp: Mdp, rewards: Sequence[RewardFunction],
                        policies: Sequence[TabularPolicy], pi: TabularPolicy,
                        utility_model=None,
                        u_matrix: Optional[np.ndarray] = None,
                        strict: bool = False) -> DecisionRule:
    """Construct the mixed-reward decision rule for `pi` on a finite game.

    The regret maximization ranges over the given finite policy list (pi is
    appended when absent).  Cases: a policy that is not weakly dominated gets
    a two-point baseline mixture achieving the constant c; a weakly-but-not-
    totally dominated policy gets a point mass on argmax_r U_r(pi); a totally
    dominated policy gets the uniform distribution.

    A vanishing coefficient denominator with nonzero regret is NOT an error
    by default: it occurs with positive probability (the max-min policy's
    worst-case reward is often its own minimum-utility reward), and the
    mixed utility then takes its exact algebraic limit baseline - regret,
    which is what the minimax equivalence requires.  Pass strict=True to get
    the raising behavior instead.

    Raises:
        AssumptionViolated: some policy has constant utility across rewards.
        DegenerateDenominator: only with strict=True, when a
            non-weakly-dominated policy hits a vanishing denominator with
            non-negligible regret.
    """
    policies = list(policies)
    idx = _locate_policy(policies, pi)
    if idx is None:
        policies.append(pi)
        idx = len(policies) - 1
        u_matrix = None
    u = utility_matrix(mdp, policies, rewards, utility_model) \
        if u_matrix is None else np.asarray(u_matrix, dtype=float)

    cases, row_min, row_max = _classify_policies(u)
    non_wtd = [i for i, c in enumerate(cases) if c == NON_WEAKLY_DOMINATED]
    if not non_wtd:
        raise AssumptionViolated("no non-weakly-dominated policy in the game")
    c = max(row_min[i] for i in non_wtd)

    col_best = u.max(axis=0)
    regrets = col_best - u[idx]
    max_reg = regrets.max()
    star_candidates = np.where(regrets >= max_reg - TIE_ATOL)[0]
    star = int(star_candidates[np.argmax(u[idx, star_candidates])])

    n_rewards = len(rewards)
    weights = np.zeros(n_rewards)
    case = cases[idx]
    if case == NON_WEAKLY_DOMINATED:
        j_min, j_max = int(np.argmin(u[idx])), int(np.argmax(u[idx]))
        span = u[idx, j_max] - u[idx, j_min]
        theta = (c - u[idx, j_min]) / span
        weights[j_max] += theta
        weights[j_min] += 1.0 - theta
        baseline = c
    elif case == WEAKLY_DOMINATED:
        weights[int(np.argmax(u[idx]))] = 1.0
        baseline = row_max[idx]
    else:
        weights[:] = 1.0 / n_rewards
        baseline = float(u[idx].mean())

    denom = baseline - u[idx, star]
    degenerate = abs(denom) < 1e-12
    if degenerate:
        if max_reg < 1e-9:
            coeff = 1.0
        elif strict and case == NON_WEAKLY_DOMINATED:
            raise DegenerateDenominator(
                f"|c - U_r*(pi)| < 1e-12 with regret {max_reg}")
        else:
            coeff = np.nan  # mixed_utility uses the exact limit instead
    else:
        coeff = max_reg / denom

    return DecisionRule(baseline_weights=weights, star_reward=rewards[star],
                        star_index=star, coefficient=float(coeff),
                        constant_c=float(c), baseline_utility=float(baseline),
                        regret_value=float(max_reg), case=case,
                        degenerate=degenerate)


def mixed_utility(rule: DecisionRule, mdp: Mdp, pi: TabularPolicy,
                  rewards: Optional[Sequence[RewardFunction]] = None,
                  utility_model=None,
                  utilities: Optional[np.ndarray] = None) -> float:
    """coeff * U_{r*}(pi) + (1 - coeff) * sum_r P_pi(r) U_r(pi).

    Pass `utilities` (the policy's utility row over the rule's reward grid)
    to avoid re-solving; otherwise `rewards` must be given.  A degenerate
    coefficient denominator falls back to the exact limit
    baseline_utility - regret.
    """
    model = utility_model or StandardUtility()
    if utilities is None:
        if rewards is None:
            raise ValueError("need either utilities or the reward list")
        utilities = np.array([model.value(mdp, pi, r) for r in rewards])
    utilities = np.asarray(utilities, dtype=float)
    u_star = utilities[rule.star_index]
    baseline = float(rule.baseline_weights @ utilities)
    if rule.degenerate and not np.isfinite(rule.coefficient):
        return baseline - rule.regret_value
    return rule.coefficient * u_star + (1.0 - rule.coefficient) * baseline


# ---------------------------------------------------------------------------
# finite-matrix brute force helpers
# ---------------------------------------------------------------------------

def minimax_sets_from_matrix(u: np.ndarray, offsets: Optional[np.ndarray] = None):
    """(argmin-max-regret set, regret values) on a finite utility matrix.

    `offsets` subtracts f(r) from every column (the measurement-shift form);
    the argmin set is provably unchanged by any offset.
    """
    u = np.asarray(u, dtype=float)
    if offsets is not None:
        u = u - np.asarray(offsets, dtype=float)[None, :]
    regrets = (u.max(axis=0)[None, :] - u).max(axis=1)
    m = regrets.min()
    return set(np.where(regrets <= m + TIE_ATOL)[0].tolist()), regrets


def argmax_mixed_utility_set(mdp: Mdp, rewards: Sequence[RewardFunction],
                             policies: Sequence[TabularPolicy],
                             utility_model=None,
                             u_matrix: Optional[np.ndarray] = None):
    """Policies maximizing their own mixed utility on the finite game."""
    u = utility_matrix(mdp, policies, rewards, utility_model) \
        if u_matrix is None else np.asarray(u_matrix, dtype=float)
    values = []
    for i, pi in enumerate(policies):
        rule = build_decision_rule(mdp, rewards, policies, pi,
                                   utility_model=utility_model, u_matrix=u)
        values.append(mixed_utility(rule, mdp, pi, utilities=u[i]))
    values = np.asarray(values)
    m = values.max()
    return set(np.where(values >= m - TIE_ATOL)[0].tolist()), values
