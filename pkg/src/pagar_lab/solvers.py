"""Exact dynamic-programming solvers: soft and standard value iteration,
policy evaluation, entropy, and discounted visitation frequencies.

All solvers are exact up to the requested tolerance.  Infinite-horizon
quantities come from linear solves; finite-horizon quantities from backward
induction over `mdp.horizon` steps (rewards accrue at t = 0..T-1).
Soft solvers require an infinite-horizon MDP (gamma < 1) because the
soft-optimal policy of a finite-horizon problem is time-varying.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence, SolveFailure
from .mdp import Mdp, RewardFunction, TabularPolicy

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 1_000_000

_NEG_INF = -1e30


@dataclass(frozen=True)
class SoftSolution:
    """Soft (entropy-regularized) solution: values, advantages, policy."""

    v: np.ndarray
    q: np.ndarray
    adv: np.ndarray
    policy: TabularPolicy
    entropy_total: float


@dataclass(frozen=True)
class Visitation:
    """Discounted state visitation frequencies rho(s) = sum_t gamma^t P(s_t=s)."""

    rho: np.ndarray

    @property
    def total(self) -> float:
        return float(self.rho.sum())


def policy_transition(mdp: Mdp, pi: TabularPolicy) -> np.ndarray:
    """State-to-state transition matrix under pi."""
    return np.einsum("sa,sat->st", pi.probs, mdp.transition)


def policy_reward(mdp: Mdp, pi: TabularPolicy, r: RewardFunction) -> np.ndarray:
    return np.einsum("sa,sa->s", pi.probs, r.table())


def _row_entropies(pi: TabularPolicy) -> np.ndarray:
    p = pi.probs
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(p > 0.0, np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return -np.einsum("sa,sa->s", p, logs)


def _solve_linear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:  # cannot occur for gamma < 1; guarded
        raise SolveFailure(str(exc)) from exc


def _require_infinite(mdp: Mdp, what: str):
    if mdp.horizon is not None:
        raise ValueError(f"{what} requires an infinite-horizon MDP (horizon=None)")


def state_values(mdp: Mdp, pi: TabularPolicy, r: RewardFunction) -> np.ndarray:
    """Exact state values of pi under r (no entropy)."""
    P = policy_transition(mdp, pi)
    rp = policy_reward(mdp, pi, r)
    if mdp.horizon is None:
        return _solve_linear(np.eye(mdp.n_states) - mdp.gamma * P, rp)
    v = np.zeros(mdp.n_states)
    for _ in range(mdp.horizon):
        v = rp + mdp.gamma * P @ v
    return v


def utility(mdp: Mdp, pi: TabularPolicy, r: RewardFunction) -> float:
    """Expected discounted return U_r(pi) from the initial distribution."""
    return float(mdp.initial @ state_values(mdp, pi, r))


def standard_policy_evaluation(mdp: Mdp, pi: TabularPolicy, r: RewardFunction):
    """(v, q, adv) of pi under r without entropy; infinite horizon only."""
    _require_infinite(mdp, "standard_policy_evaluation")
    v = state_values(mdp, pi, r)
    q = r.table() + mdp.gamma * np.einsum("sat,t->sa", mdp.transition, v)
    return v, q, q - v[:, None]


def soft_policy_evaluation(mdp: Mdp, pi: TabularPolicy, r: RewardFunction):
    """Soft (v, q, adv) of an arbitrary policy pi under r.

    V(s) = E_{a~pi}[Q(s,a)] + H(pi(.|s));  Q(s,a) = r(s,a) + gamma E[V(s')].
    """
    _require_infinite(mdp, "soft_policy_evaluation")
    P = policy_transition(mdp, pi)
    rp = policy_reward(mdp, pi, r) + _row_entropies(pi)
    v = _solve_linear(np.eye(mdp.n_states) - mdp.gamma * P, rp)
    q = r.table() + mdp.gamma * np.einsum("sat,t->sa", mdp.transition, v)
    return v, q, q - v[:, None]


def solve_soft(mdp: Mdp, r: RewardFunction, tol: float = DEFAULT_TOL,
               max_iter: int = DEFAULT_MAX_ITER) -> SoftSolution:
    """Soft value iteration to the fixed point of
    v(s) = log sum_a exp(r(s,a) + gamma E[v(s')]), with max-shift for
    stability.  Returns the induced softmax policy pi(a|s) oc exp(q(s,a)).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _require_infinite(mdp, "solve_soft")
    mask = mdp.action_mask()
    table = r.table()
    v = np.zeros(mdp.n_states)
    for _ in range(max_iter):
        q = table + mdp.gamma * np.einsum("sat,t->sa", mdp.transition, v)
        q_masked = np.where(mask, q, _NEG_INF)
        shift = q_masked.max(axis=1)
        v_new = shift + np.log(np.exp(q_masked - shift[:, None]).sum(axis=1))
        if np.max(np.abs(v_new - v)) < tol:
            v = v_new
            break
        v = v_new
    else:
        raise NonConvergence(f"soft value iteration: no fixed point in {max_iter} iters")

    q = table + mdp.gamma * np.einsum("sat,t->sa", mdp.transition, v)
    q_masked = np.where(mask, q, _NEG_INF)
    logits = q_masked - v[:, None]
    probs = np.exp(logits)
    probs = probs / probs.sum(axis=1, keepdims=True)
    policy = TabularPolicy(probs)
    return SoftSolution(v=v, q=q, adv=q - v[:, None], policy=policy,
                        entropy_total=entropy(mdp, policy))


def solve_standard(mdp: Mdp, r: RewardFunction, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER):
    """Standard value iteration; greedy deterministic policy, lowest action
    index wins ties.

    For finite-horizon MDPs the value is the exact backward-induction optimum
    (attained by a time-varying policy); the returned stationary policy is the
    greedy policy of the first step.

    Returns:
        (TabularPolicy, value table v)
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    mask = mdp.action_mask()
    table = np.where(mask, r.table(), _NEG_INF)

    if mdp.horizon is not None:
        v = np.zeros(mdp.n_states)
        for _ in range(mdp.horizon):
            q = table + mdp.gamma * np.einsum("sat,t->sa", mdp.transition, v)
            v = q.max(axis=1)
        greedy = q.argmax(axis=1)
    else:
        v = np.zeros(mdp.n_states)
        for _ in range(max_iter):
            q = table + mdp.gamma * np.einsum("sat,t->sa", mdp.transition, v)
            v_new = q.max(axis=1)
            if np.max(np.abs(v_new - v)) < tol:
                v = v_new
                break
            v = v_new
        else:
            raise NonConvergence(f"value iteration: no fixed point in {max_iter} iters")
        q = table + mdp.gamma * np.einsum("sat,t->sa", mdp.transition, v)
        greedy = q.argmax(axis=1)  # argmax takes the lowest index on ties

    probs = np.zeros((mdp.n_states, mdp.n_actions))
    probs[np.arange(mdp.n_states), greedy] = 1.0
    return TabularPolicy(probs), v


def visitation(mdp: Mdp, pi: TabularPolicy) -> Visitation:
    """Exact discounted visitation rho(s) = sum_t gamma^t Prob(s_t = s | pi).

    Infinite horizon: linear solve of rho = d0 + gamma P_pi^T rho.
    Finite horizon T: sum over t = 0..T-1 (matching the reward convention).
    """
    P = policy_transition(mdp, pi)
    if mdp.horizon is None:
        rho = _solve_linear(np.eye(mdp.n_states) - mdp.gamma * P.T, mdp.initial)
        return Visitation(rho=rho)
    rho = np.zeros(mdp.n_states)
    d = mdp.initial.astype(float).copy()
    for t in range(mdp.horizon):
        rho += (mdp.gamma ** t) * d
        d = P.T @ d
    return Visitation(rho=rho)


def entropy(mdp: Mdp, pi: TabularPolicy) -> float:
    """Discounted policy entropy sum_t gamma^t E[H(pi(.|s_t))], computed
    exactly through the visitation distribution."""
    rho = visitation(mdp, pi).rho
    return float(rho @ _row_entropies(pi))


def expected_discounted(mdp: Mdp, pi: TabularPolicy, table: np.ndarray) -> float:
    """E_{tau~pi}[sum_t gamma^t f(s_t, a_t)] for a state-action table f."""
    rho = visitation(mdp, pi).rho
    return float(np.einsum("s,sa,sa->", rho, pi.probs, table))


def soft_rl_objective(mdp: Mdp, pi: TabularPolicy, r: RewardFunction) -> float:
    """Entropy-regularized objective U_r(pi) + H(pi)."""
    return utility(mdp, pi, r) + entropy(mdp, pi)
