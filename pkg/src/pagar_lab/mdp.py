"""Finite MDP representation, trajectory enumeration, and exact probabilities.

Everything downstream (solvers, IRL losses, the reward-design game) queries
the types in this module.  All types are immutable after construction and all
operations are pure functions, so they are safe to evaluate in parallel.

Conventions:
  - A trajectory is a sequence of (state, action) steps plus a final state:
    s(0) a(0) s(1) a(1) ... s(T).  Its length is T, the number of steps.
  - Terminal states self-loop with probability 1 under every action, and
    trajectory enumeration never extends past them.
  - A trajectory return discounts step rewards by gamma^t and, when requested,
    counts the final state once at gamma^T (the convention used by the
    windowed worked-example computations; see `trajectory_return`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetExceeded, InfeasibleTrajectory

PROB_ATOL = 1e-12

DEFAULT_NODE_BUDGET = 10_000_000


def _as_prob_array(values, shape, name):
    arr = np.asarray(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if np.any(arr < -PROB_ATOL):
        raise ValueError(f"{name} contains negative probabilities")
    return arr


@dataclass(frozen=True)
class Mdp:
    """Finite MDP with optional per-state action availability.

    Args:
        n_states: number of states.
        n_actions: number of actions.
        transition: array of shape (S, A, S) with P(s'|s, a).
        initial: initial state distribution of shape (S,).
        terminals: iterable of terminal state indices.  Terminal states must
            self-loop with probability 1 under every available action.
        gamma: discount factor in (0, 1]; must be < 1 when horizon is None.
        horizon: optional step cap; None means infinite-horizon discounted.
        available_actions: optional per-state tuple of available action index
            tuples.  Defaults to all actions everywhere.  Unavailable actions
            still carry valid transition rows but are skipped by enumeration
            and solvers.
        exact_transition: optional mapping (s, a) -> ((s', Fraction), ...) for
            the exact-rational mode used by the worked-example checks.
        exact_initial: optional mapping s -> Fraction, companion of the above.
    """

    n_states: int
    n_actions: int
    transition: np.ndarray
    initial: np.ndarray
    terminals: frozenset = field(default_factory=frozenset)
    gamma: float = 0.99
    horizon: Optional[int] = None
    available_actions: Optional[tuple] = None
    exact_transition: Optional[dict] = None
    exact_initial: Optional[dict] = None

    def __post_init__(self):
        S, A = self.n_states, self.n_actions
        object.__setattr__(self, "transition",
                           _as_prob_array(self.transition, (S, A, S), "transition"))
        object.__setattr__(self, "initial",
                           _as_prob_array(self.initial, (S,), "initial"))
        object.__setattr__(self, "terminals", frozenset(int(s) for s in self.terminals))
        if self.available_actions is not None:
            avail = tuple(tuple(int(a) for a in acts) for acts in self.available_actions)
            if len(avail) != S or any(len(acts) == 0 for acts in avail):
                raise ValueError("available_actions must list >=1 action per state")
            object.__setattr__(self, "available_actions", avail)

        row_sums = self.transition.sum(axis=2)
        for s in range(S):
            for a in self.actions_at(s):
                if abs(row_sums[s, a] - 1.0) > PROB_ATOL:
                    raise ValueError(f"transition row ({s},{a}) sums to {row_sums[s, a]}")
        if abs(self.initial.sum() - 1.0) > PROB_ATOL:
            raise ValueError("initial distribution must sum to 1")
        for s in self.terminals:
            for a in self.actions_at(s):
                if abs(self.transition[s, a, s] - 1.0) > PROB_ATOL:
                    raise ValueError(f"terminal state {s} must self-loop under action {a}")
        if self.horizon is None and not self.gamma < 1.0:
            raise ValueError("gamma must be < 1 for infinite-horizon MDPs")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")

    def actions_at(self, state: int) -> tuple:
        if self.available_actions is None:
            return tuple(range(self.n_actions))
        return self.available_actions[int(state)]

    def action_mask(self) -> np.ndarray:
        """Boolean (S, A) mask of available actions."""
        mask = np.zeros((self.n_states, self.n_actions), dtype=bool)
        for s in range(self.n_states):
            mask[s, list(self.actions_at(s))] = True
        return mask

    def is_terminal(self, state: int) -> bool:
        return int(state) in self.terminals

    @property
    def terminal_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_states, dtype=bool)
        mask[list(self.terminals)] = True
        return mask


@dataclass(frozen=True)
class Trajectory:
    """A sequence of (state, action) steps plus the final state."""

    steps: tuple
    final_state: int

    def __post_init__(self):
        object.__setattr__(self, "steps",
                           tuple((int(s), int(a)) for s, a in self.steps))
        object.__setattr__(self, "final_state", int(self.final_state))

    def __len__(self):
        return len(self.steps)

    @property
    def states(self) -> tuple:
        """All visited states, including the final one."""
        return tuple(s for s, _ in self.steps) + (self.final_state,)

    @property
    def start_state(self) -> int:
        return self.steps[0][0] if self.steps else self.final_state

    def visits(self, state: int, max_step: Optional[int] = None) -> bool:
        """True iff `state` appears at an index <= max_step (None = anywhere)."""
        states = self.states
        if max_step is not None:
            states = states[: max_step + 1]
        return int(state) in states


@dataclass(frozen=True)
class TabularPolicy:
    """Row-stochastic action distribution per state."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 2:
            raise ValueError("policy table must be 2-dimensional (S, A)")
        if np.any(arr < -PROB_ATOL):
            raise ValueError("policy contains negative probabilities")
        sums = arr.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("every policy row must lie on the simplex")
        object.__setattr__(self, "probs", arr)

    @property
    def n_states(self):
        return self.probs.shape[0]

    @property
    def n_actions(self):
        return self.probs.shape[1]

    def prob(self, state: int, action: int) -> float:
        return float(self.probs[state, action])

    @staticmethod
    def uniform(mdp: Mdp) -> "TabularPolicy":
        probs = np.zeros((mdp.n_states, mdp.n_actions))
        for s in range(mdp.n_states):
            acts = mdp.actions_at(s)
            probs[s, list(acts)] = 1.0 / len(acts)
        return TabularPolicy(probs)

    @staticmethod
    def deterministic(mdp: Mdp, actions: Sequence[int]) -> "TabularPolicy":
        probs = np.zeros((mdp.n_states, mdp.n_actions))
        for s, a in enumerate(actions):
            probs[s, int(a)] = 1.0
        return TabularPolicy(probs)


@dataclass(frozen=True)
class RewardFunction:
    """Either a linear-in-features reward or a dense state-action table.

    Exactly one of (features, weights) / values must be supplied.  `lipschitz`
    is the Lipschitz bound of the trajectory return under the trajectory
    metric chosen by the analysis module; None means "not yet computed".
    """

    features: Optional[tuple] = None
    weights: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    lipschitz: Optional[float] = None

    def __post_init__(self):
        linear = self.features is not None or self.weights is not None
        tabular = self.values is not None
        if linear == tabular:
            raise ValueError("supply either (features, weights) or values")
        if linear:
            feats = tuple(np.asarray(f, dtype=float) for f in self.features)
            w = np.asarray(self.weights, dtype=float)
            if len(feats) != w.shape[0]:
                raise ValueError("weights and features must have equal length")
            if any(f.shape != feats[0].shape for f in feats):
                raise ValueError("all feature tables must share one shape")
            object.__setattr__(self, "features", feats)
            object.__setattr__(self, "weights", w)
        else:
            vals = np.asarray(self.values, dtype=float)
            if not np.all(np.isfinite(vals)):
                raise ValueError("tabular reward values must be finite")
            object.__setattr__(self, "values", vals)
        if self.lipschitz is not None and self.lipschitz < 0:
            raise ValueError("lipschitz bound must be non-negative")

    @property
    def is_linear(self) -> bool:
        return self.values is None

    def table(self) -> np.ndarray:
        """Materialize the (S, A) reward table."""
        if self.values is not None:
            return self.values
        out = np.zeros_like(self.features[0])
        for w, f in zip(self.weights, self.features):
            out = out + w * f
        return out

    @staticmethod
    def tabular(values, lipschitz: Optional[float] = None) -> "RewardFunction":
        return RewardFunction(values=values, lipschitz=lipschitz)

    @staticmethod
    def linear(features, weights, lipschitz: Optional[float] = None) -> "RewardFunction":
        return RewardFunction(features=tuple(features), weights=weights,
                              lipschitz=lipschitz)


@dataclass(frozen=True)
class DemonstrationSet:
    """A non-empty set of demonstrated trajectories with optional weights."""

    trajectories: tuple
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        if not trajs:
            raise ValueError("demonstration set must be non-empty")
        object.__setattr__(self, "trajectories", trajs)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (len(trajs),):
                raise ValueError("weights must match the number of trajectories")
            if abs(w.sum() - 1.0) > 1e-9 or np.any(w < 0):
                raise ValueError("weights must be a probability vector")
            object.__setattr__(self, "weights", w)

    def weight_vector(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        n = len(self.trajectories)
        return np.full(n, 1.0 / n)


def trajectory_is_feasible(mdp: Mdp, tau: Trajectory) -> bool:
    """True iff every consecutive (s, a, s') has positive dynamics probability."""
    states = tau.states
    for t, (s, a) in enumerate(tau.steps):
        if a not in mdp.actions_at(s):
            return False
        if mdp.transition[s, a, states[t + 1]] <= 0.0:
            return False
    if mdp.horizon is not None and len(tau) > mdp.horizon:
        return False
    return True


def enumerate_trajectories(mdp: Mdp, max_len: int,
                           node_budget: int = DEFAULT_NODE_BUDGET):
    """Enumerate every dynamics-feasible trajectory of length <= max_len.

    Trajectories start from a d0-supported state and are extended until they
    reach a terminal state or max_len steps, whichever comes first (a
    trajectory that starts in a terminal state has zero steps).  The result is
    deterministic and order-stable: depth-first, lexicographic by
    state/action/successor index.

    Returns:
        List of (Trajectory, p) pairs where p is the probability of the state
        sequence under the dynamics alone, i.e. the product of P(s'|s, a)
        along the trajectory (initial distribution and policy excluded).

    Raises:
        BudgetExceeded: the enumeration tree exceeded `node_budget` nodes.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    out = []
    nodes = 0
    start_states = [s for s in range(mdp.n_states) if mdp.initial[s] > 0.0]

    def extend(state, steps, prob):
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(f"enumeration exceeded {node_budget} nodes")
        if mdp.is_terminal(state) or len(steps) == max_len:
            out.append((Trajectory(tuple(steps), state), prob))
            return
        for a in mdp.actions_at(state):
            row = mdp.transition[state, a]
            for nxt in range(mdp.n_states):
                p = row[nxt]
                if p > 0.0:
                    steps.append((state, a))
                    extend(nxt, steps, prob * p)
                    steps.pop()

    for s0 in start_states:
        extend(s0, [], 1.0)
    return out


def enumerate_trajectories_exact(mdp: Mdp, max_len: int,
                                 node_budget: int = DEFAULT_NODE_BUDGET):
    """Exact-rational twin of `enumerate_trajectories`.

    Requires `mdp.exact_transition`; dynamics probabilities are returned as
    `fractions.Fraction` so the worked-example checks can reproduce quantities
    like 31/125 without floating-point error.
    """
    if mdp.exact_transition is None:
        raise ValueError("mdp has no exact_transition table")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    out = []
    nodes = 0
    start_states = [s for s in range(mdp.n_states) if mdp.initial[s] > 0.0]

    def extend(state, steps, prob):
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(f"enumeration exceeded {node_budget} nodes")
        if mdp.is_terminal(state) or len(steps) == max_len:
            out.append((Trajectory(tuple(steps), state), prob))
            return
        for a in mdp.actions_at(state):
            for nxt, p in mdp.exact_transition[(state, a)]:
                if p > 0:
                    steps.append((state, a))
                    extend(nxt, steps, prob * p)
                    steps.pop()

    for s0 in start_states:
        extend(s0, [], Fraction(1))
    return out


def trajectory_probability(mdp: Mdp, pi: TabularPolicy, tau: Trajectory,
                           exact: bool = False):
    """Probability d0(s0) * prod_t pi(a_t|s_t) * P(s_{t+1}|s_t, a_t).

    Policy zeros are allowed and simply yield 0; a zero initial-distribution
    or dynamics factor raises InfeasibleTrajectory.
    """
    states = tau.states
    if exact:
        if mdp.exact_initial is None or mdp.exact_transition is None:
            raise ValueError("mdp carries no exact-rational tables")
        d0 = mdp.exact_initial.get(tau.start_state, Fraction(0))
        if d0 == 0:
            raise InfeasibleTrajectory("start state outside d0 support")
        prob = d0
        for t, (s, a) in enumerate(tau.steps):
            dyn = dict(mdp.exact_transition[(s, a)]).get(states[t + 1], Fraction(0))
            if dyn == 0:
                raise InfeasibleTrajectory(f"zero dynamics at step {t}")
            prob *= Fraction(pi.prob(s, a)) * dyn
        return prob

    d0 = mdp.initial[tau.start_state]
    if d0 <= 0.0:
        raise InfeasibleTrajectory("start state outside d0 support")
    prob = float(d0)
    for t, (s, a) in enumerate(tau.steps):
        dyn = mdp.transition[s, a, states[t + 1]]
        if dyn <= 0.0:
            raise InfeasibleTrajectory(f"zero dynamics at step {t}")
        prob *= pi.prob(s, a) * dyn
    return prob


def policy_step_probability(mdp: Mdp, pi: TabularPolicy, tau: Trajectory,
                            exact: bool = False):
    """Like `trajectory_probability` but without the d0 factor."""
    p = trajectory_probability(mdp, pi, tau, exact=exact)
    if exact:
        return p / mdp.exact_initial[tau.start_state]
    return p / float(mdp.initial[tau.start_state])


def event_probability(mdp: Mdp, pi: TabularPolicy, target: int, max_len: int,
                      node_budget: int = DEFAULT_NODE_BUDGET,
                      exact: bool = False):
    """Probability that a rollout of `pi` visits `target` within max_len steps.

    "Within max_len steps" means the target appears among the states
    s(0), ..., s(max_len).  Computed exactly by enumerating trajectories and
    summing their policy probabilities; monotone non-decreasing in max_len.
    """
    target = int(target)
    if exact:
        if mdp.exact_initial is None or mdp.exact_transition is None:
            raise ValueError("mdp carries no exact-rational tables")
        total = Fraction(0)
    else:
        total = 0.0
    nodes = 0
    start_states = [s for s in range(mdp.n_states) if mdp.initial[s] > 0.0]

    def walk(state, depth, prob):
        nonlocal total, nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(f"enumeration exceeded {node_budget} nodes")
        if state == target:
            total += prob
            return
        if depth == max_len or mdp.is_terminal(state):
            return
        for a in mdp.actions_at(state):
            pa = pi.prob(state, a)
            if pa <= 0.0:
                continue
            if exact:
                successors = mdp.exact_transition[(state, a)]
            else:
                row = mdp.transition[state, a]
                successors = [(nxt, row[nxt]) for nxt in range(mdp.n_states)
                              if row[nxt] > 0.0]
            for nxt, p in successors:
                if p > 0:
                    pa_factor = Fraction(pa) if exact else pa
                    walk(nxt, depth + 1, prob * pa_factor * p)

    for s0 in start_states:
        d0 = mdp.exact_initial[s0] if exact else float(mdp.initial[s0])
        walk(s0, 0, d0)
    return total


def trajectory_return(r: RewardFunction, tau: Trajectory, gamma: float,
                      include_final: bool = False,
                      mdp: Optional[Mdp] = None) -> float:
    """Discounted return of a trajectory under a state-action reward.

    Steps accrue gamma^t * r(s_t, a_t).  With include_final=True the final
    state is counted once at gamma^T, using the mean reward over its
    available actions (state-indicator rewards are unaffected by this
    choice; the windowed worked-example computations rely on it because
    their terminal states carry reward).  Pass `mdp` so the mean respects
    per-state action availability; without it all actions are averaged.
    """
    table = r.table()
    total = 0.0
    for t, (s, a) in enumerate(tau.steps):
        total += gamma ** t * table[s, a]
    if include_final:
        row = table[tau.final_state]
        if mdp is not None:
            acts = list(mdp.actions_at(tau.final_state))
            row = row[acts]
        total += gamma ** len(tau) * float(np.mean(row))
    return total


def demo_average_return(r: RewardFunction, demos: DemonstrationSet, gamma: float,
                        include_final: bool = False) -> float:
    """Weighted demonstration-average discounted return U_r(E)."""
    w = demos.weight_vector()
    return float(sum(
        wi * trajectory_return(r, tau, gamma, include_final=include_final)
        for wi, tau in zip(w, demos.trajectories)))
