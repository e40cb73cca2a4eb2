"""The built-in worked example: a 7-state MDP where the optimal IRL reward
is misaligned with the task.

Layout: two actions at the start state s0.  Action a1 enters a deterministic
four-step corridor s1 -> s4 -> s5 -> s6; action a2 enters s2, which self-loops
with probability 1/5, reaches s6 with probability 1/5, and falls into the
dead-end s3 with probability 3/5.  s3 and s6 are terminal.  Elsewhere actions
make no difference, so every state but s0 exposes a single action.

The task: visit s2 and s6 each with probability >= 1/2 within the first five
states of a rollout.  Visiting s2 requires a2; reaching s6 through s2 within
the window happens with probability 1/5 + 1/25 + 1/125 = 31/125, so with
p = pi(a2|s0) the reach probability is (1-p) + (31/125) p and success forces
p <= 125/188 (several places print 125/178 instead; that variant is flagged
as an erratum in the summary report).

The reward family is r_w = w * [s = s2] + (1-w) * [s = s6], w in [0, 1].
IRL and the reward-design game are both evaluated on the 5-step trajectory
window with the final state counted once, matching the task's window.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .alignment import VisitThreshold
from .game import WindowedUtility
from .irl import IrlLossKind, RewardFamily, RewardSet, ZiebartEvaluator
from .mdp import (DemonstrationSet, Mdp, RewardFunction, TabularPolicy,
                  Trajectory, event_probability)

GAMMA = 0.99

WINDOW = 5            # trajectory enumeration cap (steps)

VISIT_WINDOW = 4      # "within five states": indices 0..4

N_STATES = 7
N_ACTIONS = 2

A1, A2 = 0, 1

S0, S1, S2, S3, S4, S5, S6 = range(7)


def build_mdp() -> Mdp:
    """The worked-example MDP with exact-rational transition tables."""
    T = np.zeros((N_STATES, N_ACTIONS, N_STATES))
    T[S0, A1, S1] = 1.0
    T[S0, A2, S2] = 1.0
    for a in range(N_ACTIONS):
        T[S1, a, S4] = 1.0
        T[S4, a, S5] = 1.0
        T[S5, a, S6] = 1.0
        T[S2, a, S2] = 0.2
        T[S2, a, S6] = 0.2
        T[S2, a, S3] = 0.6
        T[S3, a, S3] = 1.0
        T[S6, a, S6] = 1.0
    d0 = np.zeros(N_STATES)
    d0[S0] = 1.0
    fifth = Fraction(1, 5)
    exact = {
        (S0, A1): ((S1, Fraction(1)),),
        (S0, A2): ((S2, Fraction(1)),),
        (S1, A1): ((S4, Fraction(1)),),
        (S4, A1): ((S5, Fraction(1)),),
        (S5, A1): ((S6, Fraction(1)),),
        (S2, A1): ((S2, fifth), (S3, 3 * fifth), (S6, fifth)),
        (S3, A1): ((S3, Fraction(1)),),
        (S6, A1): ((S6, Fraction(1)),),
    }
    avail = tuple([(A1, A2)] + [(A1,)] * 6)
    return Mdp(n_states=N_STATES, n_actions=N_ACTIONS, transition=T,
               initial=d0, terminals=frozenset({S3, S6}), gamma=GAMMA,
               horizon=None, available_actions=avail,
               exact_transition=exact, exact_initial={S0: Fraction(1)})


def features():
    """(indicator of s2, indicator of s6) state-action feature tables."""
    f1 = np.zeros((N_STATES, N_ACTIONS))
    f1[S2, :] = 1.0
    f2 = np.zeros((N_STATES, N_ACTIONS))
    f2[S6, :] = 1.0
    return f1, f2


def reward_family() -> RewardFamily:
    f1, f2 = features()
    return RewardFamily.convex_pair(f1, f2, name="example1")


def reward_omega(w: float) -> RewardFunction:
    return reward_family().make(np.array([float(w)]))


def demonstrations() -> DemonstrationSet:
    """Two expert trajectories, one per branch, both reaching s6 in-window."""
    loop_demo = Trajectory(((S0, A2), (S2, A1), (S2, A1), (S2, A1)), S6)
    corridor_demo = Trajectory(((S0, A1), (S1, A1), (S4, A1), (S5, A1)), S6)
    return DemonstrationSet((loop_demo, corridor_demo))


def task_predicate() -> VisitThreshold:
    """Visit s2 and s6 each with probability >= 1/2 within five states."""
    return VisitThreshold(((S2, 0.5, VISIT_WINDOW), (S6, 0.5, VISIT_WINDOW)))


def irl_kind() -> IrlLossKind:
    return IrlLossKind.ziebart(WINDOW)


def policy_with_p(p: float) -> TabularPolicy:
    """The one-parameter policy family: p = pi(a2|s0), single action elsewhere."""
    probs = np.zeros((N_STATES, N_ACTIONS))
    probs[:, A1] = 1.0
    probs[S0] = [1.0 - float(p), float(p)]
    return TabularPolicy(probs)


# ---------------------------------------------------------------------------
# exact-rational quantities
# ---------------------------------------------------------------------------

def prob_s6_via_a2_exact(mdp: Mdp = None) -> Fraction:
    """P(visit s6 within five states | a2 at s0), exactly 31/125."""
    mdp = mdp or build_mdp()
    return event_probability(mdp, policy_with_p(1.0), S6, VISIT_WINDOW,
                             exact=True)


def success_interval_exact(mdp: Mdp = None):
    """Exact bounds on p = pi(a2|s0) for task success: [1/2, 125/188].

    Lower bound: P(visit s2) = p >= 1/2.  Upper bound: solve
    (1 - p) + q p >= 1/2 with q = P(s6 | a2 branch) = 31/125.
    """
    q = prob_s6_via_a2_exact(mdp)
    upper = (1 - Fraction(1, 2)) / (1 - q)
    return Fraction(1, 2), upper


# ---------------------------------------------------------------------------
# the IRL curve and the windowed game
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Example1Game:
    """Precomputed windowed game: IRL losses and utilities on dense grids.

    U[i, j] is the windowed utility of the policy with p = p_grid[j] under
    the reward with omega = omega_grid[i]; utilities are affine in both
    parameters, so the dense grid is exact at its own resolution.
    """

    mdp: Mdp
    demos: DemonstrationSet
    omega_grid: np.ndarray
    losses: np.ndarray
    p_grid: np.ndarray
    utilities: np.ndarray

    @staticmethod
    def build(omega_step: float = 1e-3, p_step: float = 1e-3) -> "Example1Game":
        mdp = build_mdp()
        demos = demonstrations()
        f1, f2 = features()
        ev = ZiebartEvaluator(mdp, demos, WINDOW)
        omega_grid = np.arange(0.0, 1.0 + omega_step / 2, omega_step)
        weight_rows = np.stack([omega_grid, 1.0 - omega_grid], axis=1)
        losses = ev.loss_for_weights((f1, f2), weight_rows)

        model = WindowedUtility(WINDOW)
        p_grid = np.arange(0.0, 1.0 + p_step / 2, p_step)
        u = np.empty((len(omega_grid), len(p_grid)))
        for i, w in enumerate(omega_grid):
            r = RewardFunction.linear((f1, f2), np.array([w, 1.0 - w]))
            u0 = model.value(mdp, policy_with_p(0.0), r)
            u1 = model.value(mdp, policy_with_p(1.0), r)
            u[i] = u0 + (u1 - u0) * p_grid
        return Example1Game(mdp=mdp, demos=demos, omega_grid=omega_grid,
                            losses=losses, p_grid=p_grid, utilities=u)

    def delta_star(self):
        i = int(np.argmax(self.losses))
        return float(self.losses[i]), float(self.omega_grid[i])

    def admissible_mask(self, delta: float) -> np.ndarray:
        return self.losses >= delta - 1e-12

    def protagonist_for(self, delta: float):
        """(p*, worst-case regret) of the windowed game restricted to the
        admissible omega grid."""
        mask = self.admissible_mask(delta)
        if not mask.any():
            return None
        u = self.utilities[mask]
        worst = (u.max(axis=1, keepdims=True) - u).max(axis=0)
        j = int(np.argmin(worst))
        return float(self.p_grid[j]), float(worst[j])

    def delta_sweep(self, deltas) -> np.ndarray:
        return np.array([self.protagonist_for(d)[0] for d in deltas])

    def success_threshold(self, step: float = 0.005):
        """Largest delta below which the protagonist stays inside the exact
        success interval, found by a fine sweep up to delta*."""
        lo, hi = success_interval_exact(self.mdp)
        lo_f, hi_f = float(lo), float(hi)
        d_star, _ = self.delta_star()
        deltas = np.arange(0.0, d_star + step / 2, step)
        threshold = deltas[-1]
        for d in deltas:
            p, _ = self.protagonist_for(d)
            if not (lo_f - 1e-9 <= p <= hi_f + 1e-9):
                threshold = float(d)
                break
        return float(threshold), deltas


def reward_set(delta: float, grid_step: float = 1e-3) -> RewardSet:
    return RewardSet(family=reward_family(), delta=delta, loss=irl_kind(),
                     grid_step=grid_step)
