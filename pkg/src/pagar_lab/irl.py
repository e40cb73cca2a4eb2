"""MaxEnt IRL losses, the optimal loss delta*, and delta-optimal reward sets.

Three concrete loss variants are provided.  They are NOT on a common scale
and thresholds must never be mixed across variants:

  - max_margin:  J(r) = U_r(E) - max_pi U_r(pi)            (<= 0 at best)
  - max_ent:     J(r) = U_r(E) - (max_pi U_r(pi) + H(pi))  (soft optimum)
  - ziebart:     J(r) = log Z - sum_{tau in E} r(tau), with the partition
    Z = sum over enumerated trajectories of length <= max_len of exp(r(tau))
    and returns counting the final state once.  This is the windowed
    trajectory-likelihood form used by the worked example; its maximum over
    the example's reward family is the delta* ~ 2.8 curve.

Membership in the delta-optimal set R_{E,delta} is J(r) >= delta - 1e-12
for every variant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import BudgetExceeded, RewardDomainError
from .mdp import (DemonstrationSet, Mdp, RewardFunction, TabularPolicy,
                  demo_average_return, enumerate_trajectories,
                  trajectory_return)
from .solvers import solve_soft, solve_standard

MEMBERSHIP_ATOL = 1e-12

GRID_POINT_BUDGET = 2_000_000

MAX_MARGIN = "max_margin"
MAX_ENT = "max_ent"
ZIEBART = "ziebart"


@dataclass(frozen=True)
class IrlLossKind:
    """Selects one concrete IRL loss variant.

    `max_len` is required for (and only meaningful to) the ziebart variant.
    """

    kind: str
    max_len: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (MAX_MARGIN, MAX_ENT, ZIEBART):
            raise ValueError(f"unknown IRL loss kind: {self.kind}")
        if self.kind == ZIEBART and (self.max_len is None or self.max_len < 1):
            raise ValueError("ziebart loss needs max_len >= 1")

    @staticmethod
    def max_margin() -> "IrlLossKind":
        return IrlLossKind(MAX_MARGIN)

    @staticmethod
    def max_ent() -> "IrlLossKind":
        return IrlLossKind(MAX_ENT)

    @staticmethod
    def ziebart(max_len: int) -> "IrlLossKind":
        return IrlLossKind(ZIEBART, max_len=max_len)


class ZiebartEvaluator:
    """Caches the trajectory enumeration behind the ziebart loss.

    Building the enumeration once makes grid sweeps over a reward family
    cheap; for linear families `loss_for_weights` evaluates whole weight
    batches with one matrix product.
    """

    def __init__(self, mdp: Mdp, demos: DemonstrationSet, max_len: int):
        self.mdp = mdp
        self.gamma = mdp.gamma
        self.demos = demos
        self.trajectories = [tau for tau, _ in enumerate_trajectories(mdp, max_len)]

    def loss(self, r: RewardFunction) -> float:
        returns = np.array([
            trajectory_return(r, tau, self.gamma, include_final=True,
                              mdp=self.mdp)
            for tau in self.trajectories])
        demo_returns = np.array([
            trajectory_return(r, tau, self.gamma, include_final=True,
                              mdp=self.mdp)
            for tau in self.demos.trajectories])
        n = len(demo_returns)
        weighted_sum = n * float(self.demos.weight_vector() @ demo_returns)
        return float(logsumexp(returns)) - weighted_sum

    def feature_returns(self, features) -> tuple:
        """(Z-side, demo-side) per-feature discounted return matrices."""
        def rows(taus):
            out = np.empty((len(taus), len(features)))
            for j, f in enumerate(features):
                basis = RewardFunction.tabular(np.asarray(f, dtype=float))
                out[:, j] = [trajectory_return(basis, tau, self.gamma, True,
                                               mdp=self.mdp)
                             for tau in taus]
            return out
        return rows(self.trajectories), rows(self.demos.trajectories)

    def loss_for_weights(self, features, weight_rows: np.ndarray) -> np.ndarray:
        """Vectorized ziebart loss for a batch of linear-reward weights."""
        enum_feats, demo_feats = self.feature_returns(features)
        enum_r = enum_feats @ weight_rows.T            # (n_traj, n_weights)
        n = demo_feats.shape[0]
        demo_sum = n * (self.demos.weight_vector() @ (demo_feats @ weight_rows.T))
        return logsumexp(enum_r, axis=0) - demo_sum


def irl_loss(mdp: Mdp, demos: DemonstrationSet, r: RewardFunction,
             kind: IrlLossKind) -> float:
    """The selected IRL loss of reward r against demonstrations E."""
    if kind.kind == ZIEBART:
        return ZiebartEvaluator(mdp, demos, kind.max_len).loss(r)
    u_e = demo_average_return(r, demos, mdp.gamma)
    if kind.kind == MAX_MARGIN:
        _, v = solve_standard(mdp, r)
        return u_e - float(mdp.initial @ v)
    sol = solve_soft(mdp, r)
    return u_e - float(mdp.initial @ sol.v)


@dataclass(frozen=True)
class RewardFamily:
    """A box-parameterized reward family.

    `builder` maps a parameter vector inside [lower, upper] to a
    RewardFunction.  Helpers cover the common cases; `convex_pair` is the
    worked example's r_w = w*r1 + (1-w)*r2 family.
    """

    lower: np.ndarray
    upper: np.ndarray
    builder: Callable[[np.ndarray], RewardFunction]
    name: str = "custom"

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ValueError("invalid parameter box")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def make(self, params) -> RewardFunction:
        params = np.atleast_1d(np.asarray(params, dtype=float))
        return self.builder(params)

    def grid_params(self, step: float) -> np.ndarray:
        """Product grid over the box at per-dimension resolution `step`."""
        axes = []
        for lo, hi in zip(self.lower, self.upper):
            n = max(int(round((hi - lo) / step)), 0) + 1
            axes.append(np.linspace(lo, hi, n))
        total = int(np.prod([len(ax) for ax in axes]))
        if total > GRID_POINT_BUDGET:
            raise BudgetExceeded(f"reward grid of {total} points exceeds budget")
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @staticmethod
    def linear(features, lower, upper, name="linear") -> "RewardFamily":
        feats = tuple(np.asarray(f, dtype=float) for f in features)

        def build(w):
            return RewardFunction.linear(feats, w, lipschitz=float(np.max(np.abs(w))))
        return RewardFamily(lower, upper, build, name=name)

    @staticmethod
    def convex_pair(f1, f2, name="convex_pair") -> "RewardFamily":
        """One-parameter family w*f1 + (1-w)*f2, w in [0, 1]."""
        feats = (np.asarray(f1, dtype=float), np.asarray(f2, dtype=float))

        def build(params):
            w = float(params[0])
            weights = np.array([w, 1.0 - w])
            return RewardFunction.linear(feats, weights,
                                         lipschitz=float(np.max(np.abs(weights))))
        return RewardFamily(np.array([0.0]), np.array([1.0]), build, name=name)

    @staticmethod
    def tabular(shape, lower, upper, name="tabular") -> "RewardFamily":
        shape = tuple(shape)

        def build(params):
            return RewardFunction.tabular(params.reshape(shape))
        size = int(np.prod(shape))
        return RewardFamily(np.full(size, float(lower)), np.full(size, float(upper)),
                            build, name=name)


@dataclass(frozen=True)
class RewardSet:
    """A reward family plus a delta threshold defining R_{E,delta}.

    Membership: irl_loss(r) >= delta - 1e-12.  `grid_step` controls the
    family discretization used by set-valued operations.
    """

    family: RewardFamily
    delta: float
    loss: IrlLossKind
    grid_step: float = 1e-3

    def grid(self) -> list:
        return [self.family.make(p) for p in self.family.grid_params(self.grid_step)]

    def admissible(self, mdp: Mdp, demos: DemonstrationSet) -> list:
        """[(params, reward, loss)] for grid members inside the set."""
        params = self.family.grid_params(self.grid_step)
        losses = _grid_losses(mdp, demos, self.family, params, self.loss)
        out = []
        for p, lv in zip(params, losses):
            if lv >= self.delta - MEMBERSHIP_ATOL:
                out.append((p, self.family.make(p), float(lv)))
        return out


def _grid_losses(mdp, demos, family, params, kind) -> np.ndarray:
    """IRL losses for a batch of family parameters, vectorized when possible."""
    if kind.kind == ZIEBART:
        ev = ZiebartEvaluator(mdp, demos, kind.max_len)
        probe = family.make(params[0])
        if probe.is_linear:
            weight_rows = np.stack([family.make(p).weights for p in params])
            return ev.loss_for_weights(probe.features, weight_rows)
        return np.array([ev.loss(family.make(p)) for p in params])
    return np.array([irl_loss(mdp, demos, family.make(p), kind) for p in params])


def delta_star(mdp: Mdp, demos: DemonstrationSet, family: RewardFamily,
               kind: IrlLossKind, grid_step: float = 1e-3,
               refinements: int = 2):
    """Maximal IRL loss over the family grid and a witness reward.

    Up to three parameters: product-grid search at `grid_step`, then
    `refinements` rounds of 10x local refinement around the incumbent
    (clipped to the parameter box).  Higher-dimensional (tabular) families
    fall back to coordinate ascent over per-coordinate line grids.

    Returns:
        (delta_star_value, witness RewardFunction)
    """
    if family.dim > 3:
        return _delta_star_coordinate_ascent(mdp, demos, family, kind,
                                             grid_step)
    step = float(grid_step)
    lo, hi = family.lower.copy(), family.upper.copy()
    best_p, best_v = None, -np.inf
    for _ in range(refinements + 1):
        box = RewardFamily(lo, hi, family.builder, name=family.name)
        params = box.grid_params(step)
        losses = _grid_losses(mdp, demos, family, params, kind)
        i = int(np.argmax(losses))
        if losses[i] > best_v:
            best_v, best_p = float(losses[i]), params[i]
        lo = np.maximum(family.lower, best_p - step)
        hi = np.minimum(family.upper, best_p + step)
        step /= 10.0
    return best_v, family.make(best_p)


def _delta_star_coordinate_ascent(mdp, demos, family, kind, grid_step,
                                  sweeps: int = 3, points_per_line: int = 9):
    """Coordinate ascent: sweep each parameter over a line grid in turn."""
    params = 0.5 * (family.lower + family.upper)
    best_v = float(_grid_losses(mdp, demos, family,
                                params[None, :], kind)[0])
    for _ in range(sweeps):
        improved = False
        for d in range(family.dim):
            line = np.linspace(family.lower[d], family.upper[d],
                               points_per_line)
            cands = np.repeat(params[None, :], len(line), axis=0)
            cands[:, d] = line
            losses = _grid_losses(mdp, demos, family, cands, kind)
            i = int(np.argmax(losses))
            if losses[i] > best_v + 1e-12:
                best_v, params = float(losses[i]), cands[i]
                improved = True
        if not improved:
            break
    return best_v, family.make(params)


def in_reward_set(reward_set: RewardSet, mdp: Mdp, demos: DemonstrationSet,
                  r: RewardFunction) -> bool:
    """True iff irl_loss(r) >= delta - 1e-12."""
    return irl_loss(mdp, demos, r, reward_set.loss) >= reward_set.delta - MEMBERSHIP_ATOL


def gan_reward_from_discriminator(d: np.ndarray, pi_a: TabularPolicy,
                                  clamp: float = 1e-12) -> RewardFunction:
    """Recover the reward r(s,a) = log(pi_A(a|s)/D(s,a) - pi_A(a|s)).

    Arguments of the log are clamped below `clamp` before taking it.

    Raises:
        RewardDomainError: any D(s,a) outside the open interval (0, 1).
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0.0) or np.any(d >= 1.0):
        raise RewardDomainError("discriminator values must lie strictly in (0, 1)")
    arg = pi_a.probs / d - pi_a.probs
    return RewardFunction.tabular(np.log(np.maximum(arg, clamp)))


def discriminator_from_reward(r: RewardFunction, pi_a: TabularPolicy) -> np.ndarray:
    """The inverse map D(s,a) = pi_A(a|s) / (exp(r(s,a)) + pi_A(a|s))."""
    return pi_a.probs / (np.exp(r.table()) + pi_a.probs)
