"""Sample-based objective estimators and the tabular adversarial trainers.

The trainers realize the alternating loop: sample antagonist/protagonist
batches, ascend each policy on its clipped-surrogate objective, then descend
the reward (or discriminator) on the regret objective plus a Lagrangian
IRL-loss penalty, and finally update the multiplier.

Policy parameters are tabular softmax logits updated with analytic
gradients; reward/discriminator parameters are updated with central
finite-difference gradients of the penalized objective (the parameter counts
are tiny at desk scale).  Runs are deterministic per seed.

Penalty sense: GAN discriminator losses are minimized, so their reward-set
constraint reads J_IRL <= delta and uses the printed penalty forms
lambda*(J+delta) / lambda*max(J+delta, 0).  The margin and windowed
likelihood losses are maximized (J_IRL >= delta), so their hinge flips to
lambda*max(delta - J, 0); the printed form would push rewards out of the
set.  delta=None selects the delta* mode: the penalty becomes -lambda*J
(ge sense) or +lambda*J (le sense) with a constant multiplier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import EmptyBatch, NonFinite, RatioOverflow
from .game import StandardUtility, WindowedUtility, regret
from .irl import (IrlLossKind, RewardFamily, ZiebartEvaluator,
                  gan_reward_from_discriminator, irl_loss)
from .mdp import (DemonstrationSet, Mdp, RewardFunction, TabularPolicy,
                  Trajectory, demo_average_return)
from .solvers import soft_policy_evaluation, standard_policy_evaluation

_NEG_INF = -1e30


# ---------------------------------------------------------------------------
# rollouts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RolloutBatch:
    """Trajectories sampled under one policy (or exact-weighted enumerations)."""

    trajectories: tuple
    source_policy: TabularPolicy
    seed: Optional[int] = None
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (len(self.trajectories),):
                raise ValueError("weights must match the trajectory count")
            object.__setattr__(self, "weights", w / w.sum())

    def weight_vector(self) -> np.ndarray:
        if self.weights is not None:
            return self.weights
        n = len(self.trajectories)
        return np.full(n, 1.0 / n)


def sample_trajectory(mdp: Mdp, pi: TabularPolicy, rng: np.random.Generator,
                      max_len: int) -> Trajectory:
    """One rollout from d0, halting at terminals or after max_len steps."""
    s = int(rng.choice(mdp.n_states, p=mdp.initial))
    steps = []
    for _ in range(max_len):
        if mdp.is_terminal(s):
            break
        a = int(rng.choice(mdp.n_actions, p=pi.probs[s]))
        steps.append((s, a))
        s = int(rng.choice(mdp.n_states, p=mdp.transition[s, a]))
    return Trajectory(tuple(steps), s)


def sample_batch(mdp: Mdp, pi: TabularPolicy, rng: np.random.Generator,
                 batch_size: int, max_len: int,
                 seed: Optional[int] = None,
                 explore_eps: float = 0.0) -> RolloutBatch:
    """With explore_eps > 0 the BEHAVIOR policy is an epsilon-mixture with
    the uniform policy over available actions, so every reachable pair keeps
    sampling support; the batch still records the mixture as its source."""
    behavior = pi
    if explore_eps > 0.0:
        uniform = TabularPolicy.uniform(mdp).probs
        behavior = TabularPolicy((1.0 - explore_eps) * pi.probs
                                 + explore_eps * uniform)
    trajs = tuple(sample_trajectory(mdp, behavior, rng, max_len)
                  for _ in range(batch_size))
    return RolloutBatch(trajectories=trajs, source_policy=behavior, seed=seed)


def exact_batch(mdp: Mdp, pi: TabularPolicy, max_len: int) -> RolloutBatch:
    """Full trajectory enumeration weighted by exact policy probabilities.

    Feeding this batch to the estimators reproduces closed-form expectations.
    """
    from .mdp import enumerate_trajectories, trajectory_probability
    pairs = enumerate_trajectories(mdp, max_len)
    trajs, weights = [], []
    for tau, _ in pairs:
        p = trajectory_probability(mdp, pi, tau)
        if p > 0.0:
            trajs.append(tau)
            weights.append(p)
    return RolloutBatch(trajectories=tuple(trajs), source_policy=pi,
                        weights=np.array(weights))


# ---------------------------------------------------------------------------
# configuration and state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the adversarial trainers.

    Defaults follow the reported training setup: gamma 0.99, batch 64,
    clipping 0.2, lambda0 1e3, sigma 0.2, i_c 0.5, beta 0.0.
    """

    n_iters: int = 500
    batch_size: int = 64
    rollout_len: int = 50
    ppo_clip: float = 0.2
    sigma: float = 0.2
    surrogate_clip: float = 0.2
    lambda0: float = 1e3
    mu: float = 0.0
    delta: Optional[float] = None
    lambda_floor: bool = False
    beta: float = 0.0
    i_c: float = 0.5
    lr_policy: float = 0.2
    lr_reward: float = 0.05
    ratio_cap: float = 1e6
    average_rewards: bool = False
    windowed_max_len: Optional[int] = None
    penalty_form: str = "auto"          # auto | plain | hinge
    irl_kind: Optional[IrlLossKind] = None
    reward_family: Optional[RewardFamily] = None
    init_reward_params: Optional[np.ndarray] = None
    init_discriminator: Optional[np.ndarray] = None
    ic_penalty: Optional[Callable] = None
    fd_step: float = 1e-6
    disc_logit_bound: float = 3.0
    explore_eps: float = 0.0

    def utility_model(self):
        if self.windowed_max_len is not None:
            return WindowedUtility(self.windowed_max_len)
        return StandardUtility()


@dataclass
class GameState:
    """Mutable state of one training run."""

    pi_p_logits: np.ndarray
    pi_a_logits: np.ndarray
    reward_params: np.ndarray
    lam: float
    beta: float
    iteration: int
    config: TrainConfig


@dataclass(frozen=True)
class ObjectiveEstimate:
    """Monte-Carlo estimates of the reward/policy objectives."""

    j_r1: float
    j_r2: float
    j_r3: float
    j_r4: float
    j_pi_a: float
    j_pagar: float
    j_irl: float
    ratios_summary: dict
    skipped_steps: int = 0


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    j_irl: float
    j_pagar: float
    lam: float
    exact_regret: float
    pi_p_summary: tuple


# ---------------------------------------------------------------------------
# objective estimators
# ---------------------------------------------------------------------------

def _traj_sum(values, gamma: float, average: bool) -> float:
    if len(values) == 0:
        return 0.0
    if average:
        return float(np.mean(values))
    return float(sum(v * gamma ** t for t, v in enumerate(values)))


def _batch_mean(batch: RolloutBatch, per_traj: Callable[[Trajectory], float]) -> float:
    w = batch.weight_vector()
    return float(sum(wi * per_traj(tau) for wi, tau in zip(w, batch.trajectories)))


def _track(summary, name, value):
    lo, hi = summary.get(name, (np.inf, -np.inf))
    summary[name] = (min(lo, value), max(hi, value))


def estimate_objectives(batch_a: RolloutBatch, batch_p: RolloutBatch,
                        pi_p: TabularPolicy, pi_a: TabularPolicy,
                        r: RewardFunction, config: TrainConfig, mdp: Mdp,
                        advantage_table: Optional[np.ndarray] = None,
                        demos: Optional[DemonstrationSet] = None,
                        full: bool = True) -> ObjectiveEstimate:
    """Monte-Carlo estimates of J_{R,1..4}, J_{pi_A}, and J_PAGAR.

    J_{R,1} accumulates (xi - 1) * r over antagonist samples plus
    C1 * max|r|; J_{R,2} accumulates (1 - 1/xi) * r over protagonist samples
    plus C2 * max|r|; J_{R,3} / J_{R,4} use the clipped exp(r)/pi ratios;
    J_{pi_A} is the clipped advantage surrogate on antagonist samples.
    C1 = -gamma*a/(1-gamma) and C2 = +gamma*a/(1-gamma) with a the
    batch-estimated maximum KL divergence between pi_A and pi_P; the
    average-reward (finite-window) mode drops the divergent 1/(1-gamma)
    horizon factor.

    Steps whose denominator policy has zero support are skipped and counted.
    `advantage_table` supplies A-hat for J_{pi_A}; when absent it is computed
    exactly from `mdp` (required in that case).

    Raises:
        EmptyBatch, RatioOverflow.
    """
    if not batch_a.trajectories or not batch_p.trajectories:
        raise EmptyBatch("both batches must contain trajectories")
    table = r.table()
    gamma = mdp.gamma
    avg = config.average_rewards
    clip_d = config.surrogate_clip
    sigma = config.sigma
    summary = {}
    skipped = 0

    if advantage_table is None:
        _, _, advantage_table = standard_policy_evaluation(mdp, pi_a, r)

    def ratio(num, den, name):
        nonlocal skipped
        if den <= 0.0:
            skipped += 1
            return None
        q = num / den
        if q > config.ratio_cap:
            raise RatioOverflow(f"{name} ratio {q} exceeds cap")
        _track(summary, name, q)
        return q

    # --- J_R1: antagonist samples, (xi - 1) r ---
    def r1_term(tau):
        vals = []
        for s, a in tau.steps:
            xi = ratio(pi_p.prob(s, a), pi_a.prob(s, a), "xi")
            vals.append(0.0 if xi is None else (xi - 1.0) * table[s, a])
        return _traj_sum(vals, gamma, avg)

    # --- J_R2: protagonist samples, (1 - 1/xi) r ---
    def r2_term(tau):
        vals = []
        for s, a in tau.steps:
            inv = ratio(pi_a.prob(s, a), pi_p.prob(s, a), "delta2")
            vals.append(0.0 if inv is None else (1.0 - inv) * table[s, a])
        return _traj_sum(vals, gamma, avg)

    def plain_return(tau):
        return _traj_sum([table[s, a] for s, a in tau.steps], gamma, avg)

    def clipped_term(tau, pi_den, name):
        vals = []
        for s, a in tau.steps:
            d = ratio(math.exp(table[s, a]), pi_den.prob(s, a), name)
            if d is None:
                vals.append(0.0)
            else:
                clipped = min(max(d, 1.0 - clip_d), 1.0 + clip_d)
                vals.append(min(d * table[s, a], clipped * table[s, a]))
        return _traj_sum(vals, gamma, avg)

    def pi_a_term(tau):
        vals = []
        for s, a in tau.steps:
            xi = ratio(pi_p.prob(s, a), pi_a.prob(s, a), "xi")
            if xi is None:
                vals.append(0.0)
            else:
                adv = advantage_table[s, a]
                clipped = min(max(xi, 1.0 - sigma), 1.0 + sigma)
                vals.append(min(xi * adv, clipped * adv))
        return _traj_sum(vals, gamma, avg)

    # batch-estimated max KL between pi_A and pi_P over visited states
    visited = {s for tau in batch_a.trajectories for s, _ in tau.steps}
    visited |= {s for tau in batch_p.trajectories for s, _ in tau.steps}
    alpha_hat = 0.0
    for s in visited:
        pa, pp = pi_a.probs[s], pi_p.probs[s]
        kl = float(np.sum(np.where(pa > 0.0,
                                   pa * (np.log(np.maximum(pa, 1e-300))
                                         - np.log(np.maximum(pp, 1e-300))),
                                   0.0)))
        alpha_hat = max(alpha_hat, kl)
    # average-reward (finite-window) runs drop the 1/(1-gamma) horizon blowup
    if avg or gamma >= 1.0:
        c1 = -gamma * alpha_hat
    else:
        c1 = -gamma * alpha_hat / (1.0 - gamma)
    c2 = -c1

    max_r_a = max((abs(table[s, a]) for tau in batch_a.trajectories
                   for s, a in tau.steps), default=0.0)
    max_r_p = max((abs(table[s, a]) for tau in batch_p.trajectories
                   for s, a in tau.steps), default=0.0)

    j_r1 = _batch_mean(batch_a, r1_term) + c1 * max_r_a
    j_r2 = _batch_mean(batch_p, r2_term) + c2 * max_r_p
    if full:
        j_r3 = _batch_mean(batch_p, plain_return) - _batch_mean(
            batch_a, lambda t: clipped_term(t, pi_a, "delta3"))
        j_r4 = _batch_mean(batch_p, plain_return) - _batch_mean(
            batch_p, lambda t: clipped_term(t, pi_p, "delta4"))
    else:
        j_r3 = j_r4 = float("nan")
    j_pi_a = _batch_mean(batch_a, pi_a_term)

    j_irl = float("nan")
    if demos is not None:
        u_e = demo_average_return(r, demos, gamma)
        j_irl = u_e - _batch_mean(batch_a, plain_return)

    return ObjectiveEstimate(
        j_r1=j_r1, j_r2=j_r2, j_r3=j_r3, j_r4=j_r4, j_pi_a=j_pi_a,
        j_pagar=j_r1 + j_r2, j_irl=j_irl,
        ratios_summary={k: {"min": v[0], "max": v[1]} for k, v in summary.items()},
        skipped_steps=skipped)


# ---------------------------------------------------------------------------
# lambda schedule
# ---------------------------------------------------------------------------

def update_lambda(lam: float, j_irl: float, delta: float, mu: float,
                  lambda0: float = 1e3, floor: bool = False,
                  sense: str = "le") -> float:
    """Multiplicative multiplier update lambda *= exp(mu * violation).

    The printed rule is lambda * exp(mu * (J_IRL - delta)) for losses that
    are minimized toward the target (sense "le"); maximized losses flip the
    sign.  mu = 0 leaves lambda unchanged (the delta* mode).  With
    floor=True the result is clamped below by lambda0.
    """
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if mu == 0.0:
        return lam
    gap = (j_irl - delta) if sense == "le" else (delta - j_irl)
    new = lam * math.exp(mu * gap)
    if floor:
        new = max(lambda0, new)
    return new


def update_lambda_state(state: GameState, j_irl: float,
                        sense: str = "le") -> GameState:
    cfg = state.config
    if cfg.delta is None or cfg.mu == 0.0:
        return state
    state.lam = update_lambda(state.lam, j_irl, cfg.delta, cfg.mu,
                              lambda0=cfg.lambda0, floor=cfg.lambda_floor,
                              sense=sense)
    return state


# ---------------------------------------------------------------------------
# tabular softmax policies and analytic policy gradients
# ---------------------------------------------------------------------------

def _softmax_policy(mdp: Mdp, logits: np.ndarray) -> TabularPolicy:
    masked = np.where(mdp.action_mask(), logits, _NEG_INF)
    z = masked - masked.max(axis=1, keepdims=True)
    p = np.exp(z)
    return TabularPolicy(p / p.sum(axis=1, keepdims=True))


def _policy_step_gradient(mdp: Mdp, batch: RolloutBatch, pi: TabularPolicy,
                          score: np.ndarray, gamma: float) -> np.ndarray:
    """Gradient of sum_batch w * sum_t gamma^t score(s,a) * log pi(a|s)
    w.r.t. the softmax logits, evaluated at the behavior policy."""
    grad = np.zeros_like(pi.probs)
    w = batch.weight_vector()
    for wi, tau in zip(w, batch.trajectories):
        for t, (s, a) in enumerate(tau.steps):
            coef = wi * (gamma ** t) * score[s, a]
            grad[s, a] += coef
            grad[s] -= coef * pi.probs[s]
    return grad


def _soft_advantage_for(mdp, pi, r, config):
    """Soft advantage table of pi under r for the configured utility mode."""
    if config.windowed_max_len is None:
        _, _, adv = soft_policy_evaluation(mdp, pi, r)
        return adv
    # windowed mode: halted backward induction, first-step tables
    table = r.table()
    final = table.mean(axis=1)
    term = mdp.terminal_mask
    rp = np.einsum("sa,sa->s", pi.probs, table)
    P = np.einsum("sa,sat->st", pi.probs, mdp.transition)
    v = final.copy()
    for _ in range(config.windowed_max_len):
        v = np.where(term, final, rp + mdp.gamma * (P @ v))
    q = table + mdp.gamma * np.einsum("sat,t->sa", mdp.transition, v)
    return q - v[:, None]


def _ascend_policy(mdp, logits, batch, r, config, extra_grad=None):
    """One clipped-surrogate ascent step on J_RL; returns new logits."""
    pi = _softmax_policy(mdp, logits)
    adv = _soft_advantage_for(mdp, pi, r, config)
    with np.errstate(divide="ignore"):
        logp = np.where(pi.probs > 0.0,
                        np.log(np.maximum(pi.probs, 1e-300)), 0.0)
    score = adv - logp                     # soft policy gradient score
    grad = _policy_step_gradient(mdp, batch, pi, score, mdp.gamma)
    if extra_grad is not None:
        grad = grad + extra_grad
    new = logits + config.lr_policy * grad
    return np.where(mdp.action_mask(), new, logits)


def _off_policy_grad(mdp, batch_a, pi_p, pi_a, advantage_a, config):
    """Gradient of the clipped off-policy term J_{pi_A}(pi_P) w.r.t. pi_P
    logits (zero where the clip is active)."""
    grad = np.zeros_like(pi_p.probs)
    w = batch_a.weight_vector()
    for wi, tau in zip(w, batch_a.trajectories):
        for t, (s, a) in enumerate(tau.steps):
            den = pi_a.prob(s, a)
            if den <= 0.0:
                continue
            xi = pi_p.prob(s, a) / den
            adv = advantage_a[s, a]
            # min(xi*A, clip(xi)*A): gradient flows only through the
            # unclipped branch when it is the active one
            if adv >= 0.0:
                active = xi <= 1.0 + config.sigma
            else:
                active = xi >= 1.0 - config.sigma
            if not active:
                continue
            coef = wi * (mdp.gamma ** t) * adv * xi
            grad[s, a] += coef
            grad[s] -= coef * pi_p.probs[s]
    return grad


# ---------------------------------------------------------------------------
# trainers
# ---------------------------------------------------------------------------

def _penalty(j_irl: float, lam: float, delta: Optional[float], form: str,
             sense: str) -> float:
    if delta is None:
        return -lam * j_irl if sense == "ge" else lam * j_irl
    if form == "plain":
        return lam * (delta - j_irl) if sense == "ge" else lam * (j_irl + delta)
    gap = (delta - j_irl) if sense == "ge" else (j_irl + delta)
    return lam * max(gap, 0.0)


def _resolve_penalty_form(config: TrainConfig, sense: str) -> str:
    if config.penalty_form != "auto":
        return config.penalty_form
    return "hinge" if sense == "ge" else "plain"


def _fd_gradient(objective: Callable[[np.ndarray], float], params: np.ndarray,
                 step: float) -> np.ndarray:
    grad = np.zeros_like(params, dtype=float)
    for i in range(params.size):
        up = params.copy()
        dn = params.copy()
        up.flat[i] += step
        dn.flat[i] -= step
        grad.flat[i] = (objective(up) - objective(dn)) / (2.0 * step)
    return grad


def _exact_regret(mdp, pi_p, r, model) -> float:
    return regret(mdp, pi_p, r, utility_model=model).regret


def _pi_summary(pi: TabularPolicy) -> tuple:
    start = pi.probs[0]
    return tuple(float(x) for x in start)


def train_pagar(mdp: Mdp, demos: DemonstrationSet, config: TrainConfig,
                seed: int):
    """Tabular realization of the alternating minimax-regret trainer.

    Per iteration: sample antagonist and protagonist batches; ascend the
    antagonist on its entropy-regularized objective; ascend the protagonist
    on the same plus the clipped off-policy term estimated from antagonist
    samples; descend the reward parameters on J_PAGAR plus the Lagrangian
    IRL penalty; update lambda.

    Returns:
        (protagonist TabularPolicy, list of TraceRow)
    """
    if config.reward_family is None or config.irl_kind is None:
        raise ValueError("config needs reward_family and irl_kind")
    family = config.reward_family
    kind = config.irl_kind
    sense = "ge"                     # margin and likelihood losses are maximized
    form = _resolve_penalty_form(config, sense)
    model = config.utility_model()
    rng = np.random.default_rng(seed)

    # small seeded asymmetry so the importance ratios leave 1 immediately
    logits_p = 0.1 * rng.standard_normal((mdp.n_states, mdp.n_actions))
    logits_a = 0.1 * rng.standard_normal((mdp.n_states, mdp.n_actions))
    params = (np.asarray(config.init_reward_params, dtype=float).copy()
              if config.init_reward_params is not None
              else 0.5 * (family.lower + family.upper))
    state = GameState(pi_p_logits=logits_p, pi_a_logits=logits_a,
                      reward_params=params, lam=config.lambda0,
                      beta=config.beta, iteration=0, config=config)

    ziebart = (ZiebartEvaluator(mdp, demos, kind.max_len)
               if kind.kind == "ziebart" else None)

    def exact_irl(r):
        if ziebart is not None:
            return ziebart.loss(r)
        return irl_loss(mdp, demos, r, kind)

    trace = []
    rollout = (config.windowed_max_len if config.windowed_max_len is not None
               else config.rollout_len)
    for it in range(config.n_iters):
        pi_p = _softmax_policy(mdp, state.pi_p_logits)
        pi_a = _softmax_policy(mdp, state.pi_a_logits)
        r = family.make(np.clip(state.reward_params, family.lower, family.upper))

        batch_a = sample_batch(mdp, pi_a, rng, config.batch_size, rollout,
                               explore_eps=config.explore_eps)
        batch_p = sample_batch(mdp, pi_p, rng, config.batch_size, rollout,
                               explore_eps=config.explore_eps)

        # antagonist ascent on J_RL
        state.pi_a_logits = _ascend_policy(mdp, state.pi_a_logits, batch_a, r,
                                           config)

        # protagonist ascent on J_RL + J_{pi_A}
        adv_a = _soft_advantage_for(mdp, pi_a, r, config)
        off_grad = _off_policy_grad(mdp, batch_a, pi_p, pi_a, adv_a, config)
        state.pi_p_logits = _ascend_policy(mdp, state.pi_p_logits, batch_p, r,
                                           config, extra_grad=off_grad)

        # reward descent on J_PAGAR + penalty
        pi_p_new = _softmax_policy(mdp, state.pi_p_logits)
        pi_a_new = _softmax_policy(mdp, state.pi_a_logits)

        def reward_objective(p):
            rr = family.make(np.clip(p, family.lower, family.upper))
            est = estimate_objectives(batch_a, batch_p, pi_p_new, pi_a_new,
                                      rr, config, mdp=mdp, full=False,
                                      advantage_table=np.zeros_like(rr.table()))
            return est.j_pagar + _penalty(exact_irl(rr), state.lam,
                                          config.delta, form, sense)

        if config.lr_reward != 0.0 and np.any(family.upper > family.lower):
            grad = _fd_gradient(reward_objective, state.reward_params,
                                config.fd_step)
            state.reward_params = np.clip(
                state.reward_params - config.lr_reward * grad,
                family.lower, family.upper)
        if not np.all(np.isfinite(state.reward_params)):
            raise NonFinite("reward parameters diverged")
        if not (np.all(np.isfinite(state.pi_p_logits[mdp.action_mask()]))
                and np.all(np.isfinite(state.pi_a_logits[mdp.action_mask()]))):
            raise NonFinite("policy logits diverged")

        r_new = family.make(state.reward_params)
        j_irl_now = exact_irl(r_new)
        if config.delta is not None and config.mu != 0.0:
            state.lam = update_lambda(state.lam, j_irl_now, config.delta,
                                      config.mu, lambda0=config.lambda0,
                                      floor=config.lambda_floor, sense=sense)

        est = estimate_objectives(batch_a, batch_p, pi_p_new, pi_a_new, r_new,
                                  config, mdp=mdp, full=False,
                                  advantage_table=np.zeros_like(r_new.table()))
        trace.append(TraceRow(
            iteration=it, j_irl=float(j_irl_now), j_pagar=float(est.j_pagar),
            lam=float(state.lam),
            exact_regret=float(_exact_regret(mdp, pi_p_new, r_new, model)),
            pi_p_summary=_pi_summary(pi_p_new)))
        state.iteration = it + 1

    return _softmax_policy(mdp, state.pi_p_logits), trace


def default_ic_penalty(logits: np.ndarray) -> float:
    """Default variational-bottleneck stand-in: mean squared logit."""
    return float(np.mean(logits ** 2))


def train_gail_pagar(mdp: Mdp, demos: DemonstrationSet, config: TrainConfig,
                     seed: int, variant: str = "GAIL"):
    """Discriminator-reward variants of the trainer (GAIL / VAIL).

    The reward is represented by a tabular discriminator squashed to (0, 1);
    the recovered reward is log(pi_A/D - pi_A).  The discriminator descends
    J_PAGAR + lambda * max(J_IRL + delta, 0), plus beta * J_IC for VAIL with
    the printed beta update.  J_IRL is the sample-based discriminator loss
    E_{D_A}[log D] + E_E[log(1 - D)].
    """
    if variant not in ("GAIL", "VAIL"):
        raise ValueError("variant must be GAIL or VAIL")
    sense = "le"                    # the GAN loss is minimized toward -delta
    form = _resolve_penalty_form(config, sense)
    model = config.utility_model()
    rng = np.random.default_rng(seed)
    ic_penalty = config.ic_penalty or default_ic_penalty

    logits_p = 0.1 * rng.standard_normal((mdp.n_states, mdp.n_actions))
    logits_a = 0.1 * rng.standard_normal((mdp.n_states, mdp.n_actions))
    if config.init_discriminator is not None:
        d0 = np.asarray(config.init_discriminator, dtype=float)
        d_logits = np.log(d0) - np.log1p(-d0)
    else:
        d_logits = np.zeros((mdp.n_states, mdp.n_actions))
    state = GameState(pi_p_logits=logits_p, pi_a_logits=logits_a,
                      reward_params=d_logits, lam=config.lambda0,
                      beta=config.beta, iteration=0, config=config)

    def sigmoid(x):
        return 1.0 / (1.0 + np.exp(-x))

    def reward_of(d_logits_flat, pi_a):
        d = np.clip(sigmoid(d_logits_flat.reshape(d_logits.shape)),
                    1e-12, 1.0 - 1e-12)
        return gan_reward_from_discriminator(d, pi_a)

    def gan_irl_loss(d_logits_flat, batch_a):
        """Negated classifier log-likelihood (>= 0 near the optimum).

        The discriminator's pairwise objective is concave in D, so the
        posterior density ratio is its MAXIMIZER; the IRL loss descended
        here is the negation, which the hinge penalty keeps near delta.
        """
        d = np.clip(sigmoid(d_logits_flat.reshape(d_logits.shape)),
                    1e-12, 1.0 - 1e-12)
        agent = _batch_mean(batch_a, lambda tau: _traj_sum(
            [math.log(d[s, a]) for s, a in tau.steps], mdp.gamma,
            config.average_rewards))
        w = demos.weight_vector()
        expert = float(sum(
            wi * _traj_sum([math.log(1.0 - d[s, a]) for s, a in tau.steps],
                           mdp.gamma, config.average_rewards)
            for wi, tau in zip(w, demos.trajectories)))
        return -(agent + expert)

    trace = []
    rollout = (config.windowed_max_len if config.windowed_max_len is not None
               else config.rollout_len)
    for it in range(config.n_iters):
        pi_p = _softmax_policy(mdp, state.pi_p_logits)
        pi_a = _softmax_policy(mdp, state.pi_a_logits)
        r = reward_of(state.reward_params, pi_a)

        batch_a = sample_batch(mdp, pi_a, rng, config.batch_size, rollout,
                               explore_eps=config.explore_eps)
        batch_p = sample_batch(mdp, pi_p, rng, config.batch_size, rollout,
                               explore_eps=config.explore_eps)

        state.pi_a_logits = _ascend_policy(mdp, state.pi_a_logits, batch_a, r,
                                           config)
        adv_a = _soft_advantage_for(mdp, pi_a, r, config)
        off_grad = _off_policy_grad(mdp, batch_a, pi_p, pi_a, adv_a, config)
        state.pi_p_logits = _ascend_policy(mdp, state.pi_p_logits, batch_p, r,
                                           config, extra_grad=off_grad)

        pi_p_new = _softmax_policy(mdp, state.pi_p_logits)
        pi_a_new = _softmax_policy(mdp, state.pi_a_logits)

        def disc_objective(p):
            rr = reward_of(p, pi_a_new)
            est = estimate_objectives(batch_a, batch_p, pi_p_new, pi_a_new,
                                      rr, config, mdp=mdp, full=False,
                                      advantage_table=np.zeros_like(rr.table()))
            j = est.j_pagar + _penalty(gan_irl_loss(p, batch_a), state.lam,
                                       config.delta, form, sense)
            if variant == "VAIL" and state.beta != 0.0:
                j += state.beta * ic_penalty(p.reshape(d_logits.shape))
            return j

        flat = state.reward_params.ravel().copy()
        grad = _fd_gradient(disc_objective, flat, config.fd_step)
        flat = flat - config.lr_reward * grad
        if not np.all(np.isfinite(flat)):
            raise NonFinite("discriminator parameters diverged")
        # weight clipping keeps the induced reward family compact
        b = config.disc_logit_bound
        state.reward_params = np.clip(flat.reshape(d_logits.shape), -b, b)

        j_irl_now = gan_irl_loss(state.reward_params.ravel(), batch_a)
        if variant == "VAIL":
            j_ic = ic_penalty(state.reward_params)
            state.beta = max(0.0, state.beta - config.mu * (j_ic / 3.0 - config.i_c))
        if config.delta is not None and config.mu != 0.0:
            state.lam = update_lambda(state.lam, j_irl_now, config.delta,
                                      config.mu, lambda0=config.lambda0,
                                      floor=config.lambda_floor, sense=sense)

        r_new = reward_of(state.reward_params.ravel(), pi_a_new)
        est = estimate_objectives(batch_a, batch_p, pi_p_new, pi_a_new, r_new,
                                  config, mdp=mdp, full=False,
                                  advantage_table=np.zeros_like(r_new.table()))
        trace.append(TraceRow(
            iteration=it, j_irl=float(j_irl_now), j_pagar=float(est.j_pagar),
            lam=float(state.lam),
            exact_regret=float(_exact_regret(mdp, pi_p_new, r_new, model)),
            pi_p_summary=_pi_summary(pi_p_new)))
        state.iteration = it + 1

    return _softmax_policy(mdp, state.pi_p_logits), trace
