"""Seeded random instances for the brute-force verification suites."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .mdp import Mdp, RewardFunction, TabularPolicy


def random_mdp(rng: np.random.Generator, n_states: int = 5, n_actions: int = 3,
               gamma: float = 0.9, horizon: Optional[int] = None,
               terminal: bool = False) -> Mdp:
    """Dense random MDP with Dirichlet transition rows.

    With terminal=True the last state becomes absorbing and every other
    state gains a small direct path to it.
    """
    T = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    terminals = frozenset()
    if terminal:
        t = n_states - 1
        T[t, :, :] = 0.0
        T[t, :, t] = 1.0
        T[:t, :, t] = np.maximum(T[:t, :, t], 0.05)
        T[:t] /= T[:t].sum(axis=2, keepdims=True)
        terminals = frozenset({t})
    d0 = rng.dirichlet(np.ones(n_states))
    return Mdp(n_states=n_states, n_actions=n_actions, transition=T,
               initial=d0, terminals=terminals, gamma=gamma, horizon=horizon)


def random_deterministic_mdp(rng: np.random.Generator, n_states: int = 5,
                             n_actions: int = 2, gamma: float = 0.9) -> Mdp:
    """Deterministic transitions with a reachable absorbing last state."""
    t = n_states - 1
    T = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            nxt = t if s == t else int(rng.integers(n_states))
            T[s, a, nxt] = 1.0
    # guarantee the terminal is reachable from every state under some action
    for s in range(t):
        a = int(rng.integers(n_actions))
        T[s, a, :] = 0.0
        T[s, a, min(s + 1, t) if rng.random() < 0.5 else t] = 1.0
    d0 = np.zeros(n_states)
    d0[int(rng.integers(t))] = 1.0
    return Mdp(n_states=n_states, n_actions=n_actions, transition=T,
               initial=d0, terminals=frozenset({t}), gamma=gamma)


def random_policy(rng: np.random.Generator, mdp: Mdp) -> TabularPolicy:
    probs = np.zeros((mdp.n_states, mdp.n_actions))
    for s in range(mdp.n_states):
        acts = list(mdp.actions_at(s))
        probs[s, acts] = rng.dirichlet(np.ones(len(acts)))
    return TabularPolicy(probs)


def random_tabular_reward(rng: np.random.Generator, mdp: Mdp,
                          scale: float = 1.0,
                          zero_terminal: bool = False) -> RewardFunction:
    values = rng.uniform(-scale, scale, size=(mdp.n_states, mdp.n_actions))
    if zero_terminal:
        for s in mdp.terminals:
            values[s, :] = 0.0
    return RewardFunction.tabular(values)
