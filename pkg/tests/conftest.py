import numpy as np
import pytest

from pagar_lab.mdp import Mdp, RewardFunction, TabularPolicy


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_chain(n_states=2, gamma=0.9, horizon=None):
    """Deterministic 1-action chain ending in an absorbing last state."""
    A = 1
    T = np.zeros((n_states, A, n_states))
    for s in range(n_states - 1):
        T[s, 0, s + 1] = 1.0
    T[-1, 0, -1] = 1.0
    d0 = np.zeros(n_states)
    d0[0] = 1.0
    return Mdp(n_states=n_states, n_actions=A, transition=T, initial=d0,
               terminals=frozenset({n_states - 1}), gamma=gamma,
               horizon=horizon)


def make_single_absorbing(gamma=0.9):
    T = np.ones((1, 1, 1))
    return Mdp(n_states=1, n_actions=1, transition=T, initial=np.array([1.0]),
               terminals=frozenset({0}), gamma=gamma)


def make_two_action_onestep(r0=1.0, r1=0.0, gamma=0.9):
    """State 0 with two actions, both into a single-action absorbing state.

    The absorbing state exposes one action with zero reward, so the
    infinite-horizon soft value at state 0 has the clean closed form
    log(exp(r0) + exp(r1)).
    """
    S, A = 2, 2
    T = np.zeros((S, A, S))
    T[0, :, 1] = 1.0
    T[1, :, 1] = 1.0
    d0 = np.array([1.0, 0.0])
    mdp = Mdp(n_states=S, n_actions=A, transition=T, initial=d0,
              terminals=frozenset({1}), gamma=gamma,
              available_actions=((0, 1), (0,)))
    reward = RewardFunction.tabular(np.array([[r0, r1], [0.0, 0.0]]))
    return mdp, reward


def deterministic_policy(mdp, actions):
    return TabularPolicy.deterministic(mdp, actions)
