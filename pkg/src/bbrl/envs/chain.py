"""The two classic chain benchmarks: a slippery 5-state chain and a double loop."""
from __future__ import annotations

import numpy as np

from ..mdp import DiscreteMdp
from .base import DiscreteEnv, StepResult

CHAIN_STATES = 5
CHAIN_SLIP = 0.2
CHAIN_SMALL_REWARD = 2.0
CHAIN_BIG_REWARD = 10.0

LOOP_STATES = 9  # shared start + two 4-state loops
LOOP_RIGHT_REWARD = 1.0
LOOP_LEFT_REWARD = 2.0


def _chain_effect(state: int, action: int):
    """Deterministic (next_state, reward) of an action before slipping."""
    if action == 0:
        return 0, CHAIN_SMALL_REWARD
    if state < CHAIN_STATES - 1:
        return state + 1, 0.0
    return state, CHAIN_BIG_REWARD


class NChainEnv(DiscreteEnv):
    """5-state chain, 2 actions; with probability 0.2 the opposite action's
    full effect (both transition and reward) is applied instead."""

    def __init__(self, seed=None, slip: float = CHAIN_SLIP):
        super().__init__(CHAIN_STATES, 2, start_state=0, seed=seed)
        self.slip = slip

    def step(self, action: int) -> StepResult:
        self.check_action(action)
        effective = action
        if self.rng.random() < self.slip:
            effective = 1 - action
        nxt, reward = _chain_effect(self.state, effective)
        self.state = nxt
        return StepResult(nxt, reward)

    def as_mdp(self, gamma: float = 0.99) -> DiscreteMdp:
        p = np.zeros((CHAIN_STATES, 2, CHAIN_STATES))
        r = np.zeros((CHAIN_STATES, 2))
        for s in range(CHAIN_STATES):
            for a in range(2):
                for eff, prob in ((a, 1.0 - self.slip), (1 - a, self.slip)):
                    nxt, rew = _chain_effect(s, eff)
                    p[s, a, nxt] += prob
                    r[s, a] += prob * rew
        return DiscreteMdp(p, r, gamma)

    def reward_bounds(self):
        return 0.0, CHAIN_BIG_REWARD


def _loop_effect(state: int, action: int):
    """Deterministic double-loop dynamics.

    State 0 is shared; 1-4 are the right loop (pays 1 on re-entering 0),
    5-8 the left loop (pays 2 on re-entering 0).  The right loop advances
    under either action; the left loop advances only under action 1, and
    action 0 inside it resets to the start with no reward.
    """
    if state == 0:
        return (1, 0.0) if action == 0 else (5, 0.0)
    if 1 <= state <= 4:  # right loop: traversed regardless of the action
        if state == 4:
            return 0, LOOP_RIGHT_REWARD
        return state + 1, 0.0
    # left loop
    if action == 0:
        return 0, 0.0
    if state == 8:
        return 0, LOOP_LEFT_REWARD
    return state + 1, 0.0


class DoubleLoopEnv(DiscreteEnv):
    """Deterministic 9-state double loop."""

    def __init__(self, seed=None):
        super().__init__(LOOP_STATES, 2, start_state=0, seed=seed)

    def step(self, action: int) -> StepResult:
        self.check_action(action)
        nxt, reward = _loop_effect(self.state, action)
        self.state = nxt
        return StepResult(nxt, reward)

    def as_mdp(self, gamma: float = 0.99) -> DiscreteMdp:
        p = np.zeros((LOOP_STATES, 2, LOOP_STATES))
        r = np.zeros((LOOP_STATES, 2))
        for s in range(LOOP_STATES):
            for a in range(2):
                nxt, rew = _loop_effect(s, a)
                p[s, a, nxt] = 1.0
                r[s, a] = rew
        return DiscreteMdp(p, r, gamma)

    def reward_bounds(self):
        return 0.0, LOOP_LEFT_REWARD


def nchain(seed=None) -> NChainEnv:
    return NChainEnv(seed=seed)


def doubleloop(seed=None) -> DoubleLoopEnv:
    return DoubleLoopEnv(seed=seed)
