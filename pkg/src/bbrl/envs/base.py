"""Common simulator plumbing shared by the benchmark environments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StepResult:
    next_state: object
    reward: float
    terminal: bool = False


class InvalidActionError(ValueError):
    pass


class DiscreteEnv:
    """Tabular simulator backed by an explicit kernel and reward model.

    Subclasses fill in the kernel; the base class owns the RNG so that a
    given seed produces a bit-identical trajectory.
    """

    def __init__(self, n_states: int, n_actions: int, start_state: int, seed=None):
        self.n_states = n_states
        self.n_actions = n_actions
        self.start_state = start_state
        self.rng = np.random.default_rng(seed)
        self.state = start_state

    def reset(self) -> int:
        self.state = self.start_state
        return self.state

    def set_state(self, state: int):
        if not 0 <= state < self.n_states:
            raise ValueError(f"state {state} out of range")
        self.state = state

    def check_action(self, action: int):
        if not 0 <= action < self.n_actions:
            raise InvalidActionError(f"action {action} out of range [0, {self.n_actions})")

    def step(self, action: int) -> StepResult:
        raise NotImplementedError

    def reward_bounds(self):
        """(r_min, r_max) over all attainable rewards; used to scale likelihoods."""
        raise NotImplementedError
