"""Seeded random linear-dynamics environment: 4 state dimensions, 11 actions."""
from __future__ import annotations

import numpy as np

from .base import InvalidActionError, StepResult

N_DIMS = 4
N_ACTIONS = 11
SPECTRAL_RADIUS_CAP = 0.95
STATE_BOUND = 100.0
EPISODE_CAP = 200


class LinearModelEnv:
    """s' = A_a s (+ small Gaussian noise), r = b_a . s.

    The per-action matrices are generated once from the seed and rescaled so
    every spectral radius is at most 0.95, which keeps trajectories bounded.
    Episodes reset when the state blows past ``STATE_BOUND`` in sup norm or
    after ``EPISODE_CAP`` steps.
    """

    n_actions = N_ACTIONS
    state_dim = N_DIMS

    def __init__(self, seed=0, noise_std: float = 0.01):
        self.rng = np.random.default_rng(seed)
        self.noise_std = noise_std
        gen = np.random.default_rng(seed)  # matrices depend on the seed only
        self.transition_matrices = np.empty((N_ACTIONS, N_DIMS, N_DIMS))
        for a in range(N_ACTIONS):
            m = gen.standard_normal((N_DIMS, N_DIMS))
            rho = max(abs(np.linalg.eigvals(m)))
            if rho > SPECTRAL_RADIUS_CAP:
                m *= SPECTRAL_RADIUS_CAP / rho
            self.transition_matrices[a] = m
        self.reward_vectors = gen.standard_normal((N_ACTIONS, N_DIMS))
        self._start_gen = gen
        self.state = None
        self.steps_in_episode = 0
        self.reset()

    def reset(self) -> np.ndarray:
        self.state = self.rng.uniform(-1.0, 1.0, size=N_DIMS)
        self.steps_in_episode = 0
        return self.state.copy()

    def step(self, action: int) -> StepResult:
        if not 0 <= action < N_ACTIONS:
            raise InvalidActionError(f"action {action} out of range [0, {N_ACTIONS})")
        reward = float(self.reward_vectors[action] @ self.state)
        nxt = self.transition_matrices[action] @ self.state
        if self.noise_std > 0:
            nxt = nxt + self.rng.normal(0.0, self.noise_std, size=N_DIMS)
        self.steps_in_episode += 1
        terminal = (
            np.max(np.abs(nxt)) > STATE_BOUND or self.steps_in_episode >= EPISODE_CAP
        )
        if terminal:
            self.state = self.rng.uniform(-1.0, 1.0, size=N_DIMS)
            self.steps_in_episode = 0
        else:
            self.state = nxt
        return StepResult(self.state.copy(), reward, terminal)

    def reward_bounds(self):
        """Bound |b_a . s| for typical states; trajectories contract so the
        state rarely leaves a ball of radius ~2 around the origin."""
        bound = 2.0 * float(np.max(np.linalg.norm(self.reward_vectors, axis=1)))
        return -bound, bound


def linear_model(seed=0, **kwargs) -> LinearModelEnv:
    return LinearModelEnv(seed=seed, **kwargs)
