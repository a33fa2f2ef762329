"""Inverted pendulum balancing task with radial-basis state features."""
from __future__ import annotations

import numpy as np

from .base import InvalidActionError, StepResult

GRAVITY = 9.8
PENDULUM_MASS = 2.0
CART_MASS = 8.0
LENGTH = 0.5
ALPHA = 1.0 / (PENDULUM_MASS + CART_MASS)
DT = 0.1
FORCES = (-50.0, 0.0, 50.0)
FORCE_NOISE = 10.0  # uniform on [-10, 10] N
ANGLE_LIMIT = np.pi / 2
SUCCESS_STEPS = 3000
START_RANGE = 0.01

RBF_SIGMA_SQ = 1.0
RBF_CENTERS = np.array(
    [(t, v) for t in (-np.pi / 4, 0.0, np.pi / 4) for v in (-1.0, 0.0, 1.0)]
)
N_FEATURES = 1 + len(RBF_CENTERS)


def pendulum_features(state) -> np.ndarray:
    """Constant 1 followed by the nine RBF activations exp(-|s - mu|^2 / 2)."""
    s = np.asarray(state, dtype=float)
    d2 = ((RBF_CENTERS - s) ** 2).sum(axis=1)
    return np.concatenate(([1.0], np.exp(-d2 / (2.0 * RBF_SIGMA_SQ))))


def pendulum_features_batch(states: np.ndarray) -> np.ndarray:
    s = np.asarray(states, dtype=float)
    d2 = ((s[:, None, :] - RBF_CENTERS[None, :, :]) ** 2).sum(axis=2)
    return np.concatenate([np.ones((s.shape[0], 1)), np.exp(-d2 / (2.0 * RBF_SIGMA_SQ))], axis=1)


def pendulum_model_features_batch(states: np.ndarray) -> np.ndarray:
    """Raw state prepended to the RBF features, for dynamics regression.

    The Euler-integrated angle update is linear in (theta, theta_dot), so
    the regression basis must contain the raw state for the transition model
    to be realizable; the RBF tail captures the nonlinear gravity term.
    """
    s = np.asarray(states, dtype=float)
    return np.concatenate([s, pendulum_features_batch(s)], axis=1)


def pendulum_dynamics(theta: float, theta_dot: float, force: float) -> float:
    """Angular acceleration of the cart-pole pendulum."""
    num = (
        GRAVITY * np.sin(theta)
        - ALPHA * PENDULUM_MASS * LENGTH * theta_dot**2 * np.sin(2.0 * theta) / 2.0
        - ALPHA * np.cos(theta) * force
    )
    den = 4.0 * LENGTH / 3.0 - ALPHA * PENDULUM_MASS * LENGTH * np.cos(theta) ** 2
    return num / den


class InvertedPendulumEnv:
    """Three actions map to forces {-50, 0, +50} N plus uniform actuation noise.

    Reward is 0 per surviving step and -1 when the angle leaves
    [-pi/2, pi/2]; the episode also resets (successfully) after 3000 steps.
    """

    n_actions = len(FORCES)
    state_dim = 2

    def __init__(self, seed=None, force_noise: float = FORCE_NOISE):
        self.rng = np.random.default_rng(seed)
        self.force_noise = force_noise
        self.state = None
        self.steps_in_episode = 0
        self.reset()

    def reset(self) -> np.ndarray:
        self.state = self.rng.uniform(-START_RANGE, START_RANGE, size=2)
        self.steps_in_episode = 0
        return self.state.copy()

    def set_state(self, theta: float, theta_dot: float):
        self.state = np.array([theta, theta_dot], dtype=float)

    def step(self, action: int) -> StepResult:
        if not 0 <= action < len(FORCES):
            raise InvalidActionError(f"action {action} out of range [0, {len(FORCES)})")
        force = FORCES[action]
        if self.force_noise > 0:
            force += self.rng.uniform(-self.force_noise, self.force_noise)
        theta, theta_dot = self.state
        acc = pendulum_dynamics(theta, theta_dot, force)
        theta = theta + DT * theta_dot
        theta_dot = theta_dot + DT * acc
        self.steps_in_episode += 1
        if abs(theta) > ANGLE_LIMIT:
            self.reset()
            return StepResult(self.state.copy(), -1.0, True)
        if self.steps_in_episode >= SUCCESS_STEPS:
            self.state = np.array([theta, theta_dot])
            self.reset()
            return StepResult(self.state.copy(), 0.0, True)
        self.state = np.array([theta, theta_dot])
        return StepResult(self.state.copy(), 0.0, False)

    def reward_bounds(self):
        return -1.0, 0.0


def inverted_pendulum(seed=None, **kwargs) -> InvertedPendulumEnv:
    return InvertedPendulumEnv(seed=seed, **kwargs)
