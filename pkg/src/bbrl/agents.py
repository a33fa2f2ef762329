"""Acting agents: posterior maintenance plus a replanning policy."""
from __future__ import annotations

import numpy as np

from .continuous import ContinuousPlannerConfig, continuous_bbi_plan
from .mdp import StationaryPolicy
from .planners import PlannerConfig, bbi_plan, mmbi_plan, psrl_plan
from .posterior import DirichletNormalGammaPosterior, Observation
from .regression import BayesLinRegPosterior

DISCRETE_ALGORITHMS = ("random", "psrl", "mmbi", "bbi", "mean-field-bbi")
CONTINUOUS_ALGORITHMS = ("random", "bbi", "mean-field-bbi")


def triangular_schedule():
    """Replan times 1, 3, 6, 10, ... as an infinite iterator."""
    t, k = 1, 2
    while True:
        yield t
        t += k
        k += 1


class DiscreteAgent:
    """Tabular agent: conjugate posterior, scheduled replanning, greedy acting.

    Between replans the agent executes the first-step policy of its latest
    plan.
    """

    def __init__(
        self,
        algorithm: str,
        n_states: int,
        n_actions: int,
        config: PlannerConfig,
        rng: np.random.Generator,
        gamma: float = 0.99,
        alpha0: float = 0.5,
        ng0=(0.0, 1.0, 1.0, 1.0),
    ):
        if algorithm not in DISCRETE_ALGORITHMS:
            raise ValueError(f"unknown discrete algorithm {algorithm!r}")
        self.algorithm = algorithm
        self.config = config
        self.rng = rng
        self.posterior = DirichletNormalGammaPosterior(
            n_states, n_actions, alpha0=alpha0, ng0=ng0, gamma=gamma
        )
        self.policy = StationaryPolicy.uniform(n_states, n_actions)
        self._schedule = triangular_schedule()
        self.next_replan = next(self._schedule)

    def maybe_replan(self, t: int) -> bool:
        if t < self.next_replan or self.algorithm == "random":
            return False
        while self.next_replan <= t:
            self.next_replan = next(self._schedule)
        self.replan()
        return True

    def replan(self):
        if self.algorithm == "psrl":
            self.policy = psrl_plan(self.posterior, self.rng)
        elif self.algorithm == "mmbi":
            plan = mmbi_plan(
                self.posterior, self.config.n_mdp_samples, self.config.lookahead, self.rng
            )
            self.policy = plan.first()
        elif self.algorithm in ("bbi", "mean-field-bbi"):
            plan = bbi_plan(
                self.posterior,
                self.config,
                self.rng,
                uniform_weights=(self.algorithm == "mean-field-bbi"),
            )
            self.policy = plan.policy.first()

    def act(self, state: int) -> int:
        return self.policy.sample_action(state, self.rng)

    def observe(self, state, action, reward, next_state, terminal=False):
        self.posterior.update(Observation(state, action, reward, next_state))


class HistoryStateSampler:
    """Probe-state distribution for continuous planning: a mixture of states
    drawn uniformly from the whole interaction history and uniform draws
    over a support box."""

    def __init__(self, box_low, box_high, history_fraction=0.8):
        self.low = np.asarray(box_low, dtype=float)
        self.high = np.asarray(box_high, dtype=float)
        self.history_fraction = history_fraction
        self._buffer = []

    def push(self, state):
        self._buffer.append(np.asarray(state, dtype=float))

    def __call__(self, n: int, rng: np.random.Generator) -> np.ndarray:
        uniform = rng.uniform(self.low, self.high, size=(n, self.low.shape[0]))
        if not self._buffer:
            return uniform
        n_hist = int(round(self.history_fraction * n))
        if n_hist == 0:
            return uniform
        idx = rng.integers(0, len(self._buffer), size=n_hist)
        out = uniform
        out[:n_hist] = np.stack([self._buffer[i] for i in idx])
        return out


class ContinuousAgent:
    """Linear-regression posterior over dynamics plus fitted-Q replanning.

    ``feature_fn`` is the value-function basis; ``dyn_feature_fn`` (defaults
    to the same map) is the input basis of the dynamics and reward
    regressors.
    """

    def __init__(
        self,
        algorithm: str,
        state_dim: int,
        n_actions: int,
        feature_fn,
        config: ContinuousPlannerConfig,
        rng: np.random.Generator,
        state_sampler: HistoryStateSampler,
        gamma: float = 0.99,
        dyn_feature_fn=None,
    ):
        if algorithm not in CONTINUOUS_ALGORITHMS:
            raise ValueError(f"unknown continuous algorithm {algorithm!r}")
        self.algorithm = algorithm
        self.config = config
        self.rng = rng
        self.n_actions = n_actions
        self.feature_fn = feature_fn
        self.dyn_feature_fn = dyn_feature_fn or feature_fn
        feature_dim = self.dyn_feature_fn(np.zeros((1, state_dim))).shape[1]
        self.posterior = BayesLinRegPosterior(state_dim, feature_dim, n_actions, gamma=gamma)
        self.state_sampler = state_sampler
        self.plan = None
        self._schedule = triangular_schedule()
        self.next_replan = next(self._schedule)

    def maybe_replan(self, t: int) -> bool:
        if t < self.next_replan or self.algorithm == "random":
            return False
        while self.next_replan <= t:
            self.next_replan = next(self._schedule)
        self.replan()
        return True

    def replan(self):
        self.plan = continuous_bbi_plan(
            self.posterior,
            self.feature_fn,
            self.state_sampler,
            self.config,
            self.rng,
            uniform_weights=(self.algorithm == "mean-field-bbi"),
            dyn_feature_fn=self.dyn_feature_fn,
        )

    def act(self, state) -> int:
        if self.algorithm == "random" or self.plan is None:
            return int(self.rng.integers(0, self.n_actions))
        return self.plan.policy.act(state)

    def observe(self, state, action, reward, next_state, terminal=False):
        self.state_sampler.push(state)
        phi = self.dyn_feature_fn(np.asarray(state, dtype=float)[None, :])[0]
        # reset transitions carry no dynamics information
        self.posterior.update(phi, action, reward, None if terminal else next_state)
