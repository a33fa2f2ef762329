"""Conjugate belief over discrete MDPs: Dirichlet transitions, Normal-Gamma rewards."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .mdp import DiscreteMdp


@dataclass(frozen=True)
class Observation:
    state: int
    action: int
    reward: float
    next_state: int


class DirichletNormalGammaPosterior:
    """Per-(s,a) Dirichlet counts over next states and Normal-Gamma reward models.

    Updates mutate the object (single writer per run); sampling takes an
    explicit generator, so a frozen posterior can be sampled concurrently.
    """

    def __init__(self, n_states, n_actions, alpha0=0.5, ng0=(0.0, 1.0, 1.0, 1.0), gamma=0.99):
        if alpha0 <= 0:
            raise ValueError("Dirichlet prior parameter must be positive")
        mu0, kappa0, a0, b0 = ng0
        if kappa0 <= 0 or a0 <= 0 or b0 <= 0:
            raise ValueError("Normal-Gamma prior needs kappa, a, b > 0")
        self.n_states = n_states
        self.n_actions = n_actions
        self.gamma = gamma
        self.counts = np.full((n_states, n_actions, n_states), float(alpha0))
        self.ng_mu = np.full((n_states, n_actions), float(mu0))
        self.ng_kappa = np.full((n_states, n_actions), float(kappa0))
        self.ng_a = np.full((n_states, n_actions), float(a0))
        self.ng_b = np.full((n_states, n_actions), float(b0))

    def update(self, obs: Observation):
        s, a, r, s2 = obs.state, obs.action, obs.reward, obs.next_state
        if not (0 <= s < self.n_states and 0 <= s2 < self.n_states):
            raise IndexError(f"state index out of range: {s}, {s2}")
        if not 0 <= a < self.n_actions:
            raise IndexError(f"action index out of range: {a}")
        self.counts[s, a, s2] += 1.0
        kappa, mu = self.ng_kappa[s, a], self.ng_mu[s, a]
        self.ng_mu[s, a] = (kappa * mu + r) / (kappa + 1.0)
        self.ng_kappa[s, a] = kappa + 1.0
        self.ng_a[s, a] += 0.5
        self.ng_b[s, a] += kappa * (r - mu) ** 2 / (2.0 * (kappa + 1.0))
        return self

    def sample_mdp(self, rng: np.random.Generator) -> DiscreteMdp:
        """One MDP draw: Dirichlet rows plus the Normal-Gamma marginal of the mean."""
        g = rng.standard_gamma(self.counts)
        transition = g / g.sum(axis=2, keepdims=True)
        # mean | tau ~ N(mu, 1/(kappa tau)), tau ~ Gamma(a, b)
        tau = rng.standard_gamma(self.ng_a) / self.ng_b
        rewards = self.ng_mu + rng.standard_normal(self.ng_mu.shape) / np.sqrt(
            self.ng_kappa * tau
        )
        return DiscreteMdp(transition, rewards, self.gamma)

    def mean_mdp(self) -> DiscreteMdp:
        transition = self.counts / self.counts.sum(axis=2, keepdims=True)
        return DiscreteMdp(transition, self.ng_mu.copy(), self.gamma)

    def copy(self) -> "DirichletNormalGammaPosterior":
        out = DirichletNormalGammaPosterior(self.n_states, self.n_actions, gamma=self.gamma)
        out.counts = self.counts.copy()
        out.ng_mu = self.ng_mu.copy()
        out.ng_kappa = self.ng_kappa.copy()
        out.ng_a = self.ng_a.copy()
        out.ng_b = self.ng_b.copy()
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_states": self.n_states,
                "n_actions": self.n_actions,
                "gamma": self.gamma,
                "counts": self.counts.tolist(),
                "ng_mu": self.ng_mu.tolist(),
                "ng_kappa": self.ng_kappa.tolist(),
                "ng_a": self.ng_a.tolist(),
                "ng_b": self.ng_b.tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "DirichletNormalGammaPosterior":
        doc = json.loads(text)
        out = DirichletNormalGammaPosterior(
            doc["n_states"], doc["n_actions"], gamma=doc["gamma"]
        )
        out.counts = np.array(doc["counts"])
        out.ng_mu = np.array(doc["ng_mu"])
        out.ng_kappa = np.array(doc["ng_kappa"])
        out.ng_a = np.array(doc["ng_a"])
        out.ng_b = np.array(doc["ng_b"])
        return out


def discrete_prior(
    n_states, n_actions, alpha0=0.5, ng0=(0.0, 1.0, 1.0, 1.0), gamma=0.99
) -> DirichletNormalGammaPosterior:
    return DirichletNormalGammaPosterior(n_states, n_actions, alpha0, ng0, gamma)
