"""Per-action Bayesian regression models for continuous-state dynamics.

Transitions use a matrix-Normal--inverse-Wishart model per action on
(feature vector -> next state); rewards use a Normal--inverse-Gamma linear
model per action.  Sufficient statistics are accumulated incrementally and
the posterior parameters are derived on demand, so per-step updates stay
O(f^2).
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

JITTER_START = 1e-10
JITTER_MAX_TRIES = 8


class CovarianceError(RuntimeError):
    """Covariance stayed non positive-definite after jitter retries."""


def stable_cholesky(mat: np.ndarray) -> np.ndarray:
    """Cholesky with symmetrization and escalating diagonal jitter."""
    m = 0.5 * (mat + mat.T)
    scale = 1.0 + np.trace(m) / m.shape[0]
    jitter = 0.0
    for attempt in range(JITTER_MAX_TRIES):
        try:
            return np.linalg.cholesky(m + jitter * np.eye(m.shape[0]))
        except np.linalg.LinAlgError:
            jitter = JITTER_START * scale * 10.0**attempt
    raise CovarianceError("matrix not positive definite after maximum jitter")


def sample_inverse_wishart(psi: np.ndarray, nu: float, rng: np.random.Generator) -> np.ndarray:
    """Bartlett-decomposition draw from IW(psi, nu)."""
    d = psi.shape[0]
    # W ~ Wishart(nu, psi^{-1})  =>  W^{-1} ~ IW(psi, nu)
    psi_inv = np.linalg.inv(psi + JITTER_START * np.trace(psi) / d * np.eye(d))
    l_inv = stable_cholesky(psi_inv)
    bart = np.zeros((d, d))
    for i in range(d):
        bart[i, i] = np.sqrt(rng.chisquare(nu - i))
        for j in range(i):
            bart[i, j] = rng.standard_normal()
    w = l_inv @ bart
    w = w @ w.T
    sigma = np.linalg.inv(w + JITTER_START * np.eye(d))
    return 0.5 * (sigma + sigma.T)


@dataclass(frozen=True)
class LinearMdpSample:
    """One continuous MDP draw: per-action dynamics and reward coefficients."""

    transition: np.ndarray  # (A, d, f)
    noise_cov: np.ndarray  # (A, d, d)
    reward_coef: np.ndarray  # (A, f)
    reward_var: np.ndarray  # (A,)
    gamma: float

    def next_state_mean(self, features: np.ndarray, action: int) -> np.ndarray:
        return self.transition[action] @ features

    def reward_mean(self, features: np.ndarray, action: int) -> float:
        return float(self.reward_coef[action] @ features)


class BayesLinRegPosterior:
    """Factored Bayesian multivariate regression belief over continuous MDPs."""

    def __init__(
        self,
        state_dim: int,
        feature_dim: int,
        n_actions: int,
        gamma: float = 0.99,
        coef_precision: float = 0.001,
        psi_scale: float = 0.001,
        reward_shape: float = 0.5,
        reward_rate: float = 0.5,
    ):
        self.state_dim = state_dim
        self.feature_dim = feature_dim
        self.n_actions = n_actions
        self.gamma = gamma
        self.psi0 = psi_scale * np.eye(state_dim)
        self.nu0 = float(state_dim)  # rank of the scale matrix
        self.k0 = coef_precision * np.eye(feature_dim)
        self.reward_shape0 = reward_shape
        self.reward_rate0 = reward_rate
        # transition sufficient statistics, per action
        self.t_xx = np.tile(self.k0, (n_actions, 1, 1))
        self.t_yx = np.zeros((n_actions, state_dim, feature_dim))
        self.t_yy = np.zeros((n_actions, state_dim, state_dim))
        self.t_n = np.zeros(n_actions)
        # reward sufficient statistics, per action
        self.r_xx = np.tile(coef_precision * np.eye(feature_dim), (n_actions, 1, 1))
        self.r_xr = np.zeros((n_actions, feature_dim))
        self.r_rr = np.zeros(n_actions)
        self.r_n = np.zeros(n_actions)

    def update(self, features, action: int, reward: float, next_state=None):
        """Fold in one observation; transition update is skipped when
        next_state is None (e.g. on episode resets)."""
        x = np.asarray(features, dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite feature vector")
        if not 0 <= action < self.n_actions:
            raise IndexError(f"action {action} out of range")
        self.r_xx[action] += np.outer(x, x)
        self.r_xr[action] += x * reward
        self.r_rr[action] += reward * reward
        self.r_n[action] += 1.0
        if next_state is not None:
            y = np.asarray(next_state, dtype=float)
            self.t_xx[action] += np.outer(x, x)
            self.t_yx[action] += np.outer(y, x)
            self.t_yy[action] += np.outer(y, y)
            self.t_n[action] += 1.0
        return self

    # -- derived posterior parameters ------------------------------------

    def transition_params(self, action: int):
        """(M, K, psi, nu) of the matrix-Normal--inverse-Wishart posterior."""
        k = self.t_xx[action]
        m = np.linalg.solve(k, self.t_yx[action].T).T
        psi = self.psi0 + self.t_yy[action] - m @ k @ m.T
        psi = 0.5 * (psi + psi.T)
        nu = self.nu0 + self.t_n[action]
        return m, k, psi, nu

    def reward_params(self, action: int):
        """(mean, precision, shape, rate) of the Normal--inverse-Gamma posterior."""
        prec = self.r_xx[action]
        mean = np.linalg.solve(prec, self.r_xr[action])
        shape = self.reward_shape0 + 0.5 * self.r_n[action]
        rate = self.reward_rate0 + 0.5 * (self.r_rr[action] - mean @ prec @ mean)
        return mean, prec, shape, max(rate, 1e-12)

    # -- sampling ---------------------------------------------------------

    def sample_mdp(self, rng: np.random.Generator) -> LinearMdpSample:
        a_mats = np.empty((self.n_actions, self.state_dim, self.feature_dim))
        sigmas = np.empty((self.n_actions, self.state_dim, self.state_dim))
        r_coefs = np.empty((self.n_actions, self.feature_dim))
        r_vars = np.empty(self.n_actions)
        for a in range(self.n_actions):
            m, k, psi, nu = self.transition_params(a)
            sigma = sample_inverse_wishart(psi, nu, rng)
            l_row = stable_cholesky(sigma)
            l_col = stable_cholesky(np.linalg.inv(k))
            z = rng.standard_normal((self.state_dim, self.feature_dim))
            a_mats[a] = m + l_row @ z @ l_col.T
            sigmas[a] = sigma
            mean, prec, shape, rate = self.reward_params(a)
            var = rate / rng.standard_gamma(shape)
            cov_chol = stable_cholesky(np.linalg.inv(prec))
            r_coefs[a] = mean + np.sqrt(var) * (cov_chol @ rng.standard_normal(self.feature_dim))
            r_vars[a] = var
        return LinearMdpSample(a_mats, sigmas, r_coefs, r_vars, self.gamma)

    def mean_sample(self) -> LinearMdpSample:
        """Posterior-mean dynamics and rewards (no sampling)."""
        a_mats = np.empty((self.n_actions, self.state_dim, self.feature_dim))
        sigmas = np.empty((self.n_actions, self.state_dim, self.state_dim))
        r_coefs = np.empty((self.n_actions, self.feature_dim))
        r_vars = np.empty(self.n_actions)
        for a in range(self.n_actions):
            m, _, psi, nu = self.transition_params(a)
            a_mats[a] = m
            denom = max(nu - self.state_dim - 1.0, 1.0)
            sigmas[a] = psi / denom
            mean, _, shape, rate = self.reward_params(a)
            r_coefs[a] = mean
            r_vars[a] = rate / max(shape - 1.0, 0.5)
        return LinearMdpSample(a_mats, sigmas, r_coefs, r_vars, self.gamma)

    def to_json(self) -> str:
        return json.dumps(
            {
                "state_dim": self.state_dim,
                "feature_dim": self.feature_dim,
                "n_actions": self.n_actions,
                "gamma": self.gamma,
                "t_xx": self.t_xx.tolist(),
                "t_yx": self.t_yx.tolist(),
                "t_yy": self.t_yy.tolist(),
                "t_n": self.t_n.tolist(),
                "r_xx": self.r_xx.tolist(),
                "r_xr": self.r_xr.tolist(),
                "r_rr": self.r_rr.tolist(),
                "r_n": self.r_n.tolist(),
            }
        )

    @staticmethod
    def from_json(text: str) -> "BayesLinRegPosterior":
        doc = json.loads(text)
        out = BayesLinRegPosterior(
            doc["state_dim"], doc["feature_dim"], doc["n_actions"], gamma=doc["gamma"]
        )
        for key in ("t_xx", "t_yx", "t_yy", "t_n", "r_xx", "r_xr", "r_rr", "r_n"):
            setattr(out, key, np.array(doc[key]))
        return out
