"""Weighted ridge fitted-Q machinery for continuous-state planning."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regression import stable_cholesky

DEFAULT_RIDGE_LAMBDA = 0.01


def fitted_q_belief(features, q_values, weights, ridge_lambda=DEFAULT_RIDGE_LAMBDA):
    """Weighted ridge fit of a linear Q model for one action.

    Solves (Phi^T W Phi + lambda I) omega = Phi^T W Q and summarizes the fit
    as a Gaussian over Q values: mean of the fitted values, weighted spread
    of the samples about it scaled by the residual variance.  Returns
    (omega, omega_cov, sigma, q_mean, q_var).
    """
    phi = np.asarray(features, dtype=float)
    q = np.asarray(q_values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if phi.ndim != 2 or q.shape[0] != phi.shape[0] or w.shape != q.shape:
        raise ValueError("features, q_values and weights must agree in sample count")
    gram = phi.T @ (w[:, None] * phi) + ridge_lambda * np.eye(phi.shape[1])
    rhs = phi.T @ (w * q)
    omega = np.linalg.solve(gram, rhs)
    if not np.all(np.isfinite(omega)):
        raise ValueError("non-finite ridge solution")
    fitted = phi @ omega
    w_total = w.sum()
    w_norm = w / w_total if w_total > 0 else np.full_like(w, 1.0 / w.shape[0])
    sigma_sq = float(w_norm @ (q - fitted) ** 2)
    q_mean = float(fitted.mean())
    q_var = sigma_sq * float(w_norm @ (q - q_mean) ** 2)
    omega_cov = sigma_sq * np.linalg.inv(gram)
    return omega, omega_cov, np.sqrt(sigma_sq), q_mean, q_var


@dataclass(frozen=True)
class ValueBeliefFittedQ:
    """Per-action linear-Gaussian belief over Q values in feature space."""

    omega: np.ndarray  # (A, f) ridge means
    omega_cov: np.ndarray  # (A, f, f)
    sigma: np.ndarray  # (A,) residual scales
    q_mean: np.ndarray  # (A,) Gaussian summary means
    q_var: np.ndarray  # (A,) Gaussian summary variances

    @property
    def n_actions(self) -> int:
        return self.omega.shape[0]

    @staticmethod
    def point_mass(n_actions: int, n_features: int) -> "ValueBeliefFittedQ":
        return ValueBeliefFittedQ(
            np.zeros((n_actions, n_features)),
            np.zeros((n_actions, n_features, n_features)),
            np.zeros(n_actions),
            np.zeros(n_actions),
            np.zeros(n_actions),
        )

    @staticmethod
    def fit(features, q_table, weights, ridge_lambda=DEFAULT_RIDGE_LAMBDA):
        """Fit all actions; q_table is (n_samples, A), weights (n_samples,)."""
        q_table = np.asarray(q_table, dtype=float)
        n_actions = q_table.shape[1]
        parts = [
            fitted_q_belief(features, q_table[:, a], weights, ridge_lambda)
            for a in range(n_actions)
        ]
        return ValueBeliefFittedQ(
            np.stack([p[0] for p in parts]),
            np.stack([p[1] for p in parts]),
            np.array([p[2] for p in parts]),
            np.array([p[3] for p in parts]),
            np.array([p[4] for p in parts]),
        )

    def sample_weight_vectors(self, n_samples: int, rng) -> np.ndarray:
        """(n_samples, A, f) draws of the per-action weight vectors."""
        a, f = self.omega.shape
        out = np.empty((n_samples, a, f))
        for i in range(a):
            cov = self.omega_cov[i]
            eps = 1e-12 * (1.0 + np.trace(cov) / f)
            chol = stable_cholesky(cov + eps * np.eye(f))
            z = rng.standard_normal((n_samples, f))
            out[:, i, :] = self.omega[i] + z @ chol.T
        return out

    def q_values(self, features: np.ndarray) -> np.ndarray:
        """Mean Q table at the given feature matrix: (n_states, A)."""
        return np.asarray(features) @ self.omega.T

    def greedy_actions(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(self.q_values(features), axis=1)
