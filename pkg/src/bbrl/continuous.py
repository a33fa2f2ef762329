"""Backwards-induction planning for continuous states via weighted fitted Q."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fitted_q import DEFAULT_RIDGE_LAMBDA, ValueBeliefFittedQ
from .inference import LikelihoodScale, MAX_SIGMA_DOUBLINGS, compute_weights
from .regression import BayesLinRegPosterior, stable_cholesky


@dataclass
class ContinuousPlannerConfig:
    lookahead: int = 20
    n_mdp_samples: int = 10
    n_value_samples: int = 50
    n_next_draws: int = 10
    n_probe_states: int = 32
    n_regression_states: int = 64
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA
    scale: LikelihoodScale = field(default_factory=lambda: LikelihoodScale(1.0))

    def __post_init__(self):
        if self.lookahead < 1 or self.n_mdp_samples < 1 or self.n_value_samples < 1:
            raise ValueError("lookahead and sample counts must be >= 1")


@dataclass(frozen=True)
class GreedyFeaturePolicy:
    """Deterministic policy: argmax over actions of phi(s)^T omega_a."""

    omega: np.ndarray  # (A, f)
    feature_fn: object  # batch feature map: (n, d) -> (n, f)

    def act(self, state) -> int:
        phi = self.feature_fn(np.asarray(state, dtype=float)[None, :])[0]
        return int(np.argmax(self.omega @ phi))

    def actions(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(features @ self.omega.T, axis=1)


@dataclass(frozen=True)
class ContinuousPlanOutput:
    policy: GreedyFeaturePolicy  # first-step greedy policy
    q_weights: list  # per-step fitted Q weight tables, [omega_1, ..., omega_T]
    beliefs: list  # per-step ValueBeliefFittedQ, [psi_1, ..., psi_T]


def fit_q_ensemble(phi_r, q_samples, weights, ridge_lambda, gram_inv=None):
    """Exact weighted ridge over the full (value sample, MDP, state) ensemble.

    ``q_samples`` is (N_V, N_M, A, R) and every (j, k) pair contributes each
    regression state with weight w_jk, so the normal equations collapse to
    reductions over the per-pair weight mass; the result equals fitting the
    fully tiled system row by row.
    """
    phi = np.asarray(phi_r, dtype=float)
    w = np.asarray(weights, dtype=float)  # (N_M, N_V)
    n_r, n_f = phi.shape
    n_actions = q_samples.shape[2]
    w_total = w.sum()
    gram = w_total * (phi.T @ phi) + ridge_lambda * np.eye(n_f)
    if gram_inv is None:
        gram_inv = np.linalg.inv(gram)
    s1 = np.einsum("jk,kjar->ar", w, q_samples, optimize=True)
    s2 = np.einsum("jk,kjar->ar", w, q_samples**2, optimize=True)
    rhs = s1 @ phi  # (A, f)
    omega = rhs @ gram_inv.T
    fitted = phi @ omega.T  # (R, A)
    sse = (s2 - 2.0 * fitted.T * s1 + w_total * fitted.T**2).sum(axis=1)
    sigma_sq = np.maximum(sse / (w_total * n_r), 0.0)
    q_mean = fitted.mean(axis=0)
    spread = (
        s2 - 2.0 * q_mean[:, None] * s1 + w_total * q_mean[:, None] ** 2
    ).sum(axis=1) / (w_total * n_r)
    q_var = sigma_sq * np.maximum(spread, 0.0)
    omega_cov = sigma_sq[:, None, None] * gram_inv[None, :, :]
    return ValueBeliefFittedQ(omega, omega_cov, np.sqrt(sigma_sq), q_mean, q_var)


class _ContinuousEngine:
    """Per-plan state: sampled linear MDPs, fixed state sets, kernel scale.

    The value function lives in the ``feature_fn`` basis while the sampled
    dynamics and reward models act on ``dyn_feature_fn`` features; the two
    maps coincide by default.
    """

    def __init__(
        self, posterior, feature_fn, states_probe, states_reg, config, rng,
        uniform_weights=False, dyn_feature_fn=None,
    ):
        self.rng = rng
        self.config = config
        self.uniform_weights = uniform_weights
        self.feature_fn = feature_fn
        dyn_feature_fn = dyn_feature_fn or feature_fn
        self.gamma = posterior.gamma
        self.sigma_sq = config.scale.sigma_sq
        samples = [posterior.sample_mdp(rng) for _ in range(config.n_mdp_samples)]
        self.trans = np.stack([s.transition for s in samples])  # (J, A, d, f_dyn)
        self.rcoef = np.stack([s.reward_coef for s in samples])  # (J, A, f_dyn)
        self.phi_p = feature_fn(states_probe)  # (Mp, f)
        self.phi_r = feature_fn(states_reg)  # (R, f)
        dphi_p = dyn_feature_fn(states_probe)
        dphi_r = dyn_feature_fn(states_reg)
        n_f = self.phi_r.shape[1]
        gram = config.n_value_samples * (self.phi_r.T @ self.phi_r)
        gram += config.ridge_lambda * np.eye(n_f)
        self.gram_inv = np.linalg.inv(gram)
        gram0 = self.phi_r.T @ self.phi_r + config.ridge_lambda * np.eye(n_f)
        self._gram0_inv = np.linalg.inv(gram0)
        # next states and rewards for every (MDP, action, regression state)
        s2 = np.einsum("jadf,rf->jard", self.trans, dphi_r, optimize=True)
        d = s2.shape[-1]
        self.phi_next_reg = feature_fn(s2.reshape(-1, d)).reshape(s2.shape[:3] + (-1,))
        self.r_reg = np.einsum("jaf,rf->jar", self.rcoef, dphi_r, optimize=True)
        # per-probe next states are policy dependent; cache all actions too
        s2p = np.einsum("jadf,mf->jamd", self.trans, dphi_p, optimize=True)
        self.phi_next_probe = feature_fn(s2p.reshape(-1, d)).reshape(s2p.shape[:3] + (-1,))
        self.r_probe = np.einsum("jaf,mf->jam", self.rcoef, dphi_p, optimize=True)

    @property
    def n_actions(self) -> int:
        return self.trans.shape[1]

    def myopic_policy_weights(self) -> np.ndarray:
        """Mean one-step reward projected onto the value basis: (A, f)."""
        r_mean = self.r_reg.mean(axis=0)  # (A, R)
        return (self._gram0_inv @ (self.phi_r.T @ r_mean.T)).T

    def sample_draws(self, belief: ValueBeliefFittedQ) -> np.ndarray:
        return belief.sample_weight_vectors(self.config.n_value_samples, self.rng)

    def value_at_probes(self, w_draws: np.ndarray, policy_omega: np.ndarray) -> np.ndarray:
        """V^(k)(s_m) = phi(s_m)^T w_k at the policy's greedy action: (K, Mp)."""
        a_star = np.argmax(self.phi_p @ policy_omega.T, axis=1)  # (Mp,)
        q = np.einsum("mf,kaf->kma", self.phi_p, w_draws, optimize=True)
        return np.take_along_axis(q, a_star[None, :, None], axis=2)[:, :, 0]

    def utilities(self, belief, policy_omega: np.ndarray) -> np.ndarray:
        """Bootstrap utilities u^j_m under the greedy policy: (J, Mp)."""
        a_star = np.argmax(self.phi_p @ policy_omega.T, axis=1)
        gamma = self.gamma
        j_idx = np.arange(self.trans.shape[0])[:, None]
        m_idx = np.arange(a_star.shape[0])[None, :]
        phi2 = self.phi_next_probe[j_idx, a_star[None, :], m_idx]  # (J, Mp, f)
        w_mean = belief.sample_weight_vectors(self.config.n_next_draws, self.rng).mean(0)
        a2 = np.argmax(phi2 @ policy_omega.T, axis=2)  # (J, Mp)
        v_next = np.einsum("jmf,jmf->jm", phi2, w_mean[a2], optimize=True)
        rewards = self.r_probe[j_idx, a_star[None, :], m_idx]
        return rewards + gamma * v_next

    def q_sample_ensemble(self, w_draws: np.ndarray, policy_omega: np.ndarray) -> np.ndarray:
        """Q^(j,k)(x, a) over the regression states: (K, J, A, R)."""
        a2 = np.argmax(self.phi_next_reg @ policy_omega.T, axis=3)  # (J, A, R)
        w_sel = w_draws[:, a2, :]  # (K, J, A, R, f)
        v_next = np.einsum("kjarf,jarf->kjar", w_sel, self.phi_next_reg, optimize=True)
        return self.r_reg[None, :, :, :] + self.gamma * v_next

    def weights_for(self, values, utilities) -> np.ndarray:
        if self.uniform_weights:
            n_m = self.trans.shape[0]
            return np.full((n_m, values.shape[0]), 1.0 / n_m)
        probe_all = np.arange(values.shape[1])
        w, underflowed = compute_weights(values, probe_all, utilities, self.sigma_sq)
        doublings = 0
        while underflowed:
            if doublings >= MAX_SIGMA_DOUBLINGS:
                raise RuntimeError("likelihood scale doubling did not stabilize weights")
            self.sigma_sq *= 4.0
            doublings += 1
            w, underflowed = compute_weights(values, probe_all, utilities, self.sigma_sq)
        return w


def continuous_bbi_plan(
    posterior: BayesLinRegPosterior,
    feature_fn,
    state_sampler,
    config: ContinuousPlannerConfig,
    rng: np.random.Generator,
    uniform_weights: bool = False,
    dyn_feature_fn=None,
) -> ContinuousPlanOutput:
    """Fitted-Q backwards induction against the linear-regression MDP posterior.

    ``state_sampler(n, rng)`` supplies the probe and regression state sets;
    ``feature_fn`` maps an (n, d) batch of states to (n, f) features for the
    value function, and ``dyn_feature_fn`` (same map when omitted) feeds the
    dynamics and reward regressors.  With ``uniform_weights`` the importance
    weighting is disabled (the mean-field ablation).
    """
    states_probe = state_sampler(config.n_probe_states, rng)
    states_reg = state_sampler(config.n_regression_states, rng)
    engine = _ContinuousEngine(
        posterior, feature_fn, states_probe, states_reg, config, rng,
        uniform_weights, dyn_feature_fn,
    )
    n_actions, n_features = engine.rcoef.shape[1], engine.phi_r.shape[1]

    lookahead = config.lookahead
    beliefs = [None] * (lookahead + 1)
    q_weights = [None] * (lookahead + 1)
    beliefs[lookahead] = ValueBeliefFittedQ.point_mass(n_actions, n_features)
    q_weights[lookahead] = engine.myopic_policy_weights()
    for i in range(lookahead - 1, 0, -1):
        next_belief = beliefs[i + 1]
        pol_in = q_weights[i + 1]
        w_draws = engine.sample_draws(next_belief)
        values = engine.value_at_probes(w_draws, pol_in)
        u_in = engine.utilities(next_belief, pol_in)
        w_in = engine.weights_for(values, u_in)
        q_samples = engine.q_sample_ensemble(w_draws, pol_in)
        stage1 = fit_q_ensemble(
            engine.phi_r, q_samples, w_in, config.ridge_lambda, engine.gram_inv
        )
        pol_out = stage1.omega
        u_out = engine.utilities(next_belief, pol_out)
        values_out = engine.value_at_probes(w_draws, pol_out)
        w_out = engine.weights_for(values_out, u_out)
        beliefs[i] = fit_q_ensemble(
            engine.phi_r, q_samples, w_out, config.ridge_lambda, engine.gram_inv
        )
        q_weights[i] = pol_out
    policy = GreedyFeaturePolicy(q_weights[1], feature_fn)
    return ContinuousPlanOutput(policy, q_weights[1:], beliefs[1:])
