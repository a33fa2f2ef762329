"""Monte-Carlo inference of value-function posteriors from an MDP posterior.

The induction runs backwards from a terminal belief: sample value functions
from the step-(i+1) belief, score each posterior MDP sample against
bootstrap utility estimates with a Gaussian kernel, push the value samples
through each MDP's Bellman operator, and refit a Gaussian belief from the
weighted ensemble.  Forcing the weights to be uniform turns the same
pipeline into the mean-field ablation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .mdp import DiscreteMdp, NonstationaryPolicy, StationaryPolicy, exact_policy_value
from .posterior import DirichletNormalGammaPosterior

SIGMA_SQ_FACTOR = 1e-4
DEFAULT_N_MDP_SAMPLES = 10
DEFAULT_N_VALUE_SAMPLES = 50
DEFAULT_N_NEXT_DRAWS = 10
LOG_UNDERFLOW = -745.0  # below this exp() is exactly zero in float64
MAX_SIGMA_DOUBLINGS = 64


@dataclass
class LikelihoodScale:
    """Gaussian kernel variance for utility matching, derived from the value span."""

    sigma_sq: float
    v_span: float = 0.0

    def __post_init__(self):
        if self.sigma_sq <= 0:
            raise ValueError("sigma_sq must be positive")

    @staticmethod
    def from_reward_bounds(r_min: float, r_max: float, gamma: float) -> "LikelihoodScale":
        span = (r_max - r_min) / (1.0 - gamma)
        return LikelihoodScale(sigma_sq=span * span * SIGMA_SQ_FACTOR, v_span=span)


@dataclass(frozen=True)
class ValueBeliefGaussian:
    """Multivariate normal belief over state-value vectors."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mean, dtype=float)
        c = np.asarray(self.cov, dtype=float)
        if c.shape != (m.shape[0], m.shape[0]):
            raise ValueError(f"covariance shape {c.shape} does not match mean {m.shape}")
        if np.max(np.abs(c - c.T)) > 1e-9 * (1.0 + np.max(np.abs(c))):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", 0.5 * (c + c.T))

    @staticmethod
    def point_mass(values) -> "ValueBeliefGaussian":
        v = np.asarray(values, dtype=float)
        return ValueBeliefGaussian(v, np.zeros((v.shape[0], v.shape[0])))

    def to_json(self) -> str:
        return json.dumps({"mean": self.mean.tolist(), "cov": self.cov.tolist()})

    @staticmethod
    def from_json(text: str) -> "ValueBeliefGaussian":
        doc = json.loads(text)
        return ValueBeliefGaussian(np.array(doc["mean"]), np.array(doc["cov"]))


@dataclass(frozen=True)
class WeightedValueEnsemble:
    """Propagated value samples V^(j,k) with weights normalized over j per k."""

    value_samples: np.ndarray  # (N_M, N_V, S)
    weights: np.ndarray  # (N_M, N_V)

    def __post_init__(self):
        v = np.asarray(self.value_samples, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != v.shape[:2]:
            raise ValueError("weights must be indexed (mdp, value sample)")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        col = w.sum(axis=0)
        if np.max(np.abs(col - 1.0)) > 1e-9:
            raise ValueError("weights must sum to 1 over MDPs for every value sample")
        object.__setattr__(self, "value_samples", v)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class MdpEnsemble:
    """Stacked posterior MDP samples for vectorized Bellman arithmetic."""

    transition: np.ndarray  # (N_M, S, A, S)
    reward: np.ndarray  # (N_M, S, A)
    gamma: float

    @staticmethod
    def from_mdps(mdps) -> "MdpEnsemble":
        return MdpEnsemble(
            np.stack([m.transition for m in mdps]),
            np.stack([m.reward_mean for m in mdps]),
            mdps[0].discount,
        )

    @staticmethod
    def sample(posterior, n_mdps: int, rng: np.random.Generator) -> "MdpEnsemble":
        return MdpEnsemble.from_mdps([posterior.sample_mdp(rng) for _ in range(n_mdps)])

    @property
    def n_mdps(self) -> int:
        return self.transition.shape[0]

    @property
    def n_states(self) -> int:
        return self.transition.shape[1]

    def mdp(self, j: int) -> DiscreteMdp:
        return DiscreteMdp(self.transition[j], self.reward[j], self.gamma)

    def policy_marginals(self, policy: StationaryPolicy):
        """(P^pi, r^pi) per sampled MDP: (N_M, S, S) and (N_M, S)."""
        pi = policy.action_prob
        p_pi = np.einsum("jsat,sa->jst", self.transition, pi, optimize=True)
        r_pi = np.einsum("jsa,sa->js", self.reward, pi, optimize=True)
        return p_pi, r_pi


def mc_value_distribution(posterior, policy: StationaryPolicy, n_mdps: int, rng) -> np.ndarray:
    """Empirical value-function distribution: exact values of sampled MDPs.

    Returns an (n_mdps, n_states) array; each row is the exact fixed-point
    value of the policy in one posterior draw.
    """
    if posterior.gamma >= 1.0:
        raise ValueError("requires a discounted posterior")
    rows = [
        exact_policy_value(posterior.sample_mdp(rng), policy).values for _ in range(n_mdps)
    ]
    return np.stack(rows)


def sample_belief(belief: ValueBeliefGaussian, n_samples: int, rng) -> np.ndarray:
    """Draw value vectors from the Gaussian belief via a jittered Cholesky."""
    n = belief.mean.shape[0]
    eps = 1e-10 * (1.0 + np.trace(belief.cov) / n)
    cov = belief.cov + eps * np.eye(n)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # escalate: eigenvalue floor, then retry once
        vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
        cov = (vecs * np.maximum(vals, eps)) @ vecs.T + eps * np.eye(n)
        chol = np.linalg.cholesky(cov)
    z = rng.standard_normal((n_samples, n))
    return belief.mean + z @ chol.T


def generate_utility_samples(
    mdps: MdpEnsemble,
    policy: StationaryPolicy,
    next_belief: ValueBeliefGaussian,
    probe_states: np.ndarray,
    rng,
    n_next_draws: int = DEFAULT_N_NEXT_DRAWS,
) -> np.ndarray:
    """Expected one-step bootstrap utilities u^j_m at the probe states.

    For each sampled MDP: r^pi(s_m) + gamma * (P^pi V)(s_m), averaging over
    ``n_next_draws`` value draws from the next-step belief.  Returns an
    (N_M, n_probe) array.
    """
    v_draws = sample_belief(next_belief, n_next_draws, rng)
    v_bar = v_draws.mean(axis=0)
    p_pi, r_pi = mdps.policy_marginals(policy)
    u = r_pi + mdps.gamma * (p_pi @ v_bar)
    return u[:, probe_states]


def compute_weights(
    value_samples: np.ndarray,
    probe_states: np.ndarray,
    utilities: np.ndarray,
    scale_sigma_sq: float,
):
    """Importance weights w_jk over MDPs for each value sample.

    w_jk is proportional to the summed Gaussian kernel between the sample's
    probe-state values and MDP j's utilities, normalized over j for each k.
    Stabilized by per-k max-exponent subtraction.  Returns (weights,
    underflowed) where ``underflowed`` reports whether every unshifted
    exponent for some k would have vanished in float64.
    """
    v = np.asarray(value_samples, dtype=float)[:, probe_states]  # (N_V, n)
    u = np.asarray(utilities, dtype=float)  # (N_M, n)
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(u))):
        raise ValueError("non-finite inputs to weight computation")
    # exponents indexed (j, k, m)
    expo = -((v[None, :, :] - u[:, None, :]) ** 2) / (2.0 * scale_sigma_sq)
    peak = expo.max(axis=(0, 2))  # (N_V,)
    underflowed = bool(np.any(peak < LOG_UNDERFLOW))
    kernel = np.exp(expo - peak[None, :, None]).sum(axis=2)  # (N_M, N_V)
    weights = kernel / kernel.sum(axis=0, keepdims=True)
    return weights, underflowed


def propagate_values(
    mdps: MdpEnsemble, policy: StationaryPolicy, value_samples: np.ndarray
) -> np.ndarray:
    """One Bellman backup per (MDP sample, value sample): (N_M, N_V, S)."""
    p_pi, r_pi = mdps.policy_marginals(policy)
    v = np.asarray(value_samples, dtype=float)  # (N_V, S)
    return r_pi[:, None, :] + mdps.gamma * np.einsum("jst,kt->jks", p_pi, v, optimize=True)


def fit_gaussian_belief(ensemble: WeightedValueEnsemble) -> ValueBeliefGaussian:
    """Weighted mean and covariance of the propagated samples.

    The per-k-normalized weights are rescaled by 1/N_V so the fitted belief
    carries unit mass.
    """
    v = ensemble.value_samples
    n_v = v.shape[1]
    w_hat = (ensemble.weights / n_v).reshape(-1)
    total = w_hat.sum()
    if total <= 0:
        raise ValueError("zero total weight in value ensemble")
    w_hat = w_hat / total
    flat = v.reshape(-1, v.shape[2])
    mean = w_hat @ flat
    centered = flat - mean
    cov = (centered * w_hat[:, None]).T @ centered
    return ValueBeliefGaussian(mean, 0.5 * (cov + cov.T))


def _policy_at(policy, step_index: int, lookahead: int) -> StationaryPolicy:
    if isinstance(policy, NonstationaryPolicy):
        if len(policy) < lookahead:
            raise ValueError("nonstationary policy shorter than the lookahead")
        return policy.steps[step_index]
    return policy


@dataclass
class Method1Engine:
    """Shared inner loop for policy evaluation and the backwards-induction planner.

    Holds the sampled MDP ensemble and the (possibly widened) kernel scale.
    When the Gaussian kernel underflows for some value sample the engine
    first resamples the value functions, then keeps doubling sigma until the
    weights are computable; the widened scale persists for the remainder of
    the sweep and is naturally reset when a new engine is built on new data.
    """

    mdps: MdpEnsemble
    scale: LikelihoodScale
    rng: np.random.Generator
    n_value_samples: int = DEFAULT_N_VALUE_SAMPLES
    n_next_draws: int = DEFAULT_N_NEXT_DRAWS
    probe_states: np.ndarray | None = None
    uniform_weights: bool = False
    sigma_sq: float = field(init=False)

    def __post_init__(self):
        self.sigma_sq = self.scale.sigma_sq
        if self.probe_states is None:
            # discrete default: uniform probe distribution, summed over all states
            self.probe_states = np.arange(self.mdps.n_states)

    def utilities(self, policy: StationaryPolicy, belief: ValueBeliefGaussian) -> np.ndarray:
        return generate_utility_samples(
            self.mdps, policy, belief, self.probe_states, self.rng, self.n_next_draws
        )

    def weighted_value_samples(self, belief: ValueBeliefGaussian, policy: StationaryPolicy):
        """Sample N_V value functions from the belief and weight the MDP samples.

        Returns (value_samples (N_V, S), weights (N_M, N_V)).
        """
        values = sample_belief(belief, self.n_value_samples, self.rng)
        utilities = self.utilities(policy, belief)  # drawn either way: keeps RNG
        # streams aligned between the weighted pipeline and the mean-field ablation
        if self.uniform_weights:
            n_m = self.mdps.n_mdps
            return values, np.full((n_m, self.n_value_samples), 1.0 / n_m)
        weights, underflowed = compute_weights(
            values, self.probe_states, utilities, self.sigma_sq
        )
        if underflowed:
            values = sample_belief(belief, self.n_value_samples, self.rng)
            weights, underflowed = compute_weights(
                values, self.probe_states, utilities, self.sigma_sq
            )
        doublings = 0
        while underflowed:
            if doublings >= MAX_SIGMA_DOUBLINGS:
                raise RuntimeError("likelihood scale doubling did not stabilize weights")
            self.sigma_sq *= 4.0  # doubling sigma quadruples the variance
            doublings += 1
            weights, underflowed = compute_weights(
                values, self.probe_states, utilities, self.sigma_sq
            )
        return values, weights

    def reweight(self, values: np.ndarray, policy: StationaryPolicy, belief) -> np.ndarray:
        """Recompute weights for existing value samples under a new policy."""
        utilities = self.utilities(policy, belief)
        if self.uniform_weights:
            n_m = self.mdps.n_mdps
            return np.full((n_m, values.shape[0]), 1.0 / n_m)
        weights, underflowed = compute_weights(
            values, self.probe_states, utilities, self.sigma_sq
        )
        while underflowed:
            self.sigma_sq *= 4.0
            weights, underflowed = compute_weights(
                values, self.probe_states, utilities, self.sigma_sq
            )
        return weights

    def induction_step(
        self, belief: ValueBeliefGaussian, policy: StationaryPolicy
    ) -> tuple[ValueBeliefGaussian, WeightedValueEnsemble]:
        values, weights = self.weighted_value_samples(belief, policy)
        propagated = propagate_values(self.mdps, policy, values)
        ensemble = WeightedValueEnsemble(propagated, weights)
        return fit_gaussian_belief(ensemble), ensemble


def _evaluate(
    posterior,
    policy,
    lookahead: int,
    n_mdp_samples: int,
    n_value_samples: int,
    scale: LikelihoodScale,
    rng,
    n_next_draws: int = DEFAULT_N_NEXT_DRAWS,
    uniform_weights: bool = False,
    mdps: MdpEnsemble | None = None,
):
    if lookahead < 1:
        raise ValueError("lookahead must be >= 1")
    if mdps is None:
        mdps = MdpEnsemble.sample(posterior, n_mdp_samples, rng)
    engine = Method1Engine(
        mdps,
        scale,
        rng,
        n_value_samples=n_value_samples,
        n_next_draws=n_next_draws,
        uniform_weights=uniform_weights,
    )
    beliefs = [None] * (lookahead + 1)  # 1-based step index; ψ_T at [lookahead]
    beliefs[lookahead] = ValueBeliefGaussian.point_mass(np.zeros(mdps.n_states))
    for i in range(lookahead - 1, 0, -1):
        step_policy = _policy_at(policy, i - 1, lookahead)
        beliefs[i], _ = engine.induction_step(beliefs[i + 1], step_policy)
    return beliefs[1:]


def policy_evaluation_method1(
    posterior: DirichletNormalGammaPosterior,
    policy,
    lookahead: int,
    n_mdp_samples: int,
    n_value_samples: int,
    scale: LikelihoodScale,
    rng,
    n_next_draws: int = DEFAULT_N_NEXT_DRAWS,
    mdps: MdpEnsemble | None = None,
):
    """Backwards Monte-Carlo policy evaluation; returns [psi_1, ..., psi_T]."""
    return _evaluate(
        posterior,
        policy,
        lookahead,
        n_mdp_samples,
        n_value_samples,
        scale,
        rng,
        n_next_draws=n_next_draws,
        mdps=mdps,
    )


def mean_field_evaluation(
    posterior: DirichletNormalGammaPosterior,
    policy,
    lookahead: int,
    n_mdp_samples: int,
    n_value_samples: int,
    scale: LikelihoodScale,
    rng,
    n_next_draws: int = DEFAULT_N_NEXT_DRAWS,
    mdps: MdpEnsemble | None = None,
):
    """Same pipeline with weights forced to 1/N_M (the mean-field ablation)."""
    return _evaluate(
        posterior,
        policy,
        lookahead,
        n_mdp_samples,
        n_value_samples,
        scale,
        rng,
        n_next_draws=n_next_draws,
        uniform_weights=True,
        mdps=mdps,
    )
