"""Monte-Carlo value-posterior inference: weights, belief fitting, evaluation."""
import numpy as np
import pytest

from bbrl.inference import (
    LikelihoodScale,
    MdpEnsemble,
    ValueBeliefGaussian,
    WeightedValueEnsemble,
    compute_weights,
    fit_gaussian_belief,
    mean_field_evaluation,
    policy_evaluation_method1,
    propagate_values,
    sample_belief,
)
from bbrl.mdp import DiscreteMdp, StationaryPolicy, bellman_backup, ValueVector


class FixedMdpPosterior:
    """Point-mass posterior used to duck-type the inference entry points."""

    def __init__(self, mdp):
        self.mdp = mdp
        self.gamma = mdp.discount

    def sample_mdp(self, rng):
        return self.mdp


def small_mdp(gamma=0.9, seed=0):
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(3), size=(3, 2))
    reward = rng.uniform(0.0, 1.0, size=(3, 2))
    return DiscreteMdp(transition, reward, gamma)


def test_scale_from_reward_bounds():
    scale = LikelihoodScale.from_reward_bounds(0.0, 10.0, 0.99)
    assert np.isclose(scale.v_span, 1000.0)
    assert np.isclose(scale.sigma_sq, 1000.0**2 * 1e-4)
    with pytest.raises(ValueError):
        LikelihoodScale(0.0)


def test_weights_single_mdp_are_one():
    values = np.array([[0.3, -1.2], [0.7, 0.1]])  # (N_V=2, S=2)
    utilities = np.array([[0.0, 0.0]])  # (N_M=1, S=2)
    w, underflowed = compute_weights(values, np.arange(2), utilities, 1.0)
    assert not underflowed
    assert np.allclose(w, 1.0)


def test_weights_identical_utilities_split_evenly():
    values = np.random.default_rng(0).normal(size=(4, 3))
    utilities = np.tile(np.array([[0.1, -0.2, 0.4]]), (2, 1))
    w, _ = compute_weights(values, np.arange(3), utilities, 0.5)
    assert np.allclose(w, 0.5)


def test_weights_two_mdp_closed_form():
    # one value sample, one probe: exponents 0 and -1, so w_1 = 1/(1 + e^-1)
    values = np.array([[0.0]])
    utilities = np.array([[0.0], [1.0]])
    w, _ = compute_weights(values, np.arange(1), utilities, 0.5)
    expected = 1.0 / (1.0 + np.exp(-1.0))
    assert np.allclose(w[:, 0], [expected, 1.0 - expected])


def test_weights_shift_equivariance():
    rng = np.random.default_rng(1)
    values = rng.normal(size=(5, 4))
    utilities = rng.normal(size=(3, 4))
    w0, _ = compute_weights(values, np.arange(4), utilities, 2.0)
    c = 17.3
    w1, _ = compute_weights(values + c, np.arange(4), utilities + c, 2.0)
    assert np.allclose(w0, w1, atol=1e-12)


def test_weights_flat_likelihood_is_uniform():
    rng = np.random.default_rng(2)
    values = rng.normal(size=(6, 5))
    utilities = rng.normal(size=(4, 5))
    v_span = 10.0
    w, _ = compute_weights(values, np.arange(5), utilities, 1e6 * v_span**2)
    assert np.max(np.abs(w - 0.25)) <= 1e-6


def test_weights_normalize_and_validate():
    rng = np.random.default_rng(3)
    values = rng.normal(size=(7, 3)) * 5
    utilities = rng.normal(size=(4, 3)) * 5
    w, _ = compute_weights(values, np.arange(3), utilities, 0.1)
    assert np.allclose(w.sum(axis=0), 1.0, atol=1e-12)
    assert np.all(w >= 0)
    with pytest.raises(ValueError):
        compute_weights(values * np.nan, np.arange(3), utilities, 0.1)


def test_fit_gaussian_belief_two_points():
    # equally weighted samples at 0 and 2: mean 1, variance 1
    samples = np.array([[[0.0]], [[2.0]]])  # (N_M=2, N_V=1, S=1)
    weights = np.array([[0.5], [0.5]])
    belief = fit_gaussian_belief(WeightedValueEnsemble(samples, weights))
    assert np.isclose(belief.mean[0], 1.0)
    assert np.isclose(belief.cov[0, 0], 1.0)


def test_weighted_ensemble_validation():
    samples = np.zeros((2, 3, 1))
    with pytest.raises(ValueError):
        WeightedValueEnsemble(samples, np.full((2, 3), 0.4))  # columns sum to 0.8
    with pytest.raises(ValueError):
        WeightedValueEnsemble(samples, np.array([[1.5, 1.0, 1.0], [-0.5, 0.0, 0.0]]))


def test_sample_belief_point_mass_and_moments():
    rng = np.random.default_rng(4)
    point = ValueBeliefGaussian.point_mass([1.0, -2.0])
    draws = sample_belief(point, 16, rng)
    assert np.allclose(draws, [1.0, -2.0], atol=1e-4)
    belief = ValueBeliefGaussian(np.array([0.0, 1.0]), np.array([[2.0, 0.5], [0.5, 1.0]]))
    draws = sample_belief(belief, 200_000, rng)
    assert np.allclose(draws.mean(axis=0), belief.mean, atol=0.02)
    assert np.allclose(np.cov(draws.T), belief.cov, atol=0.03)


def test_propagate_values_matches_bellman_backup():
    mdp = small_mdp()
    mdps = MdpEnsemble.from_mdps([mdp, small_mdp(seed=5)])
    policy = StationaryPolicy.uniform(3, 2)
    rng = np.random.default_rng(6)
    values = rng.normal(size=(4, 3))
    out = propagate_values(mdps, policy, values)
    for j, m in enumerate([mdp, small_mdp(seed=5)]):
        for k in range(4):
            manual = bellman_backup(m, policy, ValueVector(values[k])).values
            assert np.allclose(out[j, k], manual)


def test_point_posterior_evaluation_recovers_finite_horizon_value():
    mdp = small_mdp(gamma=0.9)
    posterior = FixedMdpPosterior(mdp)
    policy = StationaryPolicy.uniform(3, 2)
    lookahead = 40
    rng = np.random.default_rng(7)
    scale = LikelihoodScale.from_reward_bounds(0.0, 1.0, 0.9)
    beliefs = policy_evaluation_method1(posterior, policy, lookahead, 8, 50, scale, rng)
    # truth: lookahead - 1 backups of the zero vector under the policy
    v = ValueVector(np.zeros(3))
    for _ in range(lookahead - 1):
        v = bellman_backup(mdp, policy, v)
    tol = 1e-2 * scale.v_span
    assert np.max(np.abs(beliefs[0].mean - v.values)) <= tol
    # the belief about a known MDP should be close to deterministic
    assert np.all(np.diag(beliefs[0].cov) <= tol**2)


def test_mean_field_matches_weighted_at_flat_scale():
    rng_data = np.random.default_rng(8)
    from bbrl.posterior import DirichletNormalGammaPosterior, Observation

    posterior = DirichletNormalGammaPosterior(3, 2, gamma=0.9)
    for _ in range(30):
        posterior.update(
            Observation(
                int(rng_data.integers(3)),
                int(rng_data.integers(2)),
                float(rng_data.normal()),
                int(rng_data.integers(3)),
            )
        )
    policy = StationaryPolicy.uniform(3, 2)
    flat = LikelihoodScale(1e12)
    a = policy_evaluation_method1(
        posterior, policy, 10, 5, 20, flat, np.random.default_rng(42)
    )
    b = mean_field_evaluation(
        posterior, policy, 10, 5, 20, flat, np.random.default_rng(42)
    )
    for ba, bb in zip(a, b):
        assert np.allclose(ba.mean, bb.mean, atol=1e-5)
        assert np.allclose(ba.cov, bb.cov, atol=1e-5)


def test_belief_json_round_trip():
    belief = ValueBeliefGaussian(np.array([1.0, 2.0]), np.array([[1.0, 0.2], [0.2, 2.0]]))
    back = ValueBeliefGaussian.from_json(belief.to_json())
    assert np.array_equal(back.mean, belief.mean)
    assert np.array_equal(back.cov, belief.cov)


def test_belief_validation():
    with pytest.raises(ValueError):
        ValueBeliefGaussian(np.zeros(2), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        ValueBeliefGaussian(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))
