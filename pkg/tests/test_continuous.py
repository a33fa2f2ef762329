"""Continuous-state machinery: ridge fitted Q, ensembles, planning."""
import numpy as np
import pytest

from bbrl.agents import ContinuousAgent, HistoryStateSampler
from bbrl.continuous import (
    ContinuousPlannerConfig,
    continuous_bbi_plan,
    fit_q_ensemble,
)
from bbrl.fitted_q import ValueBeliefFittedQ, fitted_q_belief
from bbrl.inference import LikelihoodScale
from bbrl.regression import BayesLinRegPosterior


def identity_features(states):
    s = np.asarray(states, dtype=float)
    return np.concatenate([s, np.ones((s.shape[0], 1))], axis=1)


def test_fitted_q_normal_equations():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n, f = 40, 5
        phi = rng.normal(size=(n, f))
        q = rng.normal(size=n)
        w = rng.uniform(0.1, 2.0, size=n)
        lam = 0.01
        omega, *_ = fitted_q_belief(phi, q, w, lam)
        residual = (phi.T @ (w[:, None] * phi) + lam * np.eye(f)) @ omega - phi.T @ (w * q)
        assert np.max(np.abs(residual)) <= 1e-8


def test_fit_q_ensemble_equals_tiled_fit():
    """The collapsed ensemble fit must match fitting every row explicitly."""
    rng = np.random.default_rng(1)
    n_v, n_m, n_a, n_r, n_f = 4, 3, 2, 12, 5
    phi = rng.normal(size=(n_r, n_f))
    q_samples = rng.normal(size=(n_v, n_m, n_a, n_r))
    w = rng.uniform(0.1, 1.0, size=(n_m, n_v))
    w /= w.sum(axis=0, keepdims=True)
    lam = 0.01
    belief = fit_q_ensemble(phi, q_samples, w, lam)

    phi_tiled = np.tile(phi, (n_m * n_v, 1))
    w_tiled = np.repeat(w.T.ravel(), n_r)  # (j, k) pair weight per row
    q_tiled = np.empty((n_a, n_m * n_v * n_r))
    for a in range(n_a):
        rows = [q_samples[k, j, a] for k in range(n_v) for j in range(n_m)]
        q_tiled[a] = np.concatenate(rows)
    for a in range(n_a):
        omega, _, sigma, q_mean, q_var = fitted_q_belief(
            phi_tiled, q_tiled[a], w_tiled, lam
        )
        assert np.allclose(belief.omega[a], omega, atol=1e-8)
        assert np.isclose(belief.sigma[a], sigma, atol=1e-8)


def test_point_mass_belief_and_sampling():
    belief = ValueBeliefFittedQ.point_mass(3, 4)
    draws = belief.sample_weight_vectors(5, np.random.default_rng(2))
    assert draws.shape == (5, 3, 4)
    assert np.allclose(draws, 0.0, atol=1e-5)


def test_history_sampler_mixture():
    sampler = HistoryStateSampler((-1.0, -1.0), (1.0, 1.0), history_fraction=0.5)
    rng = np.random.default_rng(3)
    # empty buffer: all draws uniform in the box
    out = sampler(10, rng)
    assert out.shape == (10, 2)
    assert np.all(out >= -1.0) and np.all(out <= 1.0)
    sampler.push((5.0, 5.0))
    out = sampler(10, rng)
    n_hist = np.sum(np.all(out == 5.0, axis=1))
    assert n_hist == 5  # exactly half the draws come from the history


def trained_pendulum_like_posterior(seed=0, n_obs=200):
    """Posterior over a known 1-D linear system: s' = 0.9 s + drift(a)."""
    rng = np.random.default_rng(seed)
    post = BayesLinRegPosterior(1, 2, 2, gamma=0.9)
    for _ in range(n_obs):
        s = rng.uniform(-1.0, 1.0, size=1)
        a = int(rng.integers(2))
        drift = 0.3 if a == 1 else -0.3
        s2 = 0.9 * s + drift
        reward = float(-abs(s2[0]))  # reward favors staying near the origin
        post.update(identity_features(s[None, :])[0], a, reward, s2)
    return post


def test_continuous_plan_greedy_matches_weights():
    post = trained_pendulum_like_posterior()
    config = ContinuousPlannerConfig(
        lookahead=5,
        n_mdp_samples=4,
        n_value_samples=10,
        n_probe_states=8,
        n_regression_states=16,
        scale=LikelihoodScale.from_reward_bounds(-1.5, 0.0, 0.9),
    )

    def sampler(n, rng):
        return rng.uniform(-1.0, 1.0, size=(n, 1))

    plan = continuous_bbi_plan(post, identity_features, sampler, config, np.random.default_rng(4))
    assert len(plan.q_weights) == 5 and len(plan.beliefs) == 5
    for s in (-0.8, -0.1, 0.4, 0.9):
        phi = identity_features(np.array([[s]]))[0]
        assert plan.policy.act(np.array([s])) == int(np.argmax(plan.q_weights[0] @ phi))


def test_continuous_plan_prefers_restoring_action():
    """From a strongly displaced state the plan should push back to the origin."""
    post = trained_pendulum_like_posterior(n_obs=500)
    config = ContinuousPlannerConfig(
        lookahead=8,
        n_mdp_samples=6,
        n_value_samples=20,
        n_probe_states=16,
        n_regression_states=32,
        scale=LikelihoodScale.from_reward_bounds(-1.5, 0.0, 0.9),
    )

    def sampler(n, rng):
        return rng.uniform(-1.0, 1.0, size=(n, 1))

    votes = []
    for seed in range(5):
        plan = continuous_bbi_plan(
            post, identity_features, sampler, config, np.random.default_rng(seed)
        )
        votes.append(plan.policy.act(np.array([-0.9])))
    assert np.mean(np.array(votes) == 1) >= 0.8  # action 1 drifts upward


def test_continuous_plan_determinism():
    post = trained_pendulum_like_posterior(seed=5)
    config = ContinuousPlannerConfig(
        lookahead=4,
        n_mdp_samples=3,
        n_value_samples=8,
        n_probe_states=8,
        n_regression_states=12,
        scale=LikelihoodScale.from_reward_bounds(-1.5, 0.0, 0.9),
    )

    def sampler(n, rng):
        return rng.uniform(-1.0, 1.0, size=(n, 1))

    a = continuous_bbi_plan(post, identity_features, sampler, config, np.random.default_rng(6))
    b = continuous_bbi_plan(post, identity_features, sampler, config, np.random.default_rng(6))
    for wa, wb in zip(a.q_weights, b.q_weights):
        assert np.array_equal(wa, wb)


def test_continuous_agent_round_trip():
    config = ContinuousPlannerConfig(
        lookahead=3,
        n_mdp_samples=2,
        n_value_samples=5,
        n_probe_states=6,
        n_regression_states=8,
        scale=LikelihoodScale(1.0),
    )
    sampler = HistoryStateSampler((-1.0,), (1.0,))
    agent = ContinuousAgent(
        "bbi", 1, 2, identity_features, config, np.random.default_rng(7), sampler, gamma=0.9
    )
    rng = np.random.default_rng(8)
    state = np.array([0.0])
    for t in range(1, 30):
        agent.maybe_replan(t)
        action = agent.act(state)
        assert action in (0, 1)
        nxt = 0.9 * state + (0.3 if action == 1 else -0.3) + rng.normal(0, 0.01, 1)
        agent.observe(state, action, float(-abs(nxt[0])), nxt)
        state = nxt
    assert agent.plan is not None
    assert np.all(agent.posterior.r_n == np.array([agent.posterior.r_n[0], 29 - agent.posterior.r_n[0]]))


def test_planner_config_validation():
    with pytest.raises(ValueError):
        ContinuousPlannerConfig(lookahead=0)
