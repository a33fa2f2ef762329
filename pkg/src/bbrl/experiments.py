"""Diagnostic studies: value-belief quality and the Bayes-optimal value bound.

Both studies work with finite-horizon discounted values at the planner's
lookahead, so the Monte-Carlo ground truth, the point estimate of the mean
MDP, and the inferred beliefs all measure the same quantity.  The belief
sweep starts from a point mass at zero, so a lookahead of T corresponds to
T - 1 reward steps; the oracles below use the same horizon.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import ContinuousAgent, DiscreteAgent, HistoryStateSampler
from .continuous import ContinuousPlannerConfig
from .envs import (
    inverted_pendulum,
    nchain,
    pendulum_features_batch,
    pendulum_model_features_batch,
)
from .harness import wasserstein_1d
from .inference import (
    LikelihoodScale,
    MdpEnsemble,
    mean_field_evaluation,
    policy_evaluation_method1,
)
from .mdp import StationaryPolicy, backwards_induction
from .planners import PlannerConfig
from .posterior import DirichletNormalGammaPosterior, Observation

DEFAULT_CHECKPOINTS = (10, 100, 1000)
DEFAULT_LOOKAHEAD = 100


def chain_behavior_policy(n_states: int, first_action_prob: float = 0.8) -> StationaryPolicy:
    """Fixed chain policy: first action with probability 0.8, second with 0.2.

    Together with the slip this visits every state eventually.
    """
    probs = np.tile([first_action_prob, 1.0 - first_action_prob], (n_states, 1))
    return StationaryPolicy(probs)


def collect_chain_posteriors(checkpoints, seed, first_action_prob=0.8, gamma=0.99):
    """Interact on the chain under the fixed policy; snapshot the posterior.

    Returns (policy, {checkpoint: posterior copy}).
    """
    env = nchain(seed=seed)
    policy = chain_behavior_policy(env.n_states, first_action_prob)
    posterior = DirichletNormalGammaPosterior(env.n_states, env.n_actions, gamma=gamma)
    rng = np.random.default_rng(seed)
    snapshots = {}
    state = env.reset()
    for t in range(1, max(checkpoints) + 1):
        action = policy.sample_action(state, rng)
        result = env.step(action)
        posterior.update(Observation(state, action, result.reward, result.next_state))
        state = result.next_state
        if t in checkpoints:
            snapshots[t] = posterior.copy()
    return policy, snapshots


def finite_horizon_policy_values(
    posterior, policy: StationaryPolicy, horizon: int, n_samples: int, rng
) -> np.ndarray:
    """Monte-Carlo truth: horizon-step policy values of sampled MDPs, (n, S)."""
    mdps = MdpEnsemble.sample(posterior, n_samples, rng)
    p_pi, r_pi = mdps.policy_marginals(policy)
    v = np.zeros_like(r_pi)
    for _ in range(horizon):
        v = r_pi + mdps.gamma * np.einsum("jst,jt->js", p_pi, v, optimize=True)
    return v


def finite_horizon_point_value(mdp, policy: StationaryPolicy, horizon: int) -> np.ndarray:
    p_pi = np.einsum("sat,sa->st", mdp.transition, policy.action_prob)
    r_pi = np.einsum("sa,sa->s", mdp.reward_mean, policy.action_prob)
    v = np.zeros(mdp.n_states)
    for _ in range(horizon):
        v = r_pi + mdp.discount * (p_pi @ v)
    return v


def belief_marginal_samples(belief, state: int, n_samples: int, rng) -> np.ndarray:
    """Draws from the belief's Gaussian marginal of V(state)."""
    std = float(np.sqrt(max(belief.cov[state, state], 0.0)))
    return belief.mean[state] + std * rng.standard_normal(n_samples)


@dataclass
class PosteriorQualityResult:
    checkpoints: tuple
    w1_method1: np.ndarray  # (n_checkpoints,) mean over reps
    w1_method1_std: np.ndarray
    w1_mean_field: np.ndarray
    w1_mean_mdp: np.ndarray  # point estimate from the posterior-mean MDP
    truth_means: np.ndarray


def posterior_quality_experiment(
    checkpoints=DEFAULT_CHECKPOINTS,
    seed: int = 0,
    n_reps: int = 5,
    n_truth_samples: int = 1000,
    lookahead: int = DEFAULT_LOOKAHEAD,
    n_mdp_samples: int = 10,
    n_value_samples: int = 50,
    gamma: float = 0.99,
) -> PosteriorQualityResult:
    """Distance between the inferred start-state value belief and the truth.

    The ground truth at each data checkpoint is the Monte-Carlo distribution
    of the behavior policy's finite-horizon value under the posterior.  The
    belief is compared to it in Wasserstein-1 at the chain's start state,
    against the mean-field ablation and the single point implied by the
    posterior-mean MDP.
    """
    checkpoints = tuple(sorted(checkpoints))
    policy, snapshots = collect_chain_posteriors(checkpoints, seed, gamma=gamma)
    env = nchain()
    scale = LikelihoodScale.from_reward_bounds(*env.reward_bounds(), gamma)
    start = env.start_state
    horizon = lookahead - 1
    rng = np.random.default_rng(seed + 1)
    w1_m1 = np.empty((len(checkpoints), n_reps))
    w1_mf = np.empty_like(w1_m1)
    w1_point = np.empty(len(checkpoints))
    truth_means = np.empty(len(checkpoints))
    for i, t in enumerate(checkpoints):
        posterior = snapshots[t]
        truth = finite_horizon_policy_values(
            posterior, policy, horizon, n_truth_samples, rng
        )[:, start]
        truth_means[i] = truth.mean()
        point = finite_horizon_point_value(posterior.mean_mdp(), policy, horizon)[start]
        w1_point[i] = float(np.mean(np.abs(truth - point)))
        for rep in range(n_reps):
            for collector, evaluate in ((w1_m1, policy_evaluation_method1),
                                        (w1_mf, mean_field_evaluation)):
                beliefs = evaluate(
                    posterior, policy, lookahead, n_mdp_samples,
                    n_value_samples, scale, rng,
                )
                draws = belief_marginal_samples(beliefs[0], start, n_truth_samples, rng)
                collector[i, rep] = wasserstein_1d(truth, draws)
    return PosteriorQualityResult(
        checkpoints,
        w1_m1.mean(axis=1),
        w1_m1.std(axis=1),
        w1_mf.mean(axis=1),
        w1_point,
        truth_means,
    )


@dataclass
class BayesBoundResult:
    checkpoints: tuple
    upper_bounds: np.ndarray  # start-state mean of per-sample optimal values
    belief_means: np.ndarray  # start-state belief mean of the executed policy
    belief_stds: np.ndarray
    bound_errs: np.ndarray  # standard errors of the bound estimates


def finite_horizon_bound(posterior, horizon: int, n_samples: int, rng, state: int):
    """Mean and standard error of sampled-MDP optimal values at one state."""
    draws = np.empty(n_samples)
    for i in range(n_samples):
        _, values = backwards_induction(posterior.sample_mdp(rng), horizon)
        draws[i] = values[0].values[state]
    return float(draws.mean()), float(draws.std() / np.sqrt(n_samples))


def bayes_bound_experiment(
    checkpoints=DEFAULT_CHECKPOINTS,
    seed: int = 0,
    n_bound_samples: int = 100,
    n_belief_reps: int = 3,
    lookahead: int = DEFAULT_LOOKAHEAD,
    n_mdp_samples: int = 10,
    n_value_samples: int = 50,
    gamma: float = 0.99,
) -> BayesBoundResult:
    """Track the planner's value belief against the Bayes-optimal upper bound.

    Runs the backwards-induction agent on the chain; at each checkpoint the
    posterior gives (a) the Monte-Carlo bound, the mean over sampled MDPs of
    their optimal start-state values, and (b) the agent's inferred belief
    over the value of the policy it is currently executing.  The belief mean
    should stay below the bound, approaching it as data accumulates.
    """
    checkpoints = tuple(sorted(checkpoints))
    env = nchain(seed=seed)
    scale = LikelihoodScale.from_reward_bounds(*env.reward_bounds(), gamma)
    config = PlannerConfig(
        lookahead=lookahead,
        n_mdp_samples=n_mdp_samples,
        n_value_samples=n_value_samples,
        scale=scale,
    )
    agent = DiscreteAgent(
        "bbi", env.n_states, env.n_actions, config, np.random.default_rng(seed), gamma=gamma
    )
    eval_rng = np.random.default_rng(seed + 1)
    start = env.start_state
    horizon = lookahead - 1
    bounds = np.empty(len(checkpoints))
    bound_errs = np.empty(len(checkpoints))
    means = np.empty(len(checkpoints))
    stds = np.empty(len(checkpoints))
    state = env.reset()
    index = {t: i for i, t in enumerate(checkpoints)}
    for t in range(1, max(checkpoints) + 1):
        agent.maybe_replan(t)
        action = agent.act(state)
        result = env.step(action)
        agent.observe(state, action, result.reward, result.next_state, result.terminal)
        state = result.next_state
        if t in index:
            i = index[t]
            bounds[i], bound_errs[i] = finite_horizon_bound(
                agent.posterior, horizon, n_bound_samples, eval_rng, start
            )
            rep_means = np.empty(n_belief_reps)
            rep_stds = np.empty(n_belief_reps)
            for rep in range(n_belief_reps):
                beliefs = policy_evaluation_method1(
                    agent.posterior, agent.policy, lookahead,
                    n_mdp_samples, n_value_samples, scale, eval_rng,
                )
                rep_means[rep] = beliefs[0].mean[start]
                rep_stds[rep] = np.sqrt(max(beliefs[0].cov[start, start], 0.0))
            means[i] = rep_means.mean()
            stds[i] = rep_stds.mean()
    return BayesBoundResult(checkpoints, bounds, means, stds, bound_errs)


def pendulum_survival(policy_act, seed: int, n_episodes: int = 10) -> float:
    """Mean episode length of a fixed policy on the pendulum task.

    ``policy_act(state) -> action``; episodes end on a fall or at the task's
    3000-step success cutoff.
    """
    env = inverted_pendulum(seed=seed)
    lengths = np.empty(n_episodes)
    for ep in range(n_episodes):
        state = env.reset()
        steps = 0
        while True:
            result = env.step(policy_act(state))
            steps += 1
            if result.terminal:
                break
            state = result.next_state
        lengths[ep] = steps
    return float(lengths.mean())


def windowed_episode_length(terminals: np.ndarray, end: int, window: int) -> float:
    """Steps per completed episode inside the training window (end-window, end]."""
    lo = max(end - window, 0)
    n_episodes = int(np.count_nonzero(terminals[lo:end]))
    return (end - lo) / max(n_episodes, 1)


@dataclass
class PendulumSurvivalResult:
    checkpoints: tuple
    survival: np.ndarray  # (n_checkpoints,) mean steps survived per episode
    random_baseline: float


def pendulum_survival_experiment(
    checkpoints=(10000, 20000, 30000),
    seed: int = 0,
    window: int = 5000,
    algorithm: str = "bbi",
    lookahead: int = 20,
    n_mdp_samples: int = 10,
    n_value_samples: int = 50,
    gamma: float = 0.99,
) -> PendulumSurvivalResult:
    """Steps survived per episode while training a fitted-Q planner.

    At each checkpoint the metric is the mean episode length over the
    trailing training window, which averages over many replans.  A
    random-action baseline is measured with the same windowed metric.
    """
    checkpoints = tuple(sorted(checkpoints))
    n_steps = max(checkpoints)
    env = inverted_pendulum(seed=seed)
    scale = LikelihoodScale.from_reward_bounds(*env.reward_bounds(), gamma)
    config = ContinuousPlannerConfig(
        lookahead=lookahead,
        n_mdp_samples=n_mdp_samples,
        n_value_samples=n_value_samples,
        scale=scale,
    )
    sampler = HistoryStateSampler(
        (-np.pi / 2, -2.0), (np.pi / 2, 2.0), history_fraction=0.9
    )
    agent = ContinuousAgent(
        algorithm,
        env.state_dim,
        env.n_actions,
        pendulum_features_batch,
        config,
        np.random.default_rng(seed),
        sampler,
        gamma=gamma,
        dyn_feature_fn=pendulum_model_features_batch,
    )
    terminals = np.zeros(n_steps, dtype=bool)
    state = env.reset()
    for t in range(1, n_steps + 1):
        agent.maybe_replan(t)
        action = agent.act(state)
        result = env.step(action)
        agent.observe(state, action, result.reward, result.next_state, result.terminal)
        terminals[t - 1] = result.terminal
        state = result.next_state
    survival = np.array(
        [windowed_episode_length(terminals, t, window) for t in checkpoints]
    )
    base_env = inverted_pendulum(seed=seed + 1)
    base_rng = np.random.default_rng(seed + 1)
    base_terms = np.zeros(window, dtype=bool)
    base_env.reset()
    for t in range(window):
        base_terms[t] = base_env.step(int(base_rng.integers(0, env.n_actions))).terminal
    baseline = windowed_episode_length(base_terms, window, window)
    return PendulumSurvivalResult(checkpoints, survival, baseline)
