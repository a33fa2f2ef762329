"""Monte-Carlo inference of value-function posteriors and Bayesian planning."""

from .agents import ContinuousAgent, DiscreteAgent, HistoryStateSampler
from .envs import doubleloop, inverted_pendulum, lavalake, linear_model, maze, nchain
from .fitted_q import ValueBeliefFittedQ, fitted_q_belief
from .harness import ExperimentConfig, RunLog, exp_smooth, run_experiment, wasserstein_1d
from .inference import (
    LikelihoodScale,
    MdpEnsemble,
    Method1Engine,
    ValueBeliefGaussian,
    WeightedValueEnsemble,
    compute_weights,
    fit_gaussian_belief,
    generate_utility_samples,
    mc_value_distribution,
    mean_field_evaluation,
    policy_evaluation_method1,
    propagate_values,
    sample_belief,
)
from .mdp import (
    DimensionError,
    DiscreteMdp,
    NonstationaryPolicy,
    StationaryPolicy,
    ValueVector,
    backwards_induction,
    bellman_backup,
    exact_optimal,
    exact_policy_value,
    q_from_values,
    stationary_average_reward,
    stationary_distribution,
)
from .planners import (
    PlannerConfig,
    PlanOutput,
    bayes_q,
    bayes_upper_bound,
    bbi_plan,
    mmbi_plan,
    psrl_plan,
)
from .continuous import (
    ContinuousPlannerConfig,
    ContinuousPlanOutput,
    GreedyFeaturePolicy,
    continuous_bbi_plan,
    fit_q_ensemble,
)
from .posterior import DirichletNormalGammaPosterior, Observation
from .regression import BayesLinRegPosterior, LinearMdpSample, stable_cholesky

__version__ = "0.1.0"

__all__ = [
    "BayesLinRegPosterior",
    "ContinuousAgent",
    "ContinuousPlanOutput",
    "ContinuousPlannerConfig",
    "DimensionError",
    "DirichletNormalGammaPosterior",
    "DiscreteAgent",
    "DiscreteMdp",
    "ExperimentConfig",
    "GreedyFeaturePolicy",
    "HistoryStateSampler",
    "LikelihoodScale",
    "LinearMdpSample",
    "MdpEnsemble",
    "Method1Engine",
    "NonstationaryPolicy",
    "Observation",
    "PlanOutput",
    "PlannerConfig",
    "RunLog",
    "StationaryPolicy",
    "ValueBeliefFittedQ",
    "ValueBeliefGaussian",
    "ValueVector",
    "WeightedValueEnsemble",
    "backwards_induction",
    "bayes_q",
    "bayes_upper_bound",
    "bbi_plan",
    "bellman_backup",
    "compute_weights",
    "continuous_bbi_plan",
    "doubleloop",
    "exact_optimal",
    "exact_policy_value",
    "exp_smooth",
    "fit_gaussian_belief",
    "fit_q_ensemble",
    "fitted_q_belief",
    "generate_utility_samples",
    "inverted_pendulum",
    "lavalake",
    "linear_model",
    "maze",
    "mc_value_distribution",
    "mean_field_evaluation",
    "mmbi_plan",
    "nchain",
    "policy_evaluation_method1",
    "propagate_values",
    "psrl_plan",
    "q_from_values",
    "run_experiment",
    "sample_belief",
    "stable_cholesky",
    "stationary_average_reward",
    "stationary_distribution",
    "wasserstein_1d",
]
