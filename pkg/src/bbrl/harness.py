"""Batch experiment harness: seeded runs, smoothing, metrics, CSV output."""
from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .agents import ContinuousAgent, DiscreteAgent, HistoryStateSampler
from .continuous import ContinuousPlannerConfig
from .envs import (
    doubleloop,
    inverted_pendulum,
    lavalake,
    linear_model,
    maze,
    nchain,
    pendulum_features_batch,
    pendulum_model_features_batch,
)
from .inference import LikelihoodScale
from .planners import PlannerConfig

DEFAULT_HALF_LIFE = 1000.0
CONTINUOUS_ENVS = ("pendulum", "linear")
DISCRETE_ENVS = ("nchain", "doubleloop", "lavalake5x7", "lavalake10x10", "maze")
ENVIRONMENTS = DISCRETE_ENVS + CONTINUOUS_ENVS

# the two largest tabular tasks run with a reduced value-sample budget
REDUCED_N_VALUE_SAMPLES = {"lavalake10x10": 20, "maze": 20}

CSV_HEADER = ("seed", "step", "reward", "smoothed_reward", "replanned")
FLOAT_FORMAT = "%.9g"


def exp_smooth(values, half_life: float = DEFAULT_HALF_LIFE) -> np.ndarray:
    """Exponential smoothing with decay 2^(-1/half_life), seeded at x_1."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape[0] == 0:
        raise ValueError("values must be a non-empty 1-D array")
    if half_life <= 0:
        raise ValueError("half_life must be positive")
    lam = 2.0 ** (-1.0 / half_life)
    out = np.empty_like(x)
    acc = x[0]
    out[0] = acc
    for i in range(1, x.shape[0]):
        acc = lam * acc + (1.0 - lam) * x[i]
        out[i] = acc
    return out


def wasserstein_1d(a, b) -> float:
    """W1 distance between two empirical distributions on the real line.

    For equal sample counts this is the mean absolute difference of the
    sorted samples; in general it is the integral of |F_a - F_b|.
    """
    av = np.sort(np.asarray(a, dtype=float).ravel())
    bv = np.sort(np.asarray(b, dtype=float).ravel())
    if av.size == 0 or bv.size == 0:
        raise ValueError("both samples must be non-empty")
    if av.size == bv.size:
        return float(np.mean(np.abs(av - bv)))
    grid = np.sort(np.concatenate([av, bv]))
    deltas = np.diff(grid)
    cdf_a = np.searchsorted(av, grid[:-1], side="right") / av.size
    cdf_b = np.searchsorted(bv, grid[:-1], side="right") / bv.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * deltas))


def checkpoint_steps(n_steps: int) -> np.ndarray:
    """Logging cadence: every step through t=1000, then every 100 steps."""
    steps = np.arange(1, n_steps + 1)
    return steps[(steps <= 1000) | (steps % 100 == 0)]


@dataclass
class RunLog:
    """Complete record of one seeded run."""

    seed: int
    rewards: np.ndarray  # (n_steps,) per-step rewards, step t at index t-1
    replanned: np.ndarray  # (n_steps,) bool, True where a replan preceded the step
    terminals: np.ndarray  # (n_steps,) bool episode boundaries
    states: np.ndarray | None = None
    actions: np.ndarray | None = None

    @property
    def n_steps(self) -> int:
        return self.rewards.shape[0]

    def smoothed(self, half_life: float = DEFAULT_HALF_LIFE) -> np.ndarray:
        return exp_smooth(self.rewards, half_life)


@dataclass
class ExperimentConfig:
    environment: str
    algorithm: str
    n_steps: int
    seeds: tuple = (0,)
    gamma: float = 0.99
    lookahead: int | None = None  # default 100 tabular, 20 continuous
    n_mdp_samples: int = 10
    n_value_samples: int | None = None  # default 50, or 20 for the large grids
    n_next_value_samples: int = 10
    sigma_sq_factor: float = 1e-4
    ridge_lambda: float = 0.01
    half_life: float = DEFAULT_HALF_LIFE
    alpha0: float = 0.5
    env_params: dict = field(default_factory=dict)
    output_dir: str | None = None
    n_workers: int = 1
    keep_trajectories: bool = False

    def __post_init__(self):
        if self.environment not in ENVIRONMENTS:
            raise ValueError(
                f"unknown environment {self.environment!r}; choose from {ENVIRONMENTS}"
            )
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        self.seeds = tuple(int(s) for s in self.seeds)

    def resolved_lookahead(self) -> int:
        if self.lookahead is not None:
            return self.lookahead
        return 20 if self.environment in CONTINUOUS_ENVS else 100

    def resolved_n_value_samples(self) -> int:
        if self.n_value_samples is not None:
            return self.n_value_samples
        return REDUCED_N_VALUE_SAMPLES.get(self.environment, 50)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list  # [RunLog]
    steps: np.ndarray  # checkpoint steps
    smoothed: np.ndarray  # (n_seeds, n_checkpoints)
    aggregate: np.ndarray  # (n_checkpoints,) pointwise mean over seeds


def build_environment(name: str, seed, **params):
    if name == "nchain":
        return nchain(seed=seed, **params)
    if name == "doubleloop":
        return doubleloop(seed=seed, **params)
    if name == "lavalake5x7":
        return lavalake("5x7", seed=seed, **params)
    if name == "lavalake10x10":
        return lavalake("10x10", seed=seed, **params)
    if name == "maze":
        return maze(seed=seed, **params)
    if name == "pendulum":
        return inverted_pendulum(seed=seed, **params)
    if name == "linear":
        return linear_model(seed=seed, **params)
    raise ValueError(f"unknown environment {name!r}")


def _identity_features_batch(states: np.ndarray) -> np.ndarray:
    s = np.asarray(states, dtype=float)
    return np.concatenate([s, np.ones((s.shape[0], 1))], axis=1)


def build_agent(config: ExperimentConfig, env, rng: np.random.Generator):
    r_min, r_max = env.reward_bounds()
    v_span = (r_max - r_min) / (1.0 - config.gamma)
    scale = LikelihoodScale(v_span * v_span * config.sigma_sq_factor, v_span)
    if config.environment in CONTINUOUS_ENVS:
        if config.environment == "pendulum":
            feature_fn = pendulum_features_batch
            dyn_feature_fn = pendulum_model_features_batch
            sampler = HistoryStateSampler(
                (-np.pi / 2, -2.0), (np.pi / 2, 2.0), history_fraction=0.9
            )
        else:
            feature_fn = _identity_features_batch
            dyn_feature_fn = feature_fn
            sampler = HistoryStateSampler((-2.0,) * env.state_dim, (2.0,) * env.state_dim)
        planner = ContinuousPlannerConfig(
            lookahead=config.resolved_lookahead(),
            n_mdp_samples=config.n_mdp_samples,
            n_value_samples=config.resolved_n_value_samples(),
            n_next_draws=config.n_next_value_samples,
            ridge_lambda=config.ridge_lambda,
            scale=scale,
        )
        return ContinuousAgent(
            config.algorithm,
            env.state_dim,
            env.n_actions,
            feature_fn,
            planner,
            rng,
            sampler,
            gamma=config.gamma,
            dyn_feature_fn=dyn_feature_fn,
        )
    planner = PlannerConfig(
        lookahead=config.resolved_lookahead(),
        n_mdp_samples=config.n_mdp_samples,
        n_value_samples=config.resolved_n_value_samples(),
        n_next_draws=config.n_next_value_samples,
        scale=scale,
    )
    return DiscreteAgent(
        config.algorithm,
        env.n_states,
        env.n_actions,
        planner,
        rng,
        gamma=config.gamma,
        alpha0=config.alpha0,
    )


def run_single(config: ExperimentConfig, seed: int) -> RunLog:
    """One seeded interaction run of config.n_steps environment steps."""
    env = build_environment(config.environment, seed, **config.env_params)
    agent = build_agent(config, env, np.random.default_rng(seed))
    n = config.n_steps
    rewards = np.empty(n)
    replanned = np.zeros(n, dtype=bool)
    terminals = np.zeros(n, dtype=bool)
    keep = config.keep_trajectories
    states = [] if keep else None
    actions = np.empty(n, dtype=int) if keep else None
    state = env.reset()
    for t in range(1, n + 1):
        replanned[t - 1] = agent.maybe_replan(t)
        action = agent.act(state)
        result = env.step(action)
        agent.observe(state, action, result.reward, result.next_state, result.terminal)
        rewards[t - 1] = result.reward
        terminals[t - 1] = result.terminal
        if keep:
            states.append(state)
            actions[t - 1] = action
        state = result.next_state
    return RunLog(
        seed,
        rewards,
        replanned,
        terminals,
        np.asarray(states) if keep else None,
        actions,
    )


def _run_single_star(args):
    return run_single(*args)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run every seed, smooth the reward traces, and optionally emit CSVs.

    The aggregate learning curve is the pointwise mean over seeds of each
    seed's smoothed trace, sampled at the checkpoint steps.
    """
    jobs = [(config, seed) for seed in config.seeds]
    if config.n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.n_workers) as pool:
            runs = list(pool.map(_run_single_star, jobs))
    else:
        runs = [run_single(*job) for job in jobs]
    steps = checkpoint_steps(config.n_steps)
    smoothed_full = np.stack([run.smoothed(config.half_life) for run in runs])
    smoothed = smoothed_full[:, steps - 1]
    aggregate = smoothed.mean(axis=0)
    result = ExperimentResult(config, runs, steps, smoothed, aggregate)
    if config.output_dir is not None:
        write_experiment_csvs(result, config.output_dir)
    return result


def write_run_csv(path, run: RunLog, steps: np.ndarray, smoothed: np.ndarray):
    """Emit one seed's checkpoints as seed,step,reward,smoothed_reward,replanned."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for i, t in enumerate(steps):
            writer.writerow(
                [
                    run.seed,
                    int(t),
                    FLOAT_FORMAT % run.rewards[t - 1],
                    FLOAT_FORMAT % smoothed[i],
                    int(run.replanned[t - 1]),
                ]
            )


def read_run_csv(path):
    """Parse a run CSV back into arrays keyed by column name."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = list(reader)
    return {
        "seed": np.array([int(r[0]) for r in rows]),
        "step": np.array([int(r[1]) for r in rows]),
        "reward": np.array([float(r[2]) for r in rows]),
        "smoothed_reward": np.array([float(r[3]) for r in rows]),
        "replanned": np.array([bool(int(r[4])) for r in rows]),
    }


def write_experiment_csvs(result: ExperimentResult, output_dir: str):
    """One CSV per seed plus an aggregate step,mean_smoothed_reward curve."""
    os.makedirs(output_dir, exist_ok=True)
    tag = f"{result.config.environment}_{result.config.algorithm}"
    for i, run in enumerate(result.runs):
        path = os.path.join(output_dir, f"{tag}_seed{run.seed}.csv")
        write_run_csv(path, run, result.steps, result.smoothed[i])
    agg_path = os.path.join(output_dir, f"{tag}_aggregate.csv")
    with open(agg_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("step", "mean_smoothed_reward"))
        for t, v in zip(result.steps, result.aggregate):
            writer.writerow([int(t), FLOAT_FORMAT % v])


def rerun_with_seeds(config: ExperimentConfig, seeds) -> ExperimentResult:
    return run_experiment(replace(config, seeds=tuple(seeds)))
