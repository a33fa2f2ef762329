"""Command-line entry points for the experiment harness."""
from __future__ import annotations

import argparse
import json
import sys

from .agents import CONTINUOUS_ALGORITHMS, DISCRETE_ALGORITHMS
from .experiments import bayes_bound_experiment, posterior_quality_experiment
from .harness import (
    CONTINUOUS_ENVS,
    ENVIRONMENTS,
    ExperimentConfig,
    exp_smooth,
    read_run_csv,
    run_experiment,
)

CONFIG_KEYS = (
    "gamma",
    "lookahead",
    "n_mdp_samples",
    "n_value_samples",
    "n_next_value_samples",
    "sigma_sq_factor",
    "ridge_lambda",
    "half_life",
    "alpha0",
    "env_params",
)


def _add_run_parser(sub):
    p = sub.add_parser("run", help="run seeded learning experiments and emit CSVs")
    p.add_argument("environment", choices=ENVIRONMENTS)
    p.add_argument("algorithm", help=f"one of {DISCRETE_ALGORITHMS}")
    p.add_argument("--steps", type=int, default=10000)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--output-dir", default="results")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", help="JSON file of hyperparameter overrides")


def _add_posterior_parser(sub):
    p = sub.add_parser(
        "posterior-eval", help="value-belief quality study on the chain task"
    )
    p.add_argument("--checkpoints", type=int, nargs="+", default=[10, 100, 1000])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=5)


def _add_bound_parser(sub):
    p = sub.add_parser(
        "bayes-bound", help="belief mean versus the Bayes-optimal value bound"
    )
    p.add_argument("--checkpoints", type=int, nargs="+", default=[10, 100, 1000])
    p.add_argument("--seed", type=int, default=0)


def _add_smooth_parser(sub):
    p = sub.add_parser("smooth", help="re-smooth the rewards of an emitted run CSV")
    p.add_argument("csv_path")
    p.add_argument("--half-life", type=float, default=1000.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbrl", description="Bayesian RL benchmark harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)
    _add_posterior_parser(sub)
    _add_bound_parser(sub)
    _add_smooth_parser(sub)
    return parser


def _load_overrides(path):
    with open(path) as fh:
        raw = json.load(fh)
    unknown = set(raw) - set(CONFIG_KEYS)
    if unknown:
        raise SystemExit(f"unknown config keys: {sorted(unknown)}")
    return raw


def _cmd_run(args) -> int:
    algorithms = (
        CONTINUOUS_ALGORITHMS if args.environment in CONTINUOUS_ENVS else DISCRETE_ALGORITHMS
    )
    if args.algorithm not in algorithms:
        raise SystemExit(
            f"algorithm {args.algorithm!r} unavailable on {args.environment};"
            f" choose from {algorithms}"
        )
    overrides = _load_overrides(args.config) if args.config else {}
    config = ExperimentConfig(
        environment=args.environment,
        algorithm=args.algorithm,
        n_steps=args.steps,
        seeds=tuple(args.seeds),
        output_dir=args.output_dir,
        n_workers=args.workers,
        **overrides,
    )
    result = run_experiment(config)
    final = result.aggregate[-1]
    print(
        f"{config.environment}/{config.algorithm}: {len(config.seeds)} seed(s),"
        f" {config.n_steps} steps, final mean smoothed reward {final:.6g}"
    )
    print(f"CSV output in {config.output_dir}")
    return 0


def _cmd_posterior(args) -> int:
    result = posterior_quality_experiment(
        checkpoints=tuple(args.checkpoints), seed=args.seed, n_reps=args.reps
    )
    print("steps  W1(inferred)  W1(mean-field)  W1(mean-MDP point)  truth mean")
    for i, t in enumerate(result.checkpoints):
        print(
            f"{t:>5d}  {result.w1_method1[i]:>12.4f}  {result.w1_mean_field[i]:>14.4f}"
            f"  {result.w1_mean_mdp[i]:>18.4f}  {result.truth_means[i]:>10.4f}"
        )
    return 0


def _cmd_bound(args) -> int:
    result = bayes_bound_experiment(checkpoints=tuple(args.checkpoints), seed=args.seed)
    print("steps  upper bound  belief mean  belief std")
    for i, t in enumerate(result.checkpoints):
        print(
            f"{t:>5d}  {result.upper_bounds[i]:>11.4f}  {result.belief_means[i]:>11.4f}"
            f"  {result.belief_stds[i]:>10.4f}"
        )
    return 0


def _cmd_smooth(args) -> int:
    data = read_run_csv(args.csv_path)
    smoothed = exp_smooth(data["reward"], args.half_life)
    for t, v in zip(data["step"], smoothed):
        print(f"{t},{v:.9g}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "posterior-eval": _cmd_posterior,
        "bayes-bound": _cmd_bound,
        "smooth": _cmd_smooth,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
