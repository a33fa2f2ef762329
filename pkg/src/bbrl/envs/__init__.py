from .base import DiscreteEnv, InvalidActionError, StepResult
from .chain import DoubleLoopEnv, NChainEnv, doubleloop, nchain
from .grid import GridEnv, GridMap, MapParseError, lavalake, load_bundled_map, maze, parse_map
from .linear import LinearModelEnv, linear_model
from .pendulum import (
    InvertedPendulumEnv,
    inverted_pendulum,
    pendulum_features,
    pendulum_features_batch,
    pendulum_model_features_batch,
)

__all__ = [
    "DiscreteEnv",
    "InvalidActionError",
    "StepResult",
    "NChainEnv",
    "DoubleLoopEnv",
    "nchain",
    "doubleloop",
    "GridEnv",
    "GridMap",
    "MapParseError",
    "lavalake",
    "maze",
    "parse_map",
    "load_bundled_map",
    "LinearModelEnv",
    "linear_model",
    "InvertedPendulumEnv",
    "inverted_pendulum",
    "pendulum_features",
    "pendulum_features_batch",
    "pendulum_model_features_batch",
]
