"""Dynamic learning-rate schedules, a scale tuner, Lyapunov descent checks and
level-set connectivity analysis for small optimization problems."""

from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    InputDomainError,
    LevelRateError,
    NumericalError,
    ParameterError,
    SamplingError,
)
from .landscape import Dataset, Mlp, Objective, finite_diff_grad, get_objective
from .optimizer import Method, TunerConfig, run_training, tuner_init, tuner_step
from .trajectory import Trajectory

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "DimensionError",
    "InputDomainError",
    "LevelRateError",
    "Method",
    "Mlp",
    "NumericalError",
    "Objective",
    "ParameterError",
    "SamplingError",
    "Trajectory",
    "TunerConfig",
    "finite_diff_grad",
    "get_objective",
    "run_training",
    "tuner_init",
    "tuner_step",
]
