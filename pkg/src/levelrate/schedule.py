"""Learning-rate schedules.

Time ``t`` is a real-valued step count; callers map iteration ``k`` to
``t = k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputDomainError, ParameterError


@dataclass(frozen=True)
class ExpDecaySchedule:
    """``alpha(t) = alpha0 * exp(-beta * t)``."""

    alpha0: float = 0.1
    beta: float = 0.01

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ParameterError(f"alpha0 must be > 0, got {self.alpha0}")
        if not self.beta > 0:
            raise ParameterError(f"beta must be > 0, got {self.beta}")

    def __call__(self, t: float) -> float:
        return exp_decay(self, t)

    def derivative(self, t: float) -> float:
        return exp_decay_derivative(self, t)

    @property
    def half_life(self) -> float:
        return math.log(2.0) / self.beta


@dataclass(frozen=True)
class ConstantSchedule:
    alpha0: float = 0.1

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ParameterError(f"alpha0 must be > 0, got {self.alpha0}")

    def __call__(self, t: float) -> float:
        if t < 0:
            raise ParameterError(f"t must be >= 0, got {t}")
        return self.alpha0


def exp_decay(s: ExpDecaySchedule, t: float) -> float:
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    return s.alpha0 * math.exp(-s.beta * t)


def exp_decay_derivative(s: ExpDecaySchedule, t: float) -> float:
    """Time derivative ``-beta * alpha(t)``."""
    return -s.beta * exp_decay(s, t)


def grad_adaptive_rate(g) -> float:
    """``1 / (1 + ||g||)`` with the Euclidean norm."""
    g = np.asarray(g, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise InputDomainError("gradient must be finite")
    return 1.0 / (1.0 + float(np.linalg.norm(g)))
