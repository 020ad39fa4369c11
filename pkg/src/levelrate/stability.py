"""Lyapunov-style descent monitoring with the loss as the energy function."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError, ParameterError
from .trajectory import Trajectory


def lyapunov_rate(alpha: float, g) -> float:
    """Continuous-time loss derivative ``-alpha * ||g||^2`` along gradient flow."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    g = np.asarray(g, dtype=np.float64)
    return -alpha * float(g @ g)


def predicted_descent(loss: float, g) -> float:
    """First-order prediction of the loss after one adaptive-rate step."""
    g = np.asarray(g, dtype=np.float64)
    sq = float(g @ g)
    return loss - sq / (1.0 + np.sqrt(sq))


@dataclass
class Violation:
    t: int
    delta_loss: float
    bound: float


@dataclass
class StabilityReport:
    steps_checked: int
    violations: list[Violation] = field(default_factory=list)
    max_violation: float = 0.0
    monotone: bool = True
    tol: float = 0.0
    bounded: bool | None = None
    bound_pair: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def check_monotone(traj: Trajectory, tol: float = 1e-12) -> StabilityReport:
    """Flag every step whose loss rises by more than ``tol``.

    Each violation records the observed loss change and the allowed bound
    ``tol``; ``max_violation`` is the largest excess over that bound.
    """
    if len(traj) < 2:
        raise DataError("need at least two records to check descent")
    if not tol >= 0:
        raise ParameterError("tol must be >= 0")
    losses = traj.losses
    report = StabilityReport(steps_checked=len(losses) - 1, tol=tol)
    for k in range(1, len(losses)):
        change = float(losses[k] - losses[k - 1])
        # NaN comparisons are False, so spell the check as "not within"
        if not change <= tol:
            report.violations.append(Violation(traj[k].t, change, tol))
            excess = change - tol if np.isfinite(change) else float("inf")
            report.max_violation = max(report.max_violation, excess)
    report.monotone = not report.violations
    return report


def boundedness_check(traj: Trajectory, x_star, delta: float, eps: float) -> bool:
    """Whether a start within ``delta`` of ``x_star`` keeps every iterate within ``eps``.

    Vacuously true when the start is not within ``delta``.
    """
    if not (delta > 0 and eps > 0):
        raise ParameterError("delta and eps must be > 0")
    if not traj.has_snapshots:
        raise DataError("boundedness check needs parameter snapshots")
    dist = np.linalg.norm(traj.xs - np.asarray(x_star, dtype=np.float64), axis=1)
    if not dist[0] < delta:
        return True
    return bool(np.all(dist < eps))


def stability_report(traj: Trajectory, tol: float = 1e-12, x_star=None, delta=None, eps=None) -> StabilityReport:
    report = check_monotone(traj, tol) if len(traj) >= 2 else StabilityReport(steps_checked=0)
    if x_star is not None and delta is not None and eps is not None and traj.has_snapshots:
        report.bounded = boundedness_check(traj, x_star, delta, eps)
        report.bound_pair = (float(delta), float(eps))
    return report
