"""Gradient descent under a schedule, adaptive-rate descent, and a
scale tuner that wraps any first-order BASE optimizer.

The tuner keeps the accumulated BASE displacement ``delta`` and emits
``x_ref + S * delta`` where the scale ``S`` is the sum of six per-decay-factor
step sizes learned online from the correlation between ``delta`` and the
incoming gradient.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal, Protocol

import numpy as np
import numpy.typing as npt

from .errors import DimensionError, NumericalError, ParameterError
from .landscape import Objective, as_param_vector
from .schedule import ConstantSchedule, ExpDecaySchedule, grad_adaptive_rate
from .trajectory import StepRecord, Trajectory

logger = logging.getLogger(__name__)

Array = npt.NDArray[np.float64]

DEFAULT_BETAS = (0.9, 0.99, 0.999, 0.9999, 0.99999, 0.999999)
DIVERGENCE_LOSS = 1e12


def gd_step(x, g, alpha: float) -> Array:
    """``x - alpha * g``."""
    if not alpha > 0:
        raise ParameterError(f"learning rate must be > 0, got {alpha}")
    x = np.asarray(x, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if x.shape != g.shape:
        raise DimensionError(f"x has shape {x.shape}, gradient {g.shape}")
    return x - alpha * g


def adaptive_gd_step(x, obj: Objective) -> Array:
    """One step with rate ``1 / (1 + ||grad||)``."""
    g = obj.grad(x)
    return gd_step(x, g, grad_adaptive_rate(g))


# --- tuner ---


@dataclass(frozen=True)
class TunerConfig:
    betas: tuple[float, ...] = DEFAULT_BETAS
    lam: float = 0.01
    s_init: float = 1e-8
    eps: float = 1e-8

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        if not betas or not all(0.0 <= b <= 1.0 for b in betas):
            raise ParameterError("decay factors must lie in [0, 1]")
        object.__setattr__(self, "betas", betas)
        if not self.s_init > 0:
            raise ParameterError("s_init must be > 0")
        if not self.eps > 0:
            raise ParameterError("eps must be > 0")

    @property
    def n(self) -> int:
        return len(self.betas)


@dataclass(frozen=True)
class TunerState:
    delta: Array
    x_ref: Array
    x: Array
    m: Array
    v: Array
    r: Array
    s: Array
    t: int = 0

    @property
    def scale(self) -> float:
        return float(np.sum(self.s))


def tuner_init(x0, config: TunerConfig = TunerConfig()) -> TunerState:
    x0 = as_param_vector(x0)
    zeros = np.zeros(config.n)
    return TunerState(
        delta=np.zeros_like(x0),
        x_ref=x0.copy(),
        x=x0.copy(),
        m=zeros.copy(),
        v=zeros.copy(),
        r=zeros.copy(),
        s=zeros.copy(),
    )


def tuner_step(state: TunerState, g, u, config: TunerConfig = TunerConfig()) -> tuple[TunerState, Array]:
    """Fold gradient ``g`` (taken at ``state.x``) and BASE update ``u`` into the state.

    Returns the new state and the next iterate.
    """
    g = np.asarray(g, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if g.shape != state.x.shape or u.shape != state.x.shape:
        raise DimensionError(
            f"gradient {g.shape} and update {u.shape} must match model {state.x.shape}"
        )
    betas = np.asarray(config.betas)

    x_norm = max(float(np.linalg.norm(state.x)), config.eps)
    with np.errstate(invalid="ignore", over="ignore"):
        h = float(state.delta @ g) + config.lam * float(np.linalg.norm(g)) / x_norm
    if not math.isfinite(h):
        raise NumericalError(
            f"non-finite correlation h={h} at step {state.t + 1} "
            f"(|g|={np.linalg.norm(g):.3g}, |delta|={np.linalg.norm(state.delta):.3g})"
        )
    delta = state.delta + u

    m = np.maximum(betas * state.m, h)
    v = betas**2 * state.v + h * h
    r = np.maximum(0.0, betas * state.r - state.s * h)
    w = config.s_init * m / config.n + r
    s = w / (np.sqrt(v) + config.eps)

    x_next = state.x_ref + float(np.sum(s)) * delta
    new = replace(state, delta=delta, x=x_next, m=m, v=v, r=r, s=s, t=state.t + 1)
    return new, x_next.copy()


class BaseOptimizer(Protocol):
    """Anything mapping a gradient at step ``t`` to a parameter update."""

    def rate(self, t: float) -> float: ...

    def update(self, g: Array, t: float) -> Array: ...


@dataclass
class Sgd:
    schedule: ExpDecaySchedule | ConstantSchedule = field(default_factory=ExpDecaySchedule)

    def rate(self, t: float) -> float:
        return self.schedule(t)

    def update(self, g: Array, t: float) -> Array:
        return -self.schedule(t) * np.asarray(g, dtype=np.float64)


# --- training loop ---

MethodKind = Literal["fixed", "exp_decay", "adaptive", "tuner"]


@dataclass(frozen=True)
class Method:
    """How to pick the step.

    ``fixed`` uses ``alpha0`` throughout, ``exp_decay`` decays it with
    ``beta``, ``adaptive`` uses ``1 / (1 + ||g||)`` and ``tuner`` wraps SGD on
    the exponential-decay schedule.
    """

    kind: MethodKind = "exp_decay"
    alpha0: float = 0.1
    beta: float = 0.01
    tuner: TunerConfig = TunerConfig()

    def __post_init__(self):
        if self.kind not in ("fixed", "exp_decay", "adaptive", "tuner"):
            raise ParameterError(f"unknown method {self.kind!r}")

    def schedule(self):
        if self.kind == "fixed":
            return ConstantSchedule(self.alpha0)
        return ExpDecaySchedule(self.alpha0, self.beta)


def _lyapunov(rate: float, g: Array) -> float:
    # a zero step (tuner before its scale warms up) has zero instantaneous decrease
    if rate == 0.0:
        return 0.0
    return -rate * float(g @ g)


def run_training(
    obj: Objective,
    method: Method,
    steps: int,
    x0,
    base: BaseOptimizer | None = None,
    record_x: bool = True,
    divergence_loss: float = DIVERGENCE_LOSS,
) -> Trajectory:
    """Run ``steps`` updates from ``x0`` and return ``steps + 1`` records.

    Divergence (non-finite values or loss above ``divergence_loss``) stops
    the run early; the trajectory keeps every record up to and including the
    offending one and carries status ``"diverged"``.

    For the tuner the recorded rate is the current scale times the BASE rate.
    """
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    x = as_param_vector(x0, obj.dim)
    traj = Trajectory()
    schedule = method.schedule()
    state = None
    if method.kind == "tuner":
        base = base or Sgd(schedule)
        state = tuner_init(x, method.tuner)

    for k in range(steps + 1):
        loss, g = obj.value_and_grad(x, t=float(k))
        gnorm = float(np.linalg.norm(g))
        if method.kind == "adaptive":
            rate = grad_adaptive_rate(g) if math.isfinite(gnorm) else 0.0
        elif method.kind == "tuner":
            rate = state.scale * base.rate(float(k))
        else:
            rate = schedule(float(k))
        finite = math.isfinite(loss) and math.isfinite(gnorm)
        traj.append(
            StepRecord(
                t=k,
                loss=loss,
                grad_norm=gnorm,
                rate=rate,
                lyapunov_rate=_lyapunov(rate, g) if finite else float("nan"),
                x=x.copy() if record_x else None,
            )
        )
        if not finite or loss > divergence_loss:
            traj.status = "diverged"
            traj.message = f"loss={loss:.6g} |g|={gnorm:.6g} at step {k}"
            logger.warning("run diverged: %s", traj.message)
            break
        if k == steps:
            break
        if method.kind == "tuner":
            try:
                state, x = tuner_step(state, g, base.update(g, float(k)), method.tuner)
            except NumericalError as exc:
                traj.status = "diverged"
                traj.message = str(exc)
                break
        else:
            x = gd_step(x, g, rate)
        if not np.all(np.isfinite(x)):
            # record the blown-up iterate so the cause is visible
            traj.append(
                StepRecord(k + 1, float("inf"), float("inf"), 0.0, float("nan"), x.copy() if record_x else None)
            )
            traj.status = "diverged"
            traj.message = f"non-finite iterate after step {k}"
            break
    return traj
