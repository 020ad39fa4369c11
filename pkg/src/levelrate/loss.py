"""Probabilistic loss stack: softmax likelihood, negative log-posterior,
class-weighted / robust / regularized risks and the time-modulated cost.

Risks take a ``model`` exposing ``per_sample_losses(theta, data)`` and
``weighted_loss_and_grad(theta, data, sample_weights)``; see
:class:`levelrate.landscape.Mlp`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np
import numpy.typing as npt

from .errors import ConfigError, DataError, DimensionError, InputDomainError

if TYPE_CHECKING:
    from .landscape import Dataset, Mlp

Array = npt.NDArray[np.float64]


def _logits(z) -> Array:
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0 or z.shape[-1] == 0:
        raise DimensionError("logits must be non-empty")
    if not np.all(np.isfinite(z)):
        raise InputDomainError("logits must be finite")
    return z


def softmax(z) -> Array:
    """Softmax along the last axis, max-shifted so large logits cannot overflow."""
    z = _logits(z)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z) -> Array:
    z = _logits(z)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _check_labels(labels, n_classes: int) -> npt.NDArray[np.int64]:
    y = np.asarray(labels)
    if y.size and (not np.issubdtype(y.dtype, np.integer) or y.min() < 0 or y.max() >= n_classes):
        raise DataError(f"labels must be integers in [0, {n_classes})")
    return y.astype(np.int64)


def cross_entropy(logits, labels) -> float:
    """Mean negative log-likelihood of ``labels`` under ``softmax(logits)``.

    ``logits`` is ``(n, C)``. The mean (not the sum) keeps the loss scale-free
    in the batch size.
    """
    z = np.atleast_2d(_logits(logits))
    y = _check_labels(np.atleast_1d(labels), z.shape[-1])
    if y.shape[0] != z.shape[0]:
        raise DimensionError("one label per row of logits required")
    logp = log_softmax(z)
    return float(-np.mean(logp[np.arange(y.size), y]))


def ce_grad_logits(probs, label: int) -> Array:
    """Gradient of ``-log p[label]`` with respect to the logits: ``p - onehot``."""
    p = np.array(probs, dtype=np.float64)
    if not 0 <= int(label) < p.size or int(label) != label:
        raise DataError(f"label {label} out of range for {p.size} classes")
    p[int(label)] -= 1.0
    return p


@dataclass(frozen=True)
class PriorSpec:
    kind: Literal["none", "gaussian"] = "none"
    precision: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian"):
            raise ConfigError(f"unknown prior kind {self.kind!r}")
        if not self.precision >= 0:
            raise ConfigError("prior precision must be >= 0")


def neg_log_posterior(theta, data: Dataset, prior: PriorSpec, model: Mlp) -> tuple[float, Array]:
    """Mean NLL plus ``precision/2 * ||theta||^2`` for a Gaussian prior.

    The prior's normalising constant is dropped.
    """
    theta = np.asarray(theta, dtype=np.float64)
    value, grad = model.loss_and_grad(theta, data)
    if prior.kind == "gaussian" and prior.precision > 0:
        value += 0.5 * prior.precision * float(theta @ theta)
        grad = grad + prior.precision * theta
    return value, grad


@dataclass(frozen=True)
class RiskConfig:
    """Weights and modulation for the dynamic cost.

    ``class_weights`` is indexed by class; ``rho`` holds one confidence in
    ``[0, 1]`` per sample, ``None`` meaning all ones.
    """

    class_weights: tuple[float, ...]
    rho: tuple[float, ...] | None = None
    reg_kind: Literal["L1", "L2"] = "L2"
    reg_strength: float = 0.0
    kappa: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        w = tuple(float(v) for v in self.class_weights)
        if not w or not all(math.isfinite(v) and v > 0 for v in w):
            raise ConfigError("class weights must be positive and finite")
        object.__setattr__(self, "class_weights", w)
        if self.rho is not None:
            rho = np.asarray(self.rho, dtype=np.float64).reshape(-1)
            _check_rho(rho)
            object.__setattr__(self, "rho", tuple(rho.tolist()))
        if self.reg_kind not in ("L1", "L2"):
            raise ConfigError(f"reg_kind must be 'L1' or 'L2', got {self.reg_kind!r}")
        if not self.reg_strength >= 0:
            raise ConfigError("reg_strength must be >= 0")
        if not self.kappa >= 0:
            raise ConfigError("kappa must be >= 0")
        if not self.delta > 0:
            raise ConfigError("delta must be > 0")

    def sample_rho(self, n: int) -> Array:
        if self.rho is None:
            return np.ones(n)
        if len(self.rho) != n:
            raise ConfigError(f"rho has {len(self.rho)} entries for {n} samples")
        return np.asarray(self.rho, dtype=np.float64)


def _check_rho(rho: Array):
    if not np.all((rho >= 0.0) & (rho <= 1.0)):
        raise ConfigError("robustness values must lie in [0, 1]")


def _class_weight_per_sample(labels, class_weights) -> Array:
    w = np.asarray(class_weights, dtype=np.float64)
    if labels.size and labels.max() >= w.size:
        raise ConfigError(f"no class weight for class {int(labels.max())}")
    if np.any(w <= 0):
        raise ConfigError("class weights must be positive")
    return w[labels]


def inverse_frequency_weights(labels, n_classes: int) -> Array:
    """``N / (C * count_c)``; classes absent from ``labels`` get weight 1."""
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=n_classes).astype(np.float64)
    w = np.ones(n_classes)
    seen = counts > 0
    w[seen] = labels.size / (n_classes * counts[seen])
    return w


def risk_sample_weights(data: Dataset, class_weights, rho=None) -> Array:
    """Per-sample coefficients ``rho_i * w_{y_i} / N`` of the robust risk."""
    n = len(data)
    w = _class_weight_per_sample(data.labels, class_weights)
    if rho is None:
        rho = np.ones(n)
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != (n,):
        raise ConfigError(f"rho needs {n} entries, got {rho.shape}")
    _check_rho(rho)
    return rho * w / n


def class_weighted_risk(theta, data: Dataset, class_weights, model: Mlp) -> float:
    """``(1/N) sum_i w_{y_i} L_i``."""
    c = risk_sample_weights(data, class_weights)
    return float(np.sum(c * model.per_sample_losses(theta, data)))


def robust_risk(theta, data: Dataset, class_weights, rho, model: Mlp) -> float:
    """``(1/N) sum_i rho_i w_{y_i} L_i``."""
    c = risk_sample_weights(data, class_weights, rho)
    return float(np.sum(c * model.per_sample_losses(theta, data)))


def regularizer(theta, kind: str, strength: float) -> tuple[float, Array]:
    """L1 (``strength * sum|theta|``, subgradient 0 at 0) or L2 (``strength/2 * ||theta||^2``)."""
    if not strength >= 0:
        raise ConfigError(f"regularization strength must be >= 0, got {strength}")
    theta = np.asarray(theta, dtype=np.float64)
    if kind == "L1":
        return strength * float(np.sum(np.abs(theta))), strength * np.sign(theta)
    if kind == "L2":
        return 0.5 * strength * float(theta @ theta), strength * theta
    raise ConfigError(f"reg kind must be 'L1' or 'L2', got {kind!r}")


def regularized_risk_and_grad(theta, data: Dataset, config: RiskConfig, model: Mlp) -> tuple[float, Array]:
    theta = np.asarray(theta, dtype=np.float64)
    c = risk_sample_weights(data, config.class_weights, config.sample_rho(len(data)))
    risk, grad = model.weighted_loss_and_grad(theta, data, c)
    penalty, penalty_grad = regularizer(theta, config.reg_kind, config.reg_strength)
    return risk + penalty, grad + penalty_grad


def regularized_risk(theta, data: Dataset, config: RiskConfig, model: Mlp) -> float:
    return regularized_risk_and_grad(theta, data, config, model)[0]


def temporal_modulation(t: float, kappa: float, delta: float) -> float:
    """``1 + kappa * exp(-delta * t)``."""
    if not delta > 0:
        raise ConfigError(f"delta must be > 0, got {delta}")
    if not kappa >= 0:
        raise ConfigError(f"kappa must be >= 0, got {kappa}")
    return 1.0 + kappa * math.exp(-delta * t)


def dynamic_cost(theta, data: Dataset, t: float, config: RiskConfig, model: Mlp) -> tuple[float, Array]:
    """Regularized risk scaled by the temporal modulation factor at time ``t``."""
    gamma = temporal_modulation(t, config.kappa, config.delta)
    value, grad = regularized_risk_and_grad(theta, data, config, model)
    return gamma * value, gamma * grad
