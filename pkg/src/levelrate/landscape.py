"""Test objectives with analytic gradients, a one-hidden-layer MLP and a
central-difference gradient oracle.

Every objective is a pure function of a float64 parameter vector. Objectives
carry an axis-aligned evaluation box so grid samplers and the finite-difference
oracle know where they are allowed to probe.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import DataError, DimensionError, InputDomainError, ParameterError
from .loss import log_softmax, softmax

Array = npt.NDArray[np.float64]
ValueAndGrad = Callable[[Array], tuple[float, Array]]

DEFAULT_BOX = (-6.0, 6.0)


def as_param_vector(x, dim: int | None = None) -> Array:
    """Coerce ``x`` to a finite 1-D float64 array (copy)."""
    arr = np.array(x, dtype=np.float64).reshape(-1)
    if arr.size < 1:
        raise DimensionError("parameter vector must have length >= 1")
    if not np.all(np.isfinite(arr)):
        raise InputDomainError(f"parameter vector has non-finite entries: {arr}")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.size}")
    return arr


@dataclass(frozen=True)
class Objective:
    """A named scalar field with an analytic gradient.

    ``fn`` returns ``(value, gradient)``. ``batch`` optionally evaluates the
    value only on an ``(k, dim)`` array of points, which makes dense grid
    sampling cheap. ``timed`` optionally provides a time-dependent variant
    ``(x, t) -> (value, gradient)`` used by the dynamic cost.
    """

    name: str
    dim: int
    lo: Array
    hi: Array
    fn: ValueAndGrad
    batch: Callable[[Array], Array] | None = None
    timed: Callable[[Array, float], tuple[float, Array]] | None = field(
        default=None, compare=False
    )

    def value_and_grad(self, x, t: float | None = None) -> tuple[float, Array]:
        x = as_param_vector(x, self.dim)
        if self.timed is not None and t is not None:
            value, grad = self.timed(x, t)
        else:
            value, grad = self.fn(x)
        return float(value), np.asarray(grad, dtype=np.float64)

    def __call__(self, x, t: float | None = None) -> float:
        return self.value_and_grad(x, t)[0]

    def grad(self, x, t: float | None = None) -> Array:
        return self.value_and_grad(x, t)[1]

    def values(self, points: Array) -> Array:
        """Evaluate at each row of ``points``."""
        points = np.asarray(points, dtype=np.float64)
        if self.batch is not None:
            return np.asarray(self.batch(points), dtype=np.float64)
        return np.array([self.fn(p)[0] for p in points], dtype=np.float64)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


def _box(dim: int, lo: float = DEFAULT_BOX[0], hi: float = DEFAULT_BOX[1]):
    return np.full(dim, lo, dtype=np.float64), np.full(dim, hi, dtype=np.float64)


# --- analytic fixtures ---


def eval_quadratic(x) -> tuple[float, Array]:
    """``0.5 * ||x||^2`` and its gradient ``x``."""
    x = as_param_vector(x)
    return 0.5 * float(x @ x), x.copy()


def eval_rosenbrock(x) -> tuple[float, Array]:
    x = as_param_vector(x, 2)
    a, b = x
    value = (1.0 - a) ** 2 + 100.0 * (b - a * a) ** 2
    grad = np.array([-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)])
    return float(value), grad


def eval_himmelblau(x) -> tuple[float, Array]:
    x = as_param_vector(x, 2)
    a, b = x
    p = a * a + b - 11.0
    q = a + b * b - 7.0
    value = p * p + q * q
    grad = np.array([4.0 * a * p + 2.0 * q, 2.0 * p + 4.0 * b * q])
    return float(value), grad


def _quadratic_batch(points: Array) -> Array:
    return 0.5 * np.sum(points * points, axis=-1)


def _rosenbrock_batch(points: Array) -> Array:
    a, b = points[..., 0], points[..., 1]
    return (1.0 - a) ** 2 + 100.0 * (b - a * a) ** 2


def _himmelblau_batch(points: Array) -> Array:
    a, b = points[..., 0], points[..., 1]
    return (a * a + b - 11.0) ** 2 + (a + b * b - 7.0) ** 2


def quadratic(dim: int = 2) -> Objective:
    lo, hi = _box(dim)
    return Objective("quadratic", dim, lo, hi, eval_quadratic, _quadratic_batch)


def rosenbrock() -> Objective:
    lo, hi = _box(2)
    return Objective("rosenbrock", 2, lo, hi, eval_rosenbrock, _rosenbrock_batch)


def himmelblau() -> Objective:
    lo, hi = _box(2)
    return Objective("himmelblau", 2, lo, hi, eval_himmelblau, _himmelblau_batch)


ANALYTIC_OBJECTIVES: dict[str, Callable[..., Objective]] = {
    "quadratic": quadratic,
    "rosenbrock": rosenbrock,
    "himmelblau": himmelblau,
}


def get_objective(name: str, **params) -> Objective:
    try:
        factory = ANALYTIC_OBJECTIVES[name]
    except KeyError:
        raise ParameterError(
            f"unknown objective {name!r}; choose from {sorted(ANALYTIC_OBJECTIVES)}"
        ) from None
    return factory(**params)


def finite_diff_grad(obj, x, h: float = 1e-6) -> Array:
    """Central-difference gradient of ``obj`` at ``x``.

    ``obj`` is an :class:`Objective` or any callable returning a scalar.
    Probes outside an objective's box raise ``InputDomainError``.
    """
    if not h > 0:
        raise ParameterError(f"step h must be positive, got {h}")
    x = as_param_vector(x)
    if isinstance(obj, Objective):
        if x.size != obj.dim:
            raise DimensionError(f"expected dimension {obj.dim}, got {x.size}")
        if not (np.all(x - h >= obj.lo) and np.all(x + h <= obj.hi)):
            raise InputDomainError(f"x +/- h leaves the domain of {obj.name}")
        f = lambda p: obj.fn(p)[0]  # noqa: E731
    else:
        f = obj
    grad = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (float(f(xp)) - float(f(xm))) / (2.0 * h)
    return grad


# --- dataset and MLP ---


@dataclass(frozen=True)
class Dataset:
    """Labeled samples: ``features`` is ``(n, d)``, ``labels`` ints in ``[0, n_classes)``."""

    features: Array
    labels: npt.NDArray[np.int64]
    n_classes: int

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2 or X.shape[0] == 0:
            raise DataError("features must be a non-empty (n, d) array")
        if y.shape != (X.shape[0],):
            raise DataError("labels must have one entry per sample")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise DataError(f"labels must lie in [0, {self.n_classes})")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(np.int64))

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> Array:
        return np.bincount(self.labels, minlength=self.n_classes)


@dataclass(frozen=True)
class MlpParams:
    """Unflattened weights of a one-hidden-layer network.

    Flat layout (row-major): ``W1`` (hidden x input), ``b1`` (hidden),
    ``W2`` (classes x hidden), ``b2`` (classes).
    """

    W1: Array
    b1: Array
    W2: Array
    b2: Array

    def flatten(self) -> Array:
        return np.concatenate(
            [self.W1.ravel(), self.b1.ravel(), self.W2.ravel(), self.b2.ravel()]
        ).astype(np.float64)


@dataclass(frozen=True)
class Mlp:
    """One hidden ReLU layer followed by a softmax output.

    The ReLU subgradient at 0 is taken to be 0.
    """

    n_inputs: int
    n_hidden: int
    n_classes: int

    @property
    def size(self) -> int:
        h, d, c = self.n_hidden, self.n_inputs, self.n_classes
        return h * d + h + c * h + c

    def unflatten(self, theta) -> MlpParams:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.size,):
            raise DimensionError(f"expected {self.size} parameters, got {theta.shape}")
        h, d, c = self.n_hidden, self.n_inputs, self.n_classes
        i = 0
        W1 = theta[i : i + h * d].reshape(h, d)
        i += h * d
        b1 = theta[i : i + h]
        i += h
        W2 = theta[i : i + c * h].reshape(c, h)
        i += c * h
        b2 = theta[i : i + c]
        return MlpParams(W1, b1, W2, b2)

    def init_params(self, rng: np.random.Generator, scale: float = 0.5) -> Array:
        return scale * rng.standard_normal(self.size)

    def _forward(self, theta, X):
        p = self.unflatten(theta)
        pre = X @ p.W1.T + p.b1
        hidden = np.maximum(pre, 0.0)
        logits = hidden @ p.W2.T + p.b2
        return p, pre, hidden, logits

    def logits(self, theta, X) -> Array:
        return self._forward(theta, np.asarray(X, dtype=np.float64))[3]

    def _check(self, data: Dataset):
        if len(data) == 0:
            raise DataError("batch is empty")
        if data.n_features != self.n_inputs:
            raise DimensionError(
                f"model expects {self.n_inputs} features, data has {data.n_features}"
            )
        if data.labels.min() < 0 or data.labels.max() >= self.n_classes:
            raise DataError(f"labels must lie in [0, {self.n_classes})")

    def per_sample_losses(self, theta, data: Dataset) -> Array:
        """Cross-entropy of each sample."""
        self._check(data)
        logp = log_softmax(self.logits(theta, data.features))
        return -logp[np.arange(len(data)), data.labels]

    def weighted_loss_and_grad(
        self, theta, data: Dataset, sample_weights: Array
    ) -> tuple[float, Array]:
        """``sum_i c_i * CE_i`` and its gradient by backpropagation."""
        self._check(data)
        c = np.asarray(sample_weights, dtype=np.float64)
        X, y = data.features, data.labels
        p, pre, hidden, logits = self._forward(theta, X)
        n = len(data)
        logp = log_softmax(logits)
        loss = float(-np.sum(c * logp[np.arange(n), y]))

        d_logits = softmax(logits)
        d_logits[np.arange(n), y] -= 1.0
        d_logits *= c[:, None]
        dW2 = d_logits.T @ hidden
        db2 = d_logits.sum(axis=0)
        d_pre = (d_logits @ p.W2) * (pre > 0.0)
        dW1 = d_pre.T @ X
        db1 = d_pre.sum(axis=0)
        return loss, MlpParams(dW1, db1, dW2, db2).flatten()

    def loss_and_grad(self, theta, data: Dataset) -> tuple[float, Array]:
        """Mean cross-entropy over the batch and its gradient."""
        n = len(data)
        return self.weighted_loss_and_grad(theta, data, np.full(n, 1.0 / n))


def mlp_loss_and_grad(params, data: Dataset, model: Mlp) -> tuple[float, Array]:
    """Mean cross-entropy of ``model`` at ``params`` (flat or :class:`MlpParams`)."""
    if isinstance(params, MlpParams):
        params = params.flatten()
    return model.loss_and_grad(as_param_vector(params, model.size), data)


def mlp_objective(model: Mlp, data: Dataset, name: str = "mlp") -> Objective:
    """Mean cross-entropy of ``model`` on ``data`` as an unbounded Objective."""
    lo = np.full(model.size, -np.inf)
    hi = np.full(model.size, np.inf)
    return Objective(name, model.size, lo, hi, lambda th: model.loss_and_grad(th, data))


def slice_objective(base: Objective, anchor, axes: tuple[int, int], box=DEFAULT_BOX) -> Objective:
    """Restrict ``base`` to a 2-D plane through ``anchor`` along two coordinates."""
    anchor = as_param_vector(anchor, base.dim)
    i, j = axes
    if i == j:
        raise ParameterError("slice axes must differ")

    def embed(p):
        full = anchor.copy()
        full[i], full[j] = p[0], p[1]
        return full

    def fn(p):
        value, grad = base.fn(embed(p))
        return value, np.array([grad[i], grad[j]])

    def timed(p, t):
        value, grad = base.timed(embed(p), t)
        return value, np.array([grad[i], grad[j]])

    lo, hi = _box(2, *box)
    return Objective(
        f"{base.name}[{i},{j}]",
        2,
        lo,
        hi,
        fn,
        timed=timed if base.timed is not None else None,
    )


def risk_objective(model: Mlp, data: Dataset, config, name: str = "mlp_risk") -> Objective:
    """Regularized risk of ``model`` on ``data``; its timed form is the dynamic cost."""
    from .loss import dynamic_cost, regularized_risk_and_grad

    lo = np.full(model.size, -np.inf)
    hi = np.full(model.size, np.inf)
    return Objective(
        name,
        model.size,
        lo,
        hi,
        lambda th: regularized_risk_and_grad(th, data, config, model),
        timed=lambda th, t: dynamic_cost(th, data, t, config, model),
    )
