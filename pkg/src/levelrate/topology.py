"""Connectivity of super- and sublevel sets of sampled 2-D landscapes.

Fields are sampled at cell centers of a rectangular grid; a level set becomes
a boolean mask and its components are counted with union-find. Cells whose
value equals the threshold belong to both the super- and the sublevel mask.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Literal

import numba
import numpy as np
import numpy.typing as npt

from .errors import DimensionError, ParameterError, SamplingError
from .landscape import Objective
from .loss import temporal_modulation
from .trajectory import fmt

Array = npt.NDArray[np.float64]
Direction = Literal["super", "sub"]


@numba.njit(cache=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@numba.njit(cache=True)
def _union(parent, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        # smaller root index wins so labels follow raster order
        if ra < rb:
            parent[rb] = ra
        else:
            parent[ra] = rb


@numba.njit(cache=True)
def _label(mask, eight):
    nx, ny = mask.shape
    parent = np.arange(nx * ny)
    for i in range(nx):
        for j in range(ny):
            if not mask[i, j]:
                continue
            k = i * ny + j
            # only look back at neighbours already visited in raster order
            if j > 0 and mask[i, j - 1]:
                _union(parent, k, k - 1)
            if i > 0:
                if mask[i - 1, j]:
                    _union(parent, k, k - ny)
                if eight:
                    if j > 0 and mask[i - 1, j - 1]:
                        _union(parent, k, k - ny - 1)
                    if j < ny - 1 and mask[i - 1, j + 1]:
                        _union(parent, k, k - ny + 1)
    labels = np.zeros((nx, ny), dtype=np.int32)
    root_label = np.zeros(nx * ny, dtype=np.int32)
    count = 0
    for i in range(nx):
        for j in range(ny):
            if mask[i, j]:
                r = _find(parent, i * ny + j)
                if root_label[r] == 0:
                    count += 1
                    root_label[r] = count
                labels[i, j] = root_label[r]
    return count, labels


def connected_components(mask, adjacency: int = 8) -> tuple[int, npt.NDArray[np.int32]]:
    """Count and label the true cells of ``mask``.

    Labels run ``1..count`` in raster order of each component's first cell;
    false cells get 0.
    """
    if adjacency not in (4, 8):
        raise ParameterError(f"adjacency must be 4 or 8, got {adjacency}")
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    if mask.ndim != 2:
        raise DimensionError("mask must be 2-D")
    count, labels = _label(mask, adjacency == 8)
    return int(count), labels


@dataclass(frozen=True)
class GridField:
    """Values of a scalar field at the cell centers of a box.

    ``values[i, j]`` is the field at ``(xs[i], ys[j])``.
    """

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    values: Array

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or min(v.shape) < 2:
            raise DimensionError("grid needs at least 2 cells per axis")
        if not np.all(np.isfinite(v)):
            raise SamplingError("grid values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def xs(self) -> Array:
        return cell_centers(*self.x_range, self.shape[0])

    @property
    def ys(self) -> Array:
        return cell_centers(*self.y_range, self.shape[1])

    def scaled(self, c: float) -> GridField:
        return GridField(self.x_range, self.y_range, c * self.values)

    def boundary_min(self) -> float:
        v = self.values
        return float(min(v[0].min(), v[-1].min(), v[:, 0].min(), v[:, -1].min()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "y", "value"])
        xs, ys = self.xs, self.ys
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                writer.writerow([fmt(x), fmt(y), fmt(self.values[i, j])])
        return buf.getvalue()


def cell_centers(lo: float, hi: float, n: int) -> Array:
    # centred on the midpoint so symmetric boxes give exactly mirrored centers
    width = (hi - lo) / n
    return 0.5 * (lo + hi) + (np.arange(n) - 0.5 * (n - 1)) * width


def _ranges(box) -> tuple[tuple[float, float], tuple[float, float]]:
    box = np.asarray(box, dtype=np.float64)
    if box.shape == (2,):
        box = np.stack([box, box])
    if box.shape != (2, 2):
        raise DimensionError("box must be (lo, hi) or ((xlo, xhi), (ylo, yhi))")
    (xlo, xhi), (ylo, yhi) = box
    if not (xlo < xhi and ylo < yhi):
        raise ParameterError(f"degenerate box {box.tolist()}")
    return (float(xlo), float(xhi)), (float(ylo), float(yhi))


def sample_grid(obj: Objective, box, nx: int, ny: int, t: float | None = None) -> GridField:
    """Evaluate a 2-D objective at every cell center.

    With ``t`` given and ``obj.timed`` set, the time-dependent variant is
    sampled instead.
    """
    if obj.dim != 2:
        raise DimensionError(f"{obj.name} has dimension {obj.dim}; sample a 2-D slice")
    if nx < 2 or ny < 2:
        raise ParameterError("grid resolution must be >= 2 per axis")
    xr, yr = _ranges(box)
    gx, gy = np.meshgrid(cell_centers(*xr, nx), cell_centers(*yr, ny), indexing="ij")
    points = np.stack([gx.ravel(), gy.ravel()], axis=1)
    if t is not None and obj.timed is not None:
        values = np.array([obj.timed(p, t)[0] for p in points], dtype=np.float64)
    else:
        with np.errstate(all="ignore"):
            values = obj.values(points)
    values = values.reshape(nx, ny)
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        cells = ", ".join(f"({i},{j})" for i, j in bad[:10])
        raise SamplingError(f"non-finite {obj.name} values at cells {cells} ({len(bad)} total)")
    return GridField(xr, yr, values)


def threshold_mask(field: GridField, lam: float, direction: Direction = "super") -> npt.NDArray[np.bool_]:
    if direction == "super":
        return field.values >= lam
    if direction == "sub":
        return field.values <= lam
    raise ParameterError(f"direction must be 'super' or 'sub', got {direction!r}")


@dataclass
class LevelEntry:
    lam: float
    direction: str
    component_count: int
    connected: bool
    occupied_fraction: float


@dataclass
class ConnectivityReport:
    entries: list[LevelEntry] = field(default_factory=list)
    adjacency: int = 8

    @property
    def all_connected(self) -> bool:
        return all(e.connected for e in self.entries)

    def counts(self) -> list[int]:
        return [e.component_count for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "adjacency": self.adjacency,
            "all_connected": self.all_connected,
            "entries": [asdict(e) for e in self.entries],
        }


def level_entry(field: GridField, lam: float, direction: Direction, adjacency: int = 8) -> LevelEntry:
    mask = threshold_mask(field, lam, direction)
    count, _ = connected_components(mask, adjacency)
    return LevelEntry(float(lam), direction, count, count <= 1, float(mask.mean()))


def lambda_sweep(field: GridField, lambdas, direction: Direction = "super", adjacency: int = 8) -> ConnectivityReport:
    lambdas = sorted(float(v) for v in lambdas)
    if not lambdas:
        raise ParameterError("lambda list is empty")
    report = ConnectivityReport(adjacency=adjacency)
    for lam in lambdas:
        report.entries.append(level_entry(field, lam, direction, adjacency))
    return report


def lambda_ladder(field: GridField, count: int, clip_to_boundary: bool = True) -> Array:
    """``count`` thresholds at interior points of the field's value range.

    With ``clip_to_boundary`` the range ends at the smallest value on the
    grid's outer ring. Above that level the box cuts through the level set
    and its components reflect the box, not the field.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    lo = float(field.values.min())
    hi = field.boundary_min() if clip_to_boundary else float(field.values.max())
    return lo + (hi - lo) * (np.arange(count) + 0.5) / count


@dataclass
class EquiMismatch:
    t: float
    lam: float
    dynamic_count: int
    scaled_count: int


@dataclass
class EquiconnectednessReport:
    direction: str
    adjacency: int
    gammas: dict[float, float] = field(default_factory=dict)
    checks: int = 0
    counts: list[dict] = field(default_factory=list)
    mismatches: list[EquiMismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "adjacency": self.adjacency,
            "gammas": {str(k): v for k, v in self.gammas.items()},
            "checks": self.checks,
            "counts": self.counts,
            "mismatches": [asdict(m) for m in self.mismatches],
            "ok": self.ok,
        }


def equiconnectedness_check(
    obj_reg: Objective,
    kappa: float,
    delta: float,
    t_list,
    lambdas,
    box,
    nx: int = 101,
    ny: int = 101,
    direction: Direction = "super",
    adjacency: int = 8,
) -> EquiconnectednessReport:
    """Compare component counts of the time-modulated cost at ``lambda`` with
    those of the unmodulated cost at ``lambda / gamma(t)``.

    When ``obj_reg.timed`` is set the modulated field is sampled from it
    directly; otherwise it is ``gamma(t)`` times the base field.
    """
    t_list = [float(t) for t in t_list]
    lambdas = [float(v) for v in lambdas]
    if not t_list or not lambdas:
        raise ParameterError("t_list and lambdas must be non-empty")
    base = sample_grid(obj_reg, box, nx, ny)
    report = EquiconnectednessReport(direction, adjacency)
    for t in t_list:
        gamma = temporal_modulation(t, kappa, delta)
        report.gammas[t] = gamma
        if obj_reg.timed is not None:
            dynamic = sample_grid(obj_reg, box, nx, ny, t=t)
        else:
            dynamic = base.scaled(gamma)
        for lam in lambdas:
            dyn = level_entry(dynamic, lam, direction, adjacency).component_count
            ref = level_entry(base, lam / gamma, direction, adjacency).component_count
            report.checks += 1
            report.counts.append({"t": t, "lam": lam, "dynamic": dyn, "scaled": ref})
            if dyn != ref:
                report.mismatches.append(EquiMismatch(t, lam, dyn, ref))
    return report
