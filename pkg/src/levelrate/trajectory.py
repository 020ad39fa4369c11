"""Per-step training records and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

BASE_COLUMNS = ("t", "loss", "grad_norm", "rate", "lyapunov_rate")


def fmt(value: float) -> str:
    # 17 significant digits round-trip every float64 exactly
    return format(float(value), ".17g")


@dataclass
class StepRecord:
    t: int
    loss: float
    grad_norm: float
    rate: float
    lyapunov_rate: float
    x: np.ndarray | None = None


@dataclass
class Trajectory:
    records: list[StepRecord] = field(default_factory=list)
    status: str = "completed"
    message: str = ""

    def append(self, record: StepRecord):
        if self.records and record.t <= self.records[-1].t:
            raise ValueError("trajectory steps must be strictly increasing")
        if not self.records and record.t != 0:
            raise ValueError("trajectory must start at t = 0")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i) -> StepRecord:
        return self.records[i]

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def has_snapshots(self) -> bool:
        return bool(self.records) and all(r.x is not None for r in self.records)

    @property
    def xs(self) -> np.ndarray:
        if not self.has_snapshots:
            raise DataError("trajectory has no parameter snapshots")
        return np.stack([r.x for r in self.records])

    def to_csv(self) -> str:
        dim = len(self.records[0].x) if self.has_snapshots else 0
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(BASE_COLUMNS) + [f"x{i}" for i in range(dim)])
        for r in self.records:
            row = [str(r.t), fmt(r.loss), fmt(r.grad_norm), fmt(r.rate), fmt(r.lyapunov_rate)]
            if dim:
                row += [fmt(v) for v in r.x]
            writer.writerow(row)
        return buf.getvalue()

    def write_csv(self, path: str | Path):
        Path(path).write_text(self.to_csv(), encoding="utf-8")

    @classmethod
    def from_csv(cls, text: str, status: str = "completed") -> Trajectory:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0][:5]) != BASE_COLUMNS:
            raise DataError("not a trajectory CSV")
        dim = len(rows[0]) - len(BASE_COLUMNS)
        traj = cls(status=status)
        for row in rows[1:]:
            x = np.array([float(v) for v in row[5:]]) if dim else None
            traj.append(
                StepRecord(int(row[0]), float(row[1]), float(row[2]), float(row[3]), float(row[4]), x)
            )
        return traj

    @classmethod
    def read_csv(cls, path: str | Path, status: str = "completed") -> Trajectory:
        return cls.from_csv(Path(path).read_text(encoding="utf-8"), status)
