"""Dataset ingestion: CSV files and a seeded imbalanced generator."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..landscape import Dataset

logger = logging.getLogger(__name__)


def load_dataset(path: str | Path) -> Dataset:
    """Read a CSV with a header row, feature columns, then an integer ``label`` column.

    Labels must be class indices ``0..C-1``; ``C`` is one more than the
    largest label seen.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [(n, r) for n, r in enumerate(rows, start=1) if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    _, header = rows[0]
    header = [h.strip() for h in header]
    if len(header) < 2 or header[-1] != "label":
        raise DataError(f"{path}:1: header must list feature columns then 'label'")
    if len(rows) == 1:
        raise DataError(f"{path}: no data rows")

    features, labels = [], []
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            x = [float(v) for v in row[:-1]]
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric feature in {row[:-1]}") from None
        if not all(np.isfinite(x)):
            raise DataError(f"{path}:{lineno}: non-finite feature")
        try:
            y = int(row[-1].strip())
        except ValueError:
            raise DataError(f"{path}:{lineno}: label {row[-1]!r} is not an integer") from None
        if y < 0:
            raise DataError(f"{path}:{lineno}: negative label {y}")
        features.append(x)
        labels.append(y)

    labels = np.array(labels, dtype=np.int64)
    data = Dataset(np.array(features), labels, int(labels.max()) + 1)
    logger.info(
        "loaded %s: %d rows, class histogram %s", path, len(data), class_histogram(data)
    )
    return data


def class_histogram(data: Dataset) -> dict[int, int]:
    return {c: int(n) for c, n in enumerate(data.class_counts())}


def make_imbalanced_blobs(
    n: int = 1000,
    minority_fraction: float = 0.1,
    seed: int = 0,
    separation: float = 2.0,
) -> Dataset:
    """Two unit-variance 2-D Gaussians with an exact majority/minority split.

    Class 0 (majority) is centred at the origin, class 1 at
    ``(separation, separation)``. Row order is shuffled with the same seed.
    """
    if n < 2:
        raise DataError("need at least two samples")
    rng = np.random.default_rng(seed)
    n_minor = int(round(n * minority_fraction))
    n_major = n - n_minor
    X = np.concatenate(
        [
            rng.standard_normal((n_major, 2)),
            rng.standard_normal((n_minor, 2)) + separation,
        ]
    )
    y = np.concatenate([np.zeros(n_major, dtype=np.int64), np.ones(n_minor, dtype=np.int64)])
    order = rng.permutation(n)
    return Dataset(X[order], y[order], 2)


def write_dataset(data: Dataset, path: str | Path):
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i}" for i in range(data.n_features)] + ["label"])
        for x, y in zip(data.features, data.labels):
            writer.writerow([format(v, ".17g") for v in x] + [int(y)])
