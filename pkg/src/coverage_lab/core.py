"""Core data model: datasets, splits, coverage targets, and interval arithmetic.

Prediction sets live on the real line and are represented as finite unions of
closed pieces with extended-real endpoints, so that the degenerate "infinite
quantile" regime of small calibration sets yields the whole line as a single
unbounded piece rather than an error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "Dataset",
    "SplitConfig",
    "CoverageSpec",
    "PredictionInterval",
    "split_dataset",
    "interval_length",
    "symmetric_difference_length",
    "read_dataset_csv",
    "write_dataset_csv",
    "read_query_csv",
]


def _frozen_array(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """A feature matrix paired with a response vector.

    Rows of ``features`` are the n observed feature vectors in R^d and
    ``responses`` holds the matching n real responses. Both are copied and
    frozen at construction; all entries must be finite.
    """

    features: np.ndarray
    responses: np.ndarray
    labels: tuple | None = None  # optional per-row partition labels from CSV

    def __post_init__(self):
        feats = np.atleast_2d(np.asarray(self.features, dtype=float))
        resp = np.asarray(self.responses, dtype=float).reshape(-1)
        if feats.ndim != 2:
            raise DataError(f"features must be a 2-d matrix, got ndim={feats.ndim}")
        if feats.shape[0] != resp.shape[0]:
            raise DataError(
                f"row count mismatch: {feats.shape[0]} feature rows vs {resp.shape[0]} responses"
            )
        if feats.shape[0] < 1:
            raise DataError("dataset must contain at least one row")
        if not np.isfinite(feats).all() or not np.isfinite(resp).all():
            raise DataError("dataset contains non-finite entries")
        if self.labels is not None and len(self.labels) != feats.shape[0]:
            raise DataError("labels length does not match row count")
        object.__setattr__(self, "features", _frozen_array(feats))
        object.__setattr__(self, "responses", _frozen_array(resp))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        labels = tuple(self.labels[i] for i in idx) if self.labels is not None else None
        return Dataset(self.features[idx], self.responses[idx], labels)


@dataclass(frozen=True)
class SplitConfig:
    """How to partition n rows into a model-fitting part (n0) and a calibration part (n1).

    ``shuffle=True`` (the default) assigns rows by a seeded random permutation,
    matching i.i.d. semantics; ``shuffle=False`` takes the first n0 rows as the
    fitting part.
    """

    n0: int
    n1: int
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.n0 < 1 or self.n1 < 1:
            raise ConfigError(f"both split sizes must be >= 1, got n0={self.n0}, n1={self.n1}")

    @property
    def n(self) -> int:
        return self.n0 + self.n1


@dataclass(frozen=True)
class CoverageSpec:
    """Target miscoverage level alpha and subgroup mass tolerance delta."""

    alpha: float
    delta: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (0.0 < self.delta <= 1.0):
            raise ConfigError(f"delta must lie in (0, 1], got {self.delta}")


def split_dataset(data: Dataset, cfg: SplitConfig) -> tuple[Dataset, Dataset]:
    """Partition ``data`` into (fitting, calibration) parts of sizes (n0, n1).

    Deterministic for a fixed seed; the two outputs always form an exact
    partition of the input rows.
    """
    if cfg.n != data.n:
        raise ConfigError(f"split sizes n0+n1={cfg.n} do not match dataset size n={data.n}")
    if cfg.shuffle:
        perm = np.random.default_rng(cfg.seed).permutation(data.n)
    else:
        perm = np.arange(data.n)
    return data.take(perm[: cfg.n0]), data.take(perm[cfg.n0 :])


# ---------------------------------------------------------------------------
# Prediction intervals
# ---------------------------------------------------------------------------


def _normalize_pieces(pieces) -> tuple[tuple[float, float], ...]:
    cleaned = []
    for lo, hi in pieces:
        lo = float(lo)
        hi = float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise DataError("interval endpoints must not be NaN")
        if lo > hi:
            raise DataError(f"interval piece has lo > hi: [{lo}, {hi}]")
        cleaned.append((lo, hi))
    cleaned.sort()
    merged: list[list[float]] = []
    for lo, hi in cleaned:
        # closed pieces: touching endpoints merge
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return tuple((lo, hi) for lo, hi in merged)


@dataclass(frozen=True)
class PredictionInterval:
    """A finite union of disjoint closed intervals on the real line.

    Pieces are normalized at construction: sorted by left endpoint, with
    overlapping or touching pieces merged. Endpoints may be +-inf and the
    union may be empty (zero pieces). Degenerate single-point pieces are
    allowed and contribute zero length.
    """

    pieces: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "pieces", _normalize_pieces(self.pieces))

    @classmethod
    def empty(cls) -> "PredictionInterval":
        return cls(())

    @classmethod
    def full_line(cls) -> "PredictionInterval":
        return cls(((-math.inf, math.inf),))

    @classmethod
    def symmetric(cls, center: float, halfwidth: float) -> "PredictionInterval":
        """The interval [center - halfwidth, center + halfwidth]; the whole line if halfwidth is inf."""
        if math.isnan(halfwidth) or halfwidth < 0:
            raise DataError(f"halfwidth must be >= 0 or +inf, got {halfwidth}")
        if math.isinf(halfwidth):
            return cls.full_line()
        return cls(((center - halfwidth, center + halfwidth),))

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    def contains(self, y: float) -> bool:
        return any(lo <= y <= hi for lo, hi in self.pieces)

    def length(self) -> float:
        total = 0.0
        for lo, hi in self.pieces:
            if math.isinf(lo) or math.isinf(hi):
                return math.inf
            total += hi - lo
        return total


def interval_length(interval: PredictionInterval) -> float:
    """Lebesgue measure of the union: 0 for empty, +inf if any piece is unbounded."""
    return interval.length()


def symmetric_difference_length(a: PredictionInterval, b: PredictionInterval) -> float:
    """Lebesgue measure of the symmetric difference of two piece unions.

    Computed by an endpoint sweep: between consecutive endpoints membership in
    each union is constant, so each elementary segment contributes its length
    exactly when it belongs to one union but not the other.
    """
    endpoints = sorted(
        {e for lo, hi in a.pieces + b.pieces for e in (lo, hi) if math.isfinite(e)}
    )
    total = 0.0

    def xor_at(t: float) -> bool:
        return a.contains(t) != b.contains(t)

    if not endpoints:
        # no finite endpoints: each side is empty or the whole line
        return math.inf if xor_at(0.0) else 0.0
    if xor_at(endpoints[0] - 1.0):
        return math.inf
    if xor_at(endpoints[-1] + 1.0):
        return math.inf
    for left, right in zip(endpoints, endpoints[1:]):
        if right > left and xor_at((left + right) / 2.0):
            total += right - left
    return total


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------

LABEL_COLUMN = "cell"


def _expected_header(d: int, with_y: bool, with_label: bool) -> list[str]:
    cols = [f"x{j + 1}" for j in range(d)]
    if with_y:
        cols.append("y")
    if with_label:
        cols.append(LABEL_COLUMN)
    return cols


def _parse_rows(path, rows, n_float: int, *, label: bool):
    feats, labels = [], []
    for lineno, row in rows:
        want = n_float + (1 if label else 0)
        if len(row) != want:
            raise DataError(
                f"{path}: row at line {lineno} has {len(row)} columns, expected {want}"
            )
        try:
            vals = [float(v) for v in row[:n_float]]
        except ValueError as exc:
            raise DataError(f"{path}: row at line {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"{path}: row at line {lineno} contains non-finite values")
        feats.append(vals)
        if label:
            labels.append(row[n_float])
    return feats, labels


def read_dataset_csv(path) -> Dataset:
    """Read a dataset from CSV with header ``x1..xd,y`` (optionally a trailing ``cell`` column)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        with_label = header and header[-1] == LABEL_COLUMN
        d = len(header) - 1 - (1 if with_label else 0)
        if d < 1 or header != _expected_header(d, True, with_label):
            raise DataError(f"{path}: bad header {header!r}, expected x1..xd,y[,{LABEL_COLUMN}]")
        rows = [(i + 2, r) for i, r in enumerate(reader) if r]
        vals, labels = _parse_rows(path, rows, d + 1, label=with_label)
    if not vals:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(vals)
    return Dataset(arr[:, :d], arr[:, d], tuple(labels) if with_label else None)


def read_query_csv(path) -> tuple[np.ndarray, tuple | None]:
    """Read query feature rows from CSV with header ``x1..xd`` (optionally a trailing ``cell`` column)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        with_label = header and header[-1] == LABEL_COLUMN
        d = len(header) - (1 if with_label else 0)
        if d < 1 or header != _expected_header(d, False, with_label):
            raise DataError(f"{path}: bad header {header!r}, expected x1..xd[,{LABEL_COLUMN}]")
        rows = [(i + 2, r) for i, r in enumerate(reader) if r]
        vals, labels = _parse_rows(path, rows, d, label=with_label)
    if not vals:
        raise DataError(f"{path}: no query rows")
    return np.asarray(vals), (tuple(labels) if with_label else None)


def write_dataset_csv(path, data: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        with_label = data.labels is not None
        writer.writerow(_expected_header(data.dim, True, with_label))
        for i in range(data.n):
            row = [repr(float(v)) for v in data.features[i]] + [repr(float(data.responses[i]))]
            if with_label:
                row.append(str(data.labels[i]))
            writer.writerow(row)
