"""Families of feature-space subsets: membership, induced subsets, shattering, VC estimates.

A set class is one of five kinds (the full space alone, a finite partition,
closed intervals on the line, closed l2 balls, closed half-spaces); the full
space is always a member. The central operation is enumerating the distinct
subsets the class carves out of a finite point list, each certified by a
witness descriptor. Enumeration is exact for the full-space and partition
kinds, for intervals, and for balls and half-spaces in dimension <= 2; in
higher dimension a candidate-based sweep is used and the result is flagged
approximate (it is a sub-family of the truth, so anything downstream that
maximizes over it is conservatively small).

Exact strategies:

- intervals: contiguous runs of the sorted values, plus the empty set.
- half-spaces (d=2): angular sweep over the directions perpendicular to point
  differences plus the bisecting directions between consecutive ones; for each
  direction, offsets at the projected values and at midpoints between
  consecutive projections.
- balls (d=2): candidate circles through <= 3 points. Circles through two
  points form a one-parameter family along the perpendicular bisector; it is
  discretized at the positions between consecutive circumcenters (where the
  induced subset can change) plus far tails, with tiny center nudges along the
  pair axis and radius perturbations of +-eps (eps = 1e-9 x data scale) to
  realize every boundary-inclusion pattern.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, ShatterLimitError

__all__ = [
    "FullSpace",
    "Interval1D",
    "Ball",
    "HalfSpace",
    "PartitionCell",
    "GridPartition",
    "NearestAnchorPartition",
    "SetClass",
    "InducedSubset",
    "EnumerationResult",
    "VcEstimate",
    "contains",
    "membership_many",
    "induced_subsets",
    "enumeration_is_exact",
    "shatters",
    "vc_estimate",
    "SHATTER_POINT_CAP",
]

SET_CLASS_KINDS = ("full-space-only", "finite-partition", "intervals-1d", "l2-balls", "half-spaces")
SHATTER_POINT_CAP = 25


# ---------------------------------------------------------------------------
# Descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FullSpace:
    """The whole feature space R^d."""

    dim: int


@dataclass(frozen=True)
class Interval1D:
    """A closed interval [lo, hi] on the line."""

    lo: float
    hi: float


@dataclass(frozen=True)
class Ball:
    """A closed l2 ball."""

    center: tuple[float, ...]
    radius: float


@dataclass(frozen=True)
class HalfSpace:
    """A closed half-space {x : normal . x >= offset}."""

    normal: tuple[float, ...]
    offset: float


@dataclass(frozen=True)
class GridPartition:
    """Axis-aligned grid cells from per-dimension ascending cut points.

    Cell (i_1, ..., i_d) is the product of slabs [cut_{j,i-1}, cut_{j,i}),
    lower-closed so membership is deterministic on boundaries.
    """

    cuts: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        for axis in self.cuts:
            if list(axis) != sorted(axis):
                raise ConfigError("grid cut points must be ascending per dimension")
        object.__setattr__(self, "cuts", tuple(tuple(float(c) for c in axis) for axis in self.cuts))

    @property
    def dim(self) -> int:
        return len(self.cuts)

    def label_many(self, pts: np.ndarray) -> list[tuple[int, ...]]:
        pts = np.atleast_2d(pts)
        cols = [np.searchsorted(np.asarray(axis), pts[:, j], side="right") for j, axis in enumerate(self.cuts)]
        return [tuple(int(c[i]) for c in cols) for i in range(pts.shape[0])]

    def all_labels(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(len(axis) + 1) for axis in self.cuts)))


@dataclass(frozen=True)
class NearestAnchorPartition:
    """Cells induced by labeled anchor points: the cell of x is the label of its
    nearest anchor (ties broken by anchor index). Extends a per-row labeling of
    a dataset to a total partition of R^d."""

    anchors: np.ndarray
    anchor_labels: tuple

    def __post_init__(self):
        anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float)).copy()
        anchors.setflags(write=False)
        if anchors.shape[0] != len(self.anchor_labels):
            raise ConfigError("anchor count does not match label count")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "anchor_labels", tuple(self.anchor_labels))

    @property
    def dim(self) -> int:
        return self.anchors.shape[1]

    def label_many(self, pts: np.ndarray) -> list:
        pts = np.atleast_2d(pts)
        d2 = ((pts[:, None, :] - self.anchors[None, :, :]) ** 2).sum(axis=2)
        return [self.anchor_labels[int(i)] for i in np.argmin(d2, axis=1)]

    def all_labels(self) -> list:
        seen = []
        for lab in self.anchor_labels:
            if lab not in seen:
                seen.append(lab)
        return seen


@dataclass(frozen=True)
class PartitionCell:
    """One cell of a finite partition."""

    partition: GridPartition | NearestAnchorPartition
    label: object


SetDescriptor = FullSpace | Interval1D | Ball | HalfSpace | PartitionCell


@dataclass(frozen=True)
class SetClass:
    """A family of feature-space subsets; the full space is always a member."""

    kind: str
    dim: int
    partition: GridPartition | NearestAnchorPartition | None = None

    def __post_init__(self):
        if self.kind not in SET_CLASS_KINDS:
            raise ConfigError(f"unknown set class kind {self.kind!r}; expected one of {SET_CLASS_KINDS}")
        if self.kind == "intervals-1d" and self.dim != 1:
            raise ConfigError("intervals-1d requires dimension 1")
        if self.kind == "finite-partition" and self.partition is None:
            raise ConfigError("finite-partition requires a partition")

    @classmethod
    def full_space_only(cls, dim: int) -> "SetClass":
        return cls("full-space-only", dim)

    @classmethod
    def intervals_1d(cls) -> "SetClass":
        return cls("intervals-1d", 1)

    @classmethod
    def l2_balls(cls, dim: int) -> "SetClass":
        return cls("l2-balls", dim)

    @classmethod
    def half_spaces(cls, dim: int) -> "SetClass":
        return cls("half-spaces", dim)

    @classmethod
    def finite_partition(cls, partition: GridPartition | NearestAnchorPartition) -> "SetClass":
        return cls("finite-partition", partition.dim, partition)


def _descriptor_dim(desc: SetDescriptor) -> int:
    if isinstance(desc, FullSpace):
        return desc.dim
    if isinstance(desc, Interval1D):
        return 1
    if isinstance(desc, Ball):
        return len(desc.center)
    if isinstance(desc, HalfSpace):
        return len(desc.normal)
    if isinstance(desc, PartitionCell):
        return desc.partition.dim
    raise ConfigError(f"unknown descriptor {desc!r}")


def membership_many(desc: SetDescriptor, pts) -> np.ndarray:
    """Boolean membership of each row of ``pts`` in the closed set ``desc``."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.shape[1] != _descriptor_dim(desc):
        raise DataError(
            f"point dimension {pts.shape[1]} does not match descriptor dimension {_descriptor_dim(desc)}"
        )
    if isinstance(desc, FullSpace):
        return np.ones(pts.shape[0], dtype=bool)
    if isinstance(desc, Interval1D):
        v = pts[:, 0]
        return (v >= desc.lo) & (v <= desc.hi)
    if isinstance(desc, Ball):
        center = np.asarray(desc.center, dtype=float)
        return ((pts - center) ** 2).sum(axis=1) <= desc.radius**2
    if isinstance(desc, HalfSpace):
        normal = np.asarray(desc.normal, dtype=float)
        return pts @ normal >= desc.offset
    if isinstance(desc, PartitionCell):
        return np.asarray([lab == desc.label for lab in desc.partition.label_many(pts)], dtype=bool)
    raise ConfigError(f"unknown descriptor {desc!r}")


def contains(desc: SetDescriptor, x) -> bool:
    """Closed-set membership of a single point."""
    return bool(membership_many(desc, np.asarray(x, dtype=float).reshape(1, -1))[0])


# ---------------------------------------------------------------------------
# Induced subsets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InducedSubset:
    """An index set carved out of a finite point list, with a witness realizing it."""

    indices: tuple[int, ...]
    witness: SetDescriptor


@dataclass(frozen=True)
class EnumerationResult:
    subsets: tuple[InducedSubset, ...]
    exact: bool


class _PatternCollector:
    """Deduplicates membership patterns, keeping the first witness per pattern."""

    def __init__(self, n: int):
        self.n = n
        self._seen: dict[bytes, InducedSubset] = {}

    def add(self, mask: np.ndarray, witness: SetDescriptor) -> None:
        key = mask.tobytes()
        if key not in self._seen:
            idx = tuple(int(i) for i in np.flatnonzero(mask))
            self._seen[key] = InducedSubset(idx, witness)

    def result(self, exact: bool) -> EnumerationResult:
        subs = sorted(self._seen.values(), key=lambda s: s.indices)
        return EnumerationResult(tuple(subs), exact)


def _data_scale(pts: np.ndarray) -> float:
    return max(1.0, float(np.abs(pts).max()) if pts.size else 1.0)


def _enumerate_full_space(pts: np.ndarray, dim: int) -> EnumerationResult:
    col = _PatternCollector(pts.shape[0])
    col.add(np.ones(pts.shape[0], dtype=bool), FullSpace(dim))
    return col.result(True)


def _enumerate_partition(partition, pts: np.ndarray, dim: int) -> EnumerationResult:
    col = _PatternCollector(pts.shape[0])
    labels = partition.label_many(pts)
    for lab in partition.all_labels():
        mask = np.asarray([l == lab for l in labels], dtype=bool)
        col.add(mask, PartitionCell(partition, lab))
    col.add(np.ones(pts.shape[0], dtype=bool), FullSpace(dim))
    return col.result(True)


def _enumerate_intervals(pts: np.ndarray, as_balls: bool = False) -> EnumerationResult:
    vals = pts[:, 0]
    col = _PatternCollector(vals.shape[0])
    distinct = np.unique(vals)

    def witness(lo: float, hi: float) -> SetDescriptor:
        if as_balls:
            return Ball(((lo + hi) / 2.0,), (hi - lo) / 2.0)
        return Interval1D(lo, hi)

    for i in range(distinct.shape[0]):
        for j in range(i, distinct.shape[0]):
            lo, hi = float(distinct[i]), float(distinct[j])
            run = (vals >= lo) & (vals <= hi)
            if not as_balls:
                col.add(run, witness(lo, hi))
                continue
            # radius max(hi-mid, mid-lo) covers both endpoints despite the
            # rounding of the midpoint: squaring preserves float order
            mid = (lo + hi) / 2.0
            w = Ball((mid,), max(hi - mid, mid - lo))
            col.add(membership_many(w, pts), w)
    below = float(distinct[0]) - _data_scale(pts) - 1.0
    col.add(np.zeros(vals.shape[0], dtype=bool), witness(below, below))
    return col.result(True)


def _halfspace_directions(pts: np.ndarray) -> np.ndarray:
    angles = set()
    m = pts.shape[0]
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            diff = pts[j] - pts[i]
            norm = math.hypot(diff[0], diff[1])
            if norm == 0.0:
                continue
            # direction perpendicular to the pair difference: a critical angle
            angles.add(math.atan2(diff[0], -diff[1]))
    if not angles:
        return np.asarray([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    crit = sorted(angles)
    sampled = list(crit)
    for a, b in zip(crit, crit[1:]):
        sampled.append((a + b) / 2.0)
    sampled.append(crit[-1] + (crit[0] + 2 * math.pi - crit[-1]) / 2.0)
    return np.asarray([[math.cos(a), math.sin(a)] for a in sampled])


def _sweep_halfspaces(pts: np.ndarray, directions: np.ndarray, exact: bool) -> EnumerationResult:
    col = _PatternCollector(pts.shape[0])
    for u in directions:
        proj = pts @ u
        distinct = np.unique(proj)
        offsets = [float(distinct[0]) - 1.0, float(distinct[-1]) + 1.0]
        offsets.extend(float(v) for v in distinct)
        offsets.extend(float((a + b) / 2.0) for a, b in zip(distinct, distinct[1:]))
        for c in offsets:
            col.add(proj >= c, HalfSpace((float(u[0]), float(u[1])) if u.shape[0] == 2 else tuple(map(float, u)), c))
    col.add(np.ones(pts.shape[0], dtype=bool), FullSpace(pts.shape[1]))
    return col.result(exact)


def _enumerate_halfspaces(pts: np.ndarray) -> EnumerationResult:
    d = pts.shape[1]
    if d == 1:
        return _sweep_halfspaces(pts, np.asarray([[1.0], [-1.0]]), True)
    if d == 2:
        return _sweep_halfspaces(pts, _halfspace_directions(pts), True)
    # d >= 3: normals from point differences only; approximate
    dirs = []
    m = pts.shape[0]
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            diff = pts[j] - pts[i]
            norm = np.linalg.norm(diff)
            if norm > 0:
                dirs.append(diff / norm)
    if not dirs:
        dirs = [np.eye(d)[0]]
    return _sweep_halfspaces(pts, np.asarray(dirs), False)


def _circumcenter(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray | None:
    # solves 2(b-a).z = |b|^2-|a|^2 ; 2(c-a).z = |c|^2-|a|^2
    mat = 2.0 * np.asarray([b - a, c - a])
    rhs = np.asarray([b @ b - a @ a, c @ c - a @ a])
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    if abs(det) < 1e-14 * (np.abs(mat).max() ** 2 + 1e-300):
        return None
    return np.linalg.solve(mat, rhs)


def _ball_centers_2d(pts: np.ndarray) -> list[np.ndarray]:
    scale = _data_scale(pts)
    eta = 1e-6 * scale
    m = pts.shape[0]
    centers: list[np.ndarray] = [pts.max(axis=0) + 3.0 * scale]
    centers.extend(pts[i] for i in range(m))
    for i, j, k in itertools.combinations(range(m), 3):
        z = _circumcenter(pts[i], pts[j], pts[k])
        if z is not None:
            centers.append(z)
    for i, j in itertools.combinations(range(m), 2):
        p, q = pts[i], pts[j]
        axis = q - p
        norm = math.hypot(axis[0], axis[1])
        if norm == 0.0:
            continue
        axis = axis / norm
        perp = np.asarray([-axis[1], axis[0]])
        mid = (p + q) / 2.0
        # parameters along the bisector where a third point becomes equidistant
        crit = []
        for k in range(m):
            if k in (i, j):
                continue
            r = pts[k]
            denom = perp @ (r - p)
            if abs(denom) < 1e-14 * scale:
                continue
            t = ((r @ r - p @ p) / 2.0 - mid @ (r - p)) / denom
            crit.append(t)
        crit.sort()
        span = max(1.0, scale, max((abs(t) for t in crit), default=0.0))
        positions = [0.0, -2.0 * span, 2.0 * span]
        positions.extend((a + b) / 2.0 for a, b in zip(crit, crit[1:]))
        for t in positions:
            base = mid + t * perp
            for s in (0.0, eta, -eta):
                centers.append(base + s * axis)
    return centers


def _enumerate_balls(pts: np.ndarray) -> EnumerationResult:
    d = pts.shape[1]
    if d == 1:
        return _enumerate_intervals(pts, as_balls=True)
    scale = _data_scale(pts)
    eps = 1e-9 * scale
    if d == 2:
        centers = _ball_centers_2d(pts)
        exact = True
    else:
        # approximate: centers at data points and pairwise midpoints
        centers = [pts[i] for i in range(pts.shape[0])]
        centers.extend((pts[i] + pts[j]) / 2.0 for i, j in itertools.combinations(range(pts.shape[0]), 2))
        centers.append(pts.max(axis=0) + 3.0 * scale)
        exact = False
    col = _PatternCollector(pts.shape[0])
    for z in centers:
        # squared-distance comparison, matching membership_many bit for bit
        d2 = ((pts - z) ** 2).sum(axis=1)
        dist = np.sqrt(d2)
        radii = np.unique(np.concatenate([[0.0], dist, dist - eps, dist + eps]))
        radii = radii[radii >= 0.0]
        masks = d2[None, :] <= (radii**2)[:, None]
        for mask, r in zip(masks, radii):
            col.add(mask, Ball((float(z[0]), float(z[1])) if d == 2 else tuple(map(float, z)), float(r)))
    col.add(np.ones(pts.shape[0], dtype=bool), FullSpace(d))
    return col.result(exact)


def enumeration_is_exact(set_class: SetClass) -> bool:
    """Whether induced-subset enumeration is exact for this class and dimension."""
    if set_class.kind in ("full-space-only", "finite-partition", "intervals-1d"):
        return True
    return set_class.dim <= 2


def induced_subsets(set_class: SetClass, points) -> EnumerationResult:
    """All distinct subsets of ``points`` realizable by members of the class.

    Each subset comes with a witness descriptor whose membership pattern over
    the point list is exactly the subset (patterns are computed through the
    same membership arithmetic as :func:`contains`). The ``exact`` flag is
    True for full-space, partition, and interval classes, and for balls and
    half-spaces in dimension <= 2; otherwise the family is a candidate-based
    under-approximation.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != set_class.dim:
        raise DataError(f"point dimension {pts.shape[1]} does not match class dimension {set_class.dim}")
    if not np.isfinite(pts).all():
        raise DataError("points must be finite")
    if set_class.kind == "full-space-only":
        return _enumerate_full_space(pts, set_class.dim)
    if set_class.kind == "finite-partition":
        return _enumerate_partition(set_class.partition, pts, set_class.dim)
    if set_class.kind == "intervals-1d":
        return _enumerate_intervals(pts)
    if set_class.kind == "l2-balls":
        return _enumerate_balls(pts)
    if set_class.kind == "half-spaces":
        return _enumerate_halfspaces(pts)
    raise ConfigError(f"unknown set class kind {set_class.kind!r}")


def shatters(set_class: SetClass, points) -> bool:
    """Whether the class realizes all 2^m subsets of the given m points (m <= 25)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m = pts.shape[0]
    if m > SHATTER_POINT_CAP:
        raise ShatterLimitError(
            f"shattering check limited to {SHATTER_POINT_CAP} points (exhaustive 2^m test), got {m}"
        )
    return len(induced_subsets(set_class, pts).subsets) == 2**m


@dataclass(frozen=True)
class VcEstimate:
    """Randomized VC lower bound plus per-size shattered fractions."""

    vc_lower: int
    shatter_fraction: dict[int, float]


def vc_estimate(set_class: SetClass, max_m: int, sets_per_m: int = 200, seed: int = 0) -> VcEstimate:
    """Estimate the VC dimension by shattering random point sets.

    For each size m = 1..max_m, draws ``sets_per_m`` standard-normal point
    sets and records the fraction shattered; the reported lower bound is the
    largest m with at least one shattered set. The fractions double as an
    empirical proxy for the almost-everywhere VC dimension (fraction 1.0 means
    every sampled set of that size was shattered).
    """
    if max_m > SHATTER_POINT_CAP:
        raise ConfigError(f"max_m must be <= {SHATTER_POINT_CAP}, got {max_m}")
    rng = np.random.default_rng(seed)
    fractions: dict[int, float] = {}
    vc_lower = 0
    for m in range(1, max_m + 1):
        hits = 0
        for _ in range(sets_per_m):
            if shatters(set_class, rng.standard_normal((m, set_class.dim))):
                hits += 1
        fractions[m] = hits / sets_per_m
        if hits > 0:
            vc_lower = m
    return VcEstimate(vc_lower=vc_lower, shatter_fraction=fractions)
