"""Split conformal prediction and the two trivial approximate-conditional reductions.

The split conformal half-width is the k-th smallest calibration residual with
k = ceil((1-alpha) * (n1+1)); when k exceeds n1 the half-width is +inf and the
interval is the whole line. The two reductions are (a) running the method at
the stricter level alpha*delta, and (b) randomized thinning: keep the base
interval with probability (1-alpha)/(1-c*alpha), otherwise output the empty
set, with the coin independent of the query and the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CoverageSpec, Dataset, PredictionInterval
from .errors import ConfigError
from .regressors import RegressionModel, predict_mean, predict_mean_many

__all__ = [
    "ResidualSet",
    "ThinningRule",
    "order_stat_index",
    "kth_smallest",
    "calib_residuals",
    "marginal_quantile",
    "predict_marginal",
    "naive_approx_cc_level",
    "thinned_predict",
]

# Relative snap tolerance for the ceiling index: decimal alpha values produce
# float products that can land a few ulps off an exact integer, and the index
# must follow exact-arithmetic semantics.
_SNAP = 1e-9


def order_stat_index(level: float, count: int) -> int:
    """The order-statistic index ceil(level * (count + 1)).

    Values within relative 1e-9 of an integer are snapped to it before the
    ceiling, so that e.g. level=0.9, count=9 gives exactly 9 regardless of
    binary rounding of the decimal inputs.
    """
    v = level * (count + 1)
    nearest = round(v)
    if abs(v - nearest) <= _SNAP * max(1.0, abs(v)):
        return int(nearest)
    return int(math.ceil(v))


def kth_smallest(values: np.ndarray, k: int) -> float:
    """The k-th smallest element (1-based, duplicates retained); +inf when k exceeds the length."""
    if k < 1:
        raise ConfigError(f"order statistic index must be >= 1, got {k}")
    values = np.asarray(values, dtype=float)
    if k > values.shape[0]:
        return math.inf
    return float(np.partition(values, k - 1)[k - 1])


@dataclass(frozen=True)
class ResidualSet:
    """Absolute calibration residuals |Y_i - muhat(X_i)|, with a cached sorted copy."""

    values: np.ndarray
    sorted_values: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] < 1:
            raise ConfigError("residuals must form a nonempty vector")
        if not np.isfinite(vals).all() or (vals < 0).any():
            raise ConfigError("residuals must be finite and nonnegative")
        vals = vals.copy()
        vals.setflags(write=False)
        srt = np.sort(vals)
        srt.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "sorted_values", srt)

    @property
    def n1(self) -> int:
        return self.values.shape[0]


def calib_residuals(model: RegressionModel, calib: Dataset) -> ResidualSet:
    """Residuals |Y_i - muhat(X_i)| over the calibration split, in calibration order."""
    return ResidualSet(np.abs(calib.responses - predict_mean_many(model, calib.features)))


def marginal_quantile(residuals: ResidualSet, alpha: float) -> float:
    """The ceil((1-alpha)(n1+1))-th smallest residual; +inf when the index exceeds n1."""
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
    k = order_stat_index(1.0 - alpha, residuals.n1)
    if k > residuals.n1:
        return math.inf
    return float(residuals.sorted_values[k - 1])


def predict_marginal(model: RegressionModel, q: float, x) -> PredictionInterval:
    """The symmetric interval muhat(x) +- q; the whole line when q is +inf."""
    return PredictionInterval.symmetric(predict_mean(model, x), q)


def naive_approx_cc_level(spec: CoverageSpec) -> float:
    """The marginal miscoverage level alpha*delta whose marginal guarantee implies
    approximate conditional coverage at (alpha, delta)."""
    return spec.alpha * spec.delta


@dataclass(frozen=True)
class ThinningRule:
    """Randomized thinning: keep the base interval with probability (1-alpha)/(1-c*alpha).

    The Bernoulli draw for query ``i`` comes from a stream keyed by
    ``(seed, i)``, so decisions are reproducible and independent across
    queries, and independent of the query point and the training data.
    """

    c: float
    alpha: float
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.c <= 1.0):
            raise ConfigError(f"thinning parameter c must lie in [0, 1], got {self.c}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def keep_probability(self) -> float:
        return (1.0 - self.alpha) / (1.0 - self.c * self.alpha)

    def keep(self, query_index: int) -> bool:
        rng = np.random.default_rng([self.seed, int(query_index)])
        return bool(rng.random() < self.keep_probability)


def thinned_predict(base: PredictionInterval, rule: ThinningRule, query_index: int) -> PredictionInterval:
    """Apply the thinning coin for this query: the base interval if kept, else the empty set."""
    if rule.keep(query_index):
        return base
    return PredictionInterval.empty()
