"""Baseline mean estimators fitted on the model-fitting split.

The conformal layers only ever call :func:`predict_mean`, so any of the three
baselines (constant mean, least-squares linear, k-nearest-neighbor) can sit
underneath them. Least squares under a linear truth and k-NN under a smooth
truth give consistent estimators for efficiency experiments; the constant
model gives a deliberately inconsistent contrast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .errors import ConfigError, DataError

__all__ = [
    "RegressionModel",
    "MonteCarloEstimate",
    "fit_regressor",
    "predict_mean",
    "predict_mean_many",
    "estimate_consistency",
    "REGRESSOR_KINDS",
]

REGRESSOR_KINDS = ("constant-mean", "least-squares", "knn")


@dataclass(frozen=True)
class RegressionModel:
    """A fitted mean estimator; ``predict`` is a pure function of x after fitting.

    For ``least-squares`` the fields hold the coefficient vector and intercept
    (``rank_deficient`` flags a singular design resolved by the minimum-norm
    solution). For ``knn`` the training points themselves are stored.
    """

    kind: str
    dim: int
    coef: np.ndarray | None = None
    intercept: float = 0.0
    train_x: np.ndarray | None = None
    train_y: np.ndarray | None = None
    k: int | None = None
    rank_deficient: bool = False


def default_knn_k(n0: int) -> int:
    """Default neighbor count ceil(n0^(2/3)), a standard consistency-friendly rate."""
    return max(1, math.ceil(n0 ** (2.0 / 3.0)))


def fit_regressor(kind: str, train: Dataset, k: int | None = None, fit_intercept: bool = True) -> RegressionModel:
    """Fit one of the baseline mean estimators on the fitting split.

    Parameters
    ----------
    kind : str
        One of ``"constant-mean"``, ``"least-squares"``, ``"knn"``.
    train : Dataset
        Fitting data (n0 rows).
    k : int, optional
        Neighbor count for k-NN; defaults to ceil(n0^(2/3)). Must satisfy
        k <= n0.
    fit_intercept : bool
        Least squares only: include an intercept column.
    """
    if kind == "constant-mean":
        return RegressionModel(kind=kind, dim=train.dim, intercept=float(train.responses.mean()))
    if kind == "least-squares":
        X = train.features
        design = np.hstack([X, np.ones((train.n, 1))]) if fit_intercept else X
        # lstsq returns the minimum-norm solution for rank-deficient designs
        sol, _, rank, _ = np.linalg.lstsq(design, train.responses, rcond=None)
        deficient = rank < design.shape[1]
        if fit_intercept:
            coef, intercept = sol[:-1], float(sol[-1])
        else:
            coef, intercept = sol, 0.0
        return RegressionModel(
            kind=kind, dim=train.dim, coef=coef, intercept=intercept, rank_deficient=deficient
        )
    if kind == "knn":
        kk = default_knn_k(train.n) if k is None else int(k)
        if not (1 <= kk <= train.n):
            raise ConfigError(f"knn requires 1 <= k <= n0, got k={kk}, n0={train.n}")
        return RegressionModel(
            kind=kind, dim=train.dim, train_x=train.features, train_y=train.responses, k=kk
        )
    raise ConfigError(f"unknown regressor kind {kind!r}; expected one of {REGRESSOR_KINDS}")


def predict_mean_many(model: RegressionModel, X) -> np.ndarray:
    """Vectorized prediction for a (m, d) batch of feature rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.dim:
        raise DataError(f"query dimension {X.shape[1]} does not match model dimension {model.dim}")
    if not np.isfinite(X).all():
        raise DataError("query features must be finite")
    if model.kind == "constant-mean":
        return np.full(X.shape[0], model.intercept)
    if model.kind == "least-squares":
        return X @ model.coef + model.intercept
    if model.kind == "knn":
        # ties in distance broken by training index via stable argsort
        d2 = ((X[:, None, :] - model.train_x[None, :, :]) ** 2).sum(axis=2)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : model.k]
        return model.train_y[nearest].mean(axis=1)
    raise ConfigError(f"unknown regressor kind {model.kind!r}")


def predict_mean(model: RegressionModel, x) -> float:
    """Predicted mean at a single feature vector."""
    return float(predict_mean_many(model, np.asarray(x, dtype=float).reshape(1, -1))[0])


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A Monte Carlo point estimate with its standard error."""

    value: float
    stderr: float
    trials: int


def estimate_consistency(model: RegressionModel, truth, sampler, m: int, seed: int) -> MonteCarloEstimate:
    """Monte Carlo estimate of the mean squared estimation error E[(muhat(X) - mu(X))^2].

    ``truth`` maps a (m, d) feature batch to the true mean values and
    ``sampler(rng, m)`` draws m feature rows. This is the empirical handle on
    the consistency rate that efficiency guarantees are stated in terms of.
    """
    if m < 1:
        raise ConfigError(f"trial count must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    X = np.atleast_2d(sampler(rng, m))
    sq = (predict_mean_many(model, X) - np.asarray(truth(X), dtype=float)) ** 2
    stderr = float(sq.std(ddof=1) / math.sqrt(m)) if m > 1 else math.inf
    return MonteCarloEstimate(value=float(sq.mean()), stderr=stderr, trials=m)
