"""Ground truth for synthetic location families: oracle interval widths, the
optimal-length curve, the hardness lower bound, and sandwich levels.

The data model is Y = mu(X) + eps with a symmetric noise density that is
nonincreasing away from zero, so the shortest valid interval at any level is
the symmetric one around the true mean and every oracle quantity reduces to a
quantile of |eps|. The hardness bound is the infimum over c in [0, 1] of
(1-alpha)/(1-c*alpha) * L(1-c*alpha*delta), evaluated by a coarse grid search
refined with golden-section.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CoverageSpec, Dataset, PredictionInterval
from .errors import ConfigError, MassTooSmallError
from .regressors import MonteCarloEstimate
from .set_classes import SetClass, SetDescriptor, induced_subsets, membership_many

__all__ = [
    "MeanFunction",
    "NoiseModel",
    "FeatureLaw",
    "LocationFamily",
    "SandwichLevels",
    "sample_location_family",
    "normal_upper_quantile",
    "oracle_noise_quantile",
    "oracle_interval",
    "optimal_length",
    "hardness_lower_bound",
    "oracle_restricted_quantile",
    "oracle_restricted_interval",
    "sandwich_levels",
]

MEAN_KINDS = ("linear", "sinusoidal", "constant")
NOISE_KINDS = ("gaussian", "laplace", "uniform")
FEATURE_KINDS = ("uniform-box", "standard-normal")

REJECTION_DRAW_CAP = 10**8


@dataclass(frozen=True)
class MeanFunction:
    """True conditional mean: linear (coef . x + intercept), sinusoidal
    (amplitude * sin(frequency * x_1)), or constant."""

    kind: str
    coef: tuple[float, ...] = ()
    intercept: float = 0.0
    amplitude: float = 1.0
    frequency: float = 1.0

    def __post_init__(self):
        if self.kind not in MEAN_KINDS:
            raise ConfigError(f"unknown mean kind {self.kind!r}; expected one of {MEAN_KINDS}")
        object.__setattr__(self, "coef", tuple(float(c) for c in self.coef))

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "constant":
            return np.full(X.shape[0], self.intercept)
        if self.kind == "linear":
            coef = np.asarray(self.coef, dtype=float)
            if coef.shape[0] != X.shape[1]:
                raise ConfigError(
                    f"linear mean has {coef.shape[0]} coefficients but features have dimension {X.shape[1]}"
                )
            return X @ coef + self.intercept
        return self.amplitude * np.sin(self.frequency * X[:, 0]) + self.intercept


@dataclass(frozen=True)
class NoiseModel:
    """Symmetric unimodal noise: gaussian(sigma), laplace(b), or uniform(w) on [-w, w].

    ``scale`` is sigma, b, or the half-width w respectively; a zero scale is
    the degenerate point mass at 0.
    """

    kind: str
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.scale < 0:
            raise ConfigError(f"noise scale must be >= 0, got {self.scale}")

    @property
    def bounded(self) -> bool:
        return self.kind == "uniform" or self.scale == 0.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.scale == 0.0:
            return np.zeros(n)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, n)
        if self.kind == "laplace":
            return rng.laplace(0.0, self.scale, n)
        return rng.uniform(-self.scale, self.scale, n)

    def abs_cdf(self, t: float) -> float:
        """CDF of |eps| at t >= 0."""
        if t < 0:
            return 0.0
        if self.scale == 0.0:
            return 1.0
        if self.kind == "gaussian":
            return math.erf(t / (self.scale * math.sqrt(2.0)))
        if self.kind == "laplace":
            return 1.0 - math.exp(-t / self.scale)
        return min(1.0, t / self.scale)


def normal_upper_quantile(p: float, tol: float = 1e-10) -> float:
    """The standard normal quantile at level p in [0.5, 1), by bisection on the CDF."""
    if not (0.5 <= p < 1.0):
        raise ConfigError(f"normal_upper_quantile expects p in [0.5, 1), got {p}")
    lo, hi = 0.0, 1.0
    cdf = lambda z: 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
    while cdf(hi) < p:
        hi *= 2.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def oracle_noise_quantile(noise: NoiseModel, alpha: float) -> float:
    """The (1-alpha)-quantile of |eps| (equivalently the (1-alpha/2)-quantile of eps).

    Closed form for laplace and uniform; bisection on the error function for
    gaussian. ``alpha`` may be 0 (full support: +inf for unbounded noise) or 1
    (returns 0), which the sandwich levels can produce after clipping.
    """
    if not (0.0 <= alpha <= 1.0):
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha >= 1.0 or noise.scale == 0.0:
        return 0.0
    if alpha == 0.0:
        return noise.scale if noise.kind == "uniform" else math.inf
    if noise.kind == "uniform":
        return noise.scale * (1.0 - alpha)
    if noise.kind == "laplace":
        return -noise.scale * math.log(alpha)
    return noise.scale * normal_upper_quantile(1.0 - alpha / 2.0)


@dataclass(frozen=True)
class FeatureLaw:
    """Marginal feature distribution: a uniform box or a standard normal in R^d."""

    kind: str
    dim: int = 1
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ConfigError(f"unknown feature law {self.kind!r}; expected one of {FEATURE_KINDS}")
        if self.dim < 1:
            raise ConfigError(f"feature dimension must be >= 1, got {self.dim}")
        if self.kind == "uniform-box" and not self.low < self.high:
            raise ConfigError("uniform-box requires low < high")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "uniform-box":
            return rng.uniform(self.low, self.high, (n, self.dim))
        return rng.standard_normal((n, self.dim))


@dataclass(frozen=True)
class LocationFamily:
    """The synthetic data model Y = mu(X) + eps with X from the feature law."""

    mean: MeanFunction
    noise: NoiseModel
    features: FeatureLaw


def sample_location_family(fam: LocationFamily, n: int, seed) -> Dataset:
    """n i.i.d. draws from the family; deterministic given the seed."""
    if n < 1:
        raise ConfigError(f"sample size must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    X = fam.features.sample(rng, n)
    Y = fam.mean(X) + fam.noise.sample(rng, n)
    return Dataset(X, Y)


def oracle_interval(fam: LocationFamily, alpha: float, x) -> PredictionInterval:
    """The shortest valid interval at level 1-alpha when the family is known:
    mu(x) +- the (1-alpha)-quantile of |eps|."""
    center = float(fam.mean(np.asarray(x, dtype=float).reshape(1, -1))[0])
    return PredictionInterval.symmetric(center, oracle_noise_quantile(fam.noise, alpha))


def optimal_length(fam: LocationFamily, level: float) -> float:
    """Minimum expected interval length over all rules with marginal coverage >= level.

    For these homoskedastic families the symmetric conditional interval is the
    density-level-set optimum, so the value is 2 x the (level)-quantile of
    |eps|; +inf at level 1 for unbounded noise.
    """
    if not (0.0 < level <= 1.0):
        raise ConfigError(f"coverage level must lie in (0, 1], got {level}")
    return 2.0 * oracle_noise_quantile(fam.noise, 1.0 - level)


def _golden_section(fn, lo: float, hi: float, tol: float) -> tuple[float, float]:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - inv_phi * (hi - lo)
    d = lo + inv_phi * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - inv_phi * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv_phi * (hi - lo)
            fd = fn(d)
    mid = (lo + hi) / 2.0
    return mid, fn(mid)


def hardness_lower_bound(fam: LocationFamily, spec: CoverageSpec) -> tuple[float, float]:
    """The infimum over c in [0, 1] of (1-alpha)/(1-c*alpha) * L(1-c*alpha*delta).

    Any method with approximate conditional coverage at (alpha, delta) over an
    unrestricted (or rich enough) class has expected length at least this
    value. Minimized on a 1e-4 grid and refined by golden-section to 1e-6 in
    c; returns (value, argmin c).
    """
    alpha, delta = spec.alpha, spec.delta

    def objective(c: float) -> float:
        return (1.0 - alpha) / (1.0 - c * alpha) * optimal_length(fam, 1.0 - c * alpha * delta)

    grid = np.linspace(0.0, 1.0, 10_001)
    values = [objective(float(c)) for c in grid]
    best_i = int(np.argmin(values))
    if math.isinf(values[best_i]):
        return math.inf, float(grid[best_i])
    lo = float(grid[max(0, best_i - 1)])
    hi = float(grid[min(len(grid) - 1, best_i + 1)])
    c_star, v_star = _golden_section(objective, lo, hi, 1e-6)
    if values[best_i] < v_star:
        return float(values[best_i]), float(grid[best_i])
    return float(v_star), float(c_star)


def _conditional_pool(
    fam: LocationFamily,
    descriptor: SetDescriptor,
    n_wanted: int,
    rng: np.random.Generator,
    draw_cap: int = REJECTION_DRAW_CAP,
) -> np.ndarray:
    """Feature draws conditioned on the descriptor, by batched rejection sampling."""
    hits: list[np.ndarray] = []
    got = 0
    drawn = 0
    batch = max(1024, 4 * n_wanted)
    while got < n_wanted:
        if drawn >= draw_cap:
            raise MassTooSmallError(
                f"rejection sampling exceeded {draw_cap} draws for {descriptor!r}"
            )
        X = fam.features.sample(rng, batch)
        drawn += batch
        mask = membership_many(descriptor, X)
        if mask.any():
            hits.append(X[mask])
            got += int(mask.sum())
    return np.vstack(hits)[:n_wanted]


def _empirical_upper_quantile(values: np.ndarray, alpha: float) -> float:
    """Empirical (1-alpha)-quantile: the ceil((1-alpha)*m)-th smallest, clamped to [1, m]."""
    m = values.shape[0]
    k = min(m, max(1, math.ceil((1.0 - alpha) * m - 1e-12)))
    return float(np.partition(values, k - 1)[k - 1])


def oracle_restricted_quantile(
    fam: LocationFamily,
    mu,
    alpha: float,
    descriptor: SetDescriptor,
    mc_trials: int = 20_000,
    seed: int = 0,
    draw_cap: int = REJECTION_DRAW_CAP,
) -> MonteCarloEstimate:
    """The (1-alpha)-quantile of |Y - mu(X)| conditional on X in the given set.

    ``mu`` is a callable mapping an (m, d) batch to mean values, or None to
    denote the family's true mean; in the latter case the residual law is the
    noise law regardless of the set, so the exact quantile is returned with
    zero standard error. Otherwise the quantile is estimated by rejection
    sampling (raising when the draw budget is exhausted), with a standard
    error from batch means.
    """
    if mu is None or mu is fam.mean:
        return MonteCarloEstimate(value=oracle_noise_quantile(fam.noise, alpha), stderr=0.0, trials=0)
    rng = np.random.default_rng(seed)
    X = _conditional_pool(fam, descriptor, mc_trials, rng, draw_cap)
    Y = fam.mean(X) + fam.noise.sample(rng, X.shape[0])
    res = np.abs(Y - np.asarray(mu(X), dtype=float))
    value = _empirical_upper_quantile(res, alpha)
    n_batches = 10
    if res.shape[0] >= 10 * n_batches:
        batches = np.array_split(res, n_batches)
        est = [_empirical_upper_quantile(b, alpha) for b in batches]
        stderr = float(np.std(est, ddof=1) / math.sqrt(n_batches))
    else:
        stderr = math.inf
    return MonteCarloEstimate(value=value, stderr=stderr, trials=res.shape[0])


def candidate_members(
    set_class: SetClass, x, fam: LocationFamily, n_reference: int, seed: int
) -> list[SetDescriptor]:
    """Candidate class members containing x, from induced subsets of a reference sample.

    This mirrors the enumeration used for the data-driven width: the class is
    discretized through the subsets it induces on a sample of feature draws
    augmented with x, and the witnesses containing x are kept.
    """
    rng = np.random.default_rng(seed)
    ref = fam.features.sample(rng, n_reference)
    aug = np.vstack([ref, np.asarray(x, dtype=float).reshape(1, -1)])
    enum = induced_subsets(set_class, aug)
    x_index = n_reference
    return [sub.witness for sub in enum.subsets if x_index in sub.indices]


def oracle_restricted_interval(
    fam: LocationFamily,
    mu,
    spec: CoverageSpec,
    set_class: SetClass,
    x,
    mc_trials: int = 20_000,
    seed: int = 0,
    n_reference: int = 64,
    mass_sample: int = 50_000,
    alpha: float | None = None,
    delta: float | None = None,
) -> PredictionInterval:
    """The oracle interval mu(x) +- sup over members containing x with mass >= delta
    of the conditional residual quantile.

    The supremum is approximated over the candidate family of
    :func:`candidate_members` with masses estimated by Monte Carlo. ``alpha``
    and ``delta`` default to the values in ``spec`` but can be overridden with
    the perturbed sandwich levels (which may be clipped to 0 or 1).
    """
    a = spec.alpha if alpha is None else alpha
    d = spec.delta if delta is None else delta
    x_arr = np.asarray(x, dtype=float).reshape(-1)
    if mu is None or mu is fam.mean:
        center = float(fam.mean(x_arr[None, :])[0])
        return PredictionInterval.symmetric(center, oracle_noise_quantile(fam.noise, a))
    rng = np.random.default_rng([seed, 1])
    mass_pool = fam.features.sample(rng, mass_sample)
    best = -math.inf
    for k, desc in enumerate(candidate_members(set_class, x_arr, fam, n_reference, seed)):
        mass = float(membership_many(desc, mass_pool).mean())
        if mass < d:
            continue
        est = oracle_restricted_quantile(fam, mu, a, desc, mc_trials, seed=[seed, 2, k])
        best = max(best, est.value)
    if best == -math.inf:
        # delta > 1 after perturbation: no set qualifies, fall back to the full space
        est = oracle_restricted_quantile(
            fam, mu, a, _full_space_descriptor(set_class), mc_trials, seed=[seed, 3]
        )
        best = est.value
    center = float(np.asarray(mu(x_arr[None, :]), dtype=float)[0])
    return PredictionInterval.symmetric(center, best)


def _full_space_descriptor(set_class: SetClass):
    from .set_classes import FullSpace

    return FullSpace(set_class.dim)


@dataclass(frozen=True)
class SandwichLevels:
    """Perturbed levels between which the data-driven width is sandwiched.

    alpha_pm = alpha -+ c_alpha * sqrt(VC * ln(n1)^2 / (delta * n1)) and
    delta_pm = delta -+ c_delta * sqrt(VC * ln(n1)^2 / n1), all clipped to
    [0, 1]. The universal constants are not pinned down by the theory, so they
    are configuration; ``clipped`` flags that some level hit the boundary and
    the sandwich statement is vacuous at these settings.
    """

    alpha_plus: float
    alpha_minus: float
    delta_plus: float
    delta_minus: float
    c_alpha: float
    c_delta: float
    clipped: bool


def sandwich_levels(
    spec: CoverageSpec, n1: int, vc: int, c_alpha: float = 1.0, c_delta: float = 1.0
) -> SandwichLevels:
    """The four perturbed (alpha, delta) levels for the oracle sandwich at sample size n1."""
    if n1 < 2:
        raise ConfigError(f"n1 must be >= 2, got {n1}")
    if vc < 1:
        raise ConfigError(f"vc must be >= 1, got {vc}")
    if c_alpha < 0 or c_delta < 0:
        raise ConfigError("sandwich constants must be >= 0")
    log_sq = math.log(n1) ** 2
    alpha_rad = c_alpha * math.sqrt(vc * log_sq / (spec.delta * n1))
    delta_rad = c_delta * math.sqrt(vc * log_sq / n1)
    raw = (
        spec.alpha + alpha_rad,
        spec.alpha - alpha_rad,
        spec.delta + delta_rad,
        spec.delta - delta_rad,
    )
    clip = lambda v: min(1.0, max(0.0, v))
    return SandwichLevels(
        alpha_plus=clip(raw[0]),
        alpha_minus=clip(raw[1]),
        delta_plus=clip(raw[2]),
        delta_minus=clip(raw[3]),
        c_alpha=c_alpha,
        c_delta=c_delta,
        clipped=any(v != clip(v) for v in raw),
    )
