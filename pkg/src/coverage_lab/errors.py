"""Exception hierarchy shared across the package."""


class CoverageLabError(Exception):
    """Base class for all package errors."""


class ConfigError(CoverageLabError, ValueError):
    """Invalid configuration: bad sizes, unknown keys, out-of-range parameters."""


class DataError(CoverageLabError, ValueError):
    """Malformed input data: dimension mismatches, non-finite values, bad CSV rows."""


class ShatterLimitError(CoverageLabError):
    """Shattering check requested on a point set above the exhaustive-check cap."""


class MassTooSmallError(CoverageLabError):
    """Rejection sampling exhausted its draw budget before hitting the target set."""
