"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class FusegramError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FusegramError):
    """Invalid configuration, parameter domain violation, or bad usage."""


class DataError(FusegramError):
    """Malformed or contract-violating input data."""


class NumericError(FusegramError):
    """Numeric failure: degenerate input, non-finite values, divergence."""
