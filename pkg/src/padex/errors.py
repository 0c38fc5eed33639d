"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
GuardError -> 3.
"""


class PadexError(Exception):
    """Base class for package-specific errors."""


class ConfigError(PadexError, ValueError):
    """Invalid configuration or usage (bad parameter values, unknown keys)."""


class DataError(PadexError):
    """Broken input data or I/O artifacts (parse failures, missing files)."""


class GuardError(PadexError):
    """A size guard was violated (e.g. exact enumeration requested too large)."""
