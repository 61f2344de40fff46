"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataFormatError -> 3,
anything else -> 4.
"""


class SalpError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SalpError):
    """Invalid run configuration (bad flag values, missing paths)."""


class DataFormatError(SalpError):
    """A dataset, split, or session file violates its format contract."""


class SessionError(SalpError):
    """An operation is not valid for the current session state."""
