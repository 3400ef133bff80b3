"""Exception types shared across the package."""


class DataError(Exception):
    """Raised when input files or records violate the documented schemas."""


class UsageError(Exception):
    """Raised for bad command-line invocations (maps to exit code 1)."""
