"""Exception types shared across the package.

The CLI maps ValidationError (and subclasses) to exit code 1 and every
other failure to exit code 2, so raising the right class here is part of
the interface contract.
"""


class M3simError(Exception):
    """Base class for all package errors."""


class ValidationError(M3simError, ValueError):
    """Input violates a documented invariant (bad value, bad schema, bad config)."""


class ParseError(ValidationError):
    """A file could not be parsed; message carries file and line context."""

    def __init__(self, message, path=None, line=None):
        ctx = ""
        if path is not None:
            ctx = f"{path}: "
        if line is not None:
            ctx += f"line {line}: "
        super().__init__(ctx + message)
        self.path = path
        self.line = line


class SchedulingError(ValidationError):
    """A workload cannot be scheduled on the given fleet."""


class CoverageError(ValidationError):
    """A trace does not cover the time span an operation needs."""
