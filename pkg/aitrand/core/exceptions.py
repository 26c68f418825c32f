"""
Error hierarchy.

Every error carries the process exit code the CLI uses for it:
1 for configuration and parameter problems, 2 for problems with the data.
"""
from typing import Any


class AitrandError(Exception):
    exit_code = 2


class ConfigError(AitrandError):
    exit_code = 1


class ParameterError(AitrandError, ValueError):
    exit_code = 1


class ResourceError(AitrandError):
    """Requested work does not fit the configured resource limits."""

    exit_code = 1

    def __init__(self, message: str, advisory: str = ""):
        super().__init__(f"{message}. {advisory}".strip() if advisory else message)
        self.advisory = advisory


class DataError(AitrandError):
    exit_code = 2


class LengthError(DataError, ValueError):
    pass


class ExhaustionError(DataError):
    """A BitCursor was asked for more bits than remain."""

    def __init__(self, requested: int, remaining: int):
        super().__init__(f"requested {requested} bits but only {remaining} remain")
        self.requested = requested
        self.remaining = remaining


class InputTooShortError(DataError):
    pass


class SampleTooShortError(DataError):
    """The sample ran out before a sequential test reached its verdict."""

    def __init__(self, message: str, progress: dict[str, Any] | None = None):
        super().__init__(message)
        self.progress = progress or {}


class DegenerateSourceError(DataError):
    pass


class DegenerateSampleError(DataError):
    pass


class DataIntegrityError(DataError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class SourceIOError(DataError, OSError):
    pass
