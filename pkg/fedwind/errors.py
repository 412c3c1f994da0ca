"""Exception hierarchy for fedwind.

Every error derives from :class:`FedwindError` and mixes in the closest
builtin so callers can catch either (``except ValueError`` keeps working for
validation problems, ``except FileNotFoundError`` for missing inputs).
"""

from __future__ import annotations

__all__ = [
    "FedwindError",
    "MissingFile",
    "SchemaViolation",
    "NonUniformTimestamps",
    "InvalidParams",
    "TooFewTurbines",
    "EmptyPartition",
    "SeriesTooShort",
    "TooManyClients",
    "DimensionMismatch",
    "SingleCluster",
    "EmptyCluster",
    "InsufficientHistory",
    "LengthMismatch",
    "EmptyInput",
    "DimsTooLarge",
    "ReportIOError",
    "ConfigError",
    "MissingArtifact",
    "StageError",
]


class FedwindError(Exception):
    """Base class for all fedwind errors."""


class MissingFile(FedwindError, FileNotFoundError):
    def __init__(self, path: object) -> None:
        super().__init__(f"file not found: {path}")
        self.path = str(path)


class SchemaViolation(FedwindError, ValueError):
    def __init__(self, message: str, *, row: int | None = None, column: str | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")
        self.row = row
        self.column = column


class NonUniformTimestamps(FedwindError, ValueError):
    def __init__(self, turbine_id: str, detail: str = "") -> None:
        msg = f"timestamps of turbine {turbine_id!r} are not a gap-free hourly grid"
        super().__init__(f"{msg}: {detail}" if detail else msg)
        self.turbine_id = turbine_id


class InvalidParams(FedwindError, ValueError):
    pass


class TooFewTurbines(FedwindError, ValueError):
    pass


class EmptyPartition(FedwindError, ValueError):
    pass


class SeriesTooShort(FedwindError, ValueError):
    pass


class TooManyClients(FedwindError, ValueError):
    pass


class DimensionMismatch(FedwindError, ValueError):
    pass


class SingleCluster(FedwindError, ValueError):
    pass


class EmptyCluster(FedwindError, ValueError):
    pass


class InsufficientHistory(FedwindError, ValueError):
    pass


class LengthMismatch(FedwindError, ValueError):
    pass


class EmptyInput(FedwindError, ValueError):
    pass


class DimsTooLarge(FedwindError, ValueError):
    pass


class ReportIOError(FedwindError, OSError):
    pass


class ConfigError(FedwindError, ValueError):
    pass


class MissingArtifact(FedwindError, FileNotFoundError):
    def __init__(self, stage: str, path: object) -> None:
        super().__init__(f"stage {stage!r} needs artifact {path}; run the previous stage first")
        self.stage = stage
        self.path = str(path)


class StageError(FedwindError, RuntimeError):
    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
