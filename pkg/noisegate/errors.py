"""Exception hierarchy for noisegate.

Every error carries the process exit code the CLI reports for it.
"""
from __future__ import annotations


class NoisegateError(Exception):
    """Base class for all noisegate errors."""

    exit_code = 1


class ConfigError(NoisegateError):
    """Invalid or out-of-range configuration."""

    exit_code = 1


class DataError(NoisegateError):
    """The input data cannot support the requested operation."""

    exit_code = 2


class MissingFile(DataError):
    pass


class MissingTargetColumn(DataError):
    def __init__(self, column: str, available: list[str] | None = None):
        self.column = column
        self.available = list(available or [])
        super().__init__(f"target column {column!r} not found (columns: {', '.join(self.available)})")


class NonNumericCell(DataError):
    def __init__(self, row: int, column: str, value: object):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric cell at row {row}, column {column!r}: {value!r}")


class EmptyDataset(DataError):
    pass


class NonPositiveInput(DataError):
    pass


class DegenerateTarget(DataError):
    """All target values are identical, so no cutpoint separates them."""


class EmptyClass(DataError):
    pass


class InsufficientClass(DataError):
    pass


class EmptyExtremes(DataError):
    pass


class UndefinedMetric(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ResampleError(DataError):
    """Bootstrap could not draw a resample with both classes present."""


class InfeasibleAnalysis(NoisegateError):
    """The analysis ran but its result cannot be used (e.g. no noisy area)."""

    exit_code = 3
