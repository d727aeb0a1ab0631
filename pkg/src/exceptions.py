"""
Error types shared across the package.

Every error carries the CLI exit code it maps to, so `src.cli` can turn
any failure into a stable process status without a lookup table.
"""

from __future__ import annotations

from typing import Optional, Sequence

from src.config import EXIT_CODES


class SurvKANError(Exception):
    """Base class for all package errors."""

    exit_code: int = EXIT_CODES["data"]


class InvalidArgumentError(SurvKANError, ValueError):
    """An argument is outside the domain of the operation."""


class UsageError(InvalidArgumentError):
    """Invalid command-line input (unknown formula, malformed flag value)."""

    exit_code = EXIT_CODES["usage"]


class SchemaError(InvalidArgumentError):
    """A CSV file does not match the declared schema."""

    def __init__(self, message: str, rows: Optional[Sequence[int]] = None) -> None:
        self.rows = list(rows or [])
        if self.rows:
            shown = ", ".join(str(r) for r in self.rows[:10])
            more = "" if len(self.rows) <= 10 else f" (+{len(self.rows) - 10} more)"
            message = f"{message} [rows: {shown}{more}]"
        super().__init__(message)


class InvalidStateError(SurvKANError, RuntimeError):
    """An operation was called on an object in the wrong lifecycle stage."""

    exit_code = EXIT_CODES["usage"]

    def __init__(self, message: str, hint: Optional[str] = None) -> None:
        self.hint = hint
        if hint:
            message = f"{message} (hint: {hint})"
        super().__init__(message)


class PruneTooAggressiveError(SurvKANError):
    """Pruning at the requested threshold disconnects the output node."""

    exit_code = EXIT_CODES["numerical"]

    def __init__(self, threshold: float, max_feasible_threshold: float) -> None:
        self.threshold = threshold
        self.max_feasible_threshold = max_feasible_threshold
        super().__init__(
            f"Pruning at threshold {threshold:.6g} disconnects the output; "
            f"the largest feasible threshold is {max_feasible_threshold:.6g}"
        )


class UndefinedMetricError(SurvKANError, ValueError):
    """A metric has no defined value on the given data (e.g. no comparable pairs)."""

    exit_code = EXIT_CODES["numerical"]


class DivergedError(SurvKANError, RuntimeError):
    """Training produced a non-finite loss."""

    exit_code = EXIT_CODES["numerical"]

    def __init__(self, step: int, value: float) -> None:
        self.step = step
        self.value = value
        super().__init__(f"Loss diverged at step {step} (value={value})")


class UnfittableOperatorError(SurvKANError, ValueError):
    """No affine parameters place the samples inside the operator's domain."""

    exit_code = EXIT_CODES["numerical"]

    def __init__(self, operator: str) -> None:
        self.operator = operator
        super().__init__(f"Operator '{operator}' has no domain-valid affine fit on these samples")
