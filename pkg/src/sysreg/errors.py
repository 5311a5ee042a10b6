"""Exception hierarchy.

The CLI maps these onto exit codes: usage problems exit 1, anything wrong with
the input data exits 2, numerically degenerate configurations exit 3.
"""

from __future__ import annotations


class SysregError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(SysregError, ValueError):
    """Invalid arguments or configuration."""

    exit_code = 1


class DataError(SysregError, ValueError):
    """Input data could not be used."""

    exit_code = 2


class ParseError(DataError):
    """A data row could not be parsed."""

    def __init__(self, row: int, message: str) -> None:
        self.row = row
        super().__init__(f"row {row}: {message}")


class SchemaError(DataError):
    """Required columns are missing from the input."""


class DomainError(DataError):
    """Inputs are well formed but violate a design or population constraint."""


class DegenerateError(SysregError, ArithmeticError):
    """A quantity the theory divides by is zero or of the wrong sign."""

    exit_code = 3
