"""Exception types shared across calnet."""

from __future__ import annotations


class CalnetError(Exception):
    """Base class for fatal calnet errors."""


class SchemaError(CalnetError, ValueError):
    """An input file does not match its documented schema."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UndefinedMetricError(CalnetError, ValueError):
    """A metric is undefined on the given input (e.g. 0/0 on an empty network)."""
