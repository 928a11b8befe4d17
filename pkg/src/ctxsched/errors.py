"""Exception types shared across the toolkit."""

from __future__ import annotations

from typing import Iterable


class ToolkitError(Exception):
    """Base class for every error raised by this package."""


class StreamParseError(ToolkitError):
    """A stream file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class ValidationError(ToolkitError):
    """An input violates a documented invariant or schema."""


class InfeasibleError(ToolkitError):
    """Constraints cannot all be satisfied; names the labels left uncovered."""

    def __init__(self, message: str, uncovered: Iterable[int] = ()):
        super().__init__(message)
        self.uncovered = tuple(sorted(uncovered))


class UncoverableLabelError(ToolkitError):
    """Labels that no context can serve at the requested accuracy threshold."""

    def __init__(self, message: str, labels: Iterable[int] = (), frame: int | None = None):
        super().__init__(message)
        self.labels = tuple(sorted(labels))
        self.frame = frame
