"""Exception classes for kfino."""
from typing import Any, Optional


class KfinoError(Exception):
    """Base exception for kfino."""
    pass


def _at_step(message: str, step: Optional[int]) -> str:
    if step is None:
        return message
    return f"{message} (step {step})"


class DimensionError(KfinoError):
    """Array shapes are inconsistent with each other."""
    pass


class SingularCovariance(KfinoError):
    """Covariance matrix is not strictly positive definite.

    Raised when an innovation or predicted covariance cannot be factorized.
    """

    def __init__(self, message: str, step: Optional[int] = None):
        """Initialize SingularCovariance.

        Args:
            message: Error description
            step: Index of the offending step (optional)
        """
        self.step = step
        super().__init__(_at_step(message, step))


class EmptySeries(KfinoError):
    """A series with no observation was supplied."""
    pass


class DegenerateWeights(KfinoError):
    """Every hypothesis ended up with zero posterior mass.

    Usually a model misspecification, e.g. an observation outside the
    outlier support while inliers are impossible.
    """

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        super().__init__(_at_step(message, step))


class ExactSizeExceeded(KfinoError):
    """Exact enumeration requested on too long a series."""

    def __init__(self, n_steps: int, limit: int):
        self.n_steps = n_steps
        self.limit = limit
        super().__init__(
            f"Exact filtering enumerates 2^N paths; N={n_steps} exceeds the limit of {limit}"
        )


class HistoryRequired(KfinoError):
    """Operation needs per-step records that were not tracked."""
    pass


class NegativeTimeStep(KfinoError):
    """Elapsed time between two observations is negative."""

    def __init__(self, dt: float):
        self.dt = dt
        super().__init__(f"Time step must be non-negative, got {dt}")


class TimeOrderError(KfinoError):
    """Timestamps are not strictly increasing."""

    def __init__(self, message: str, row: Optional[int] = None):
        """Initialize TimeOrderError.

        Args:
            message: Error description
            row: File line or 1-based position where order breaks
        """
        self.row = row
        if row is not None:
            message = f"{message} (row {row})"
        super().__init__(message)


class SingularMStep(KfinoError):
    """Normal equations of the M-step cannot be solved.

    Carries the fallback parameters the caller should continue with.
    """

    def __init__(self, message: str, fallback: Any = None):
        self.fallback = fallback
        super().__init__(message)


class ParseError(KfinoError):
    """Series or configuration file parsing error.

    Raised when file content is invalid or malformed.
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        """Initialize ParseError.

        Args:
            message: Error description
            line: Line number where error occurred (optional)
            column: Column number where error occurred (optional)
        """
        self.line = line
        self.column = column

        if line is not None and column is not None:
            full_message = f"{message} (line {line}, column {column})"
        elif line is not None:
            full_message = f"{message} (line {line})"
        else:
            full_message = message

        super().__init__(full_message)


class ValidationError(KfinoError):
    """Parameter validation error.

    Raised when a parameter or configuration value fails validation.
    """

    def __init__(self, field: str, message: str):
        """Initialize ValidationError.

        Args:
            field: Name of the field that failed validation
            message: Error description
        """
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class FileError(KfinoError):
    """File operation error.

    Raised when file operations fail (read, write, not found, etc.).
    """
    pass
