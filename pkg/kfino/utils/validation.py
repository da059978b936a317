"""Validation helpers for series and calibration parameters.

Provides validation with clear error messages.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple
import math

import numpy as np

from kfino.utils.exceptions import TimeOrderError, ValidationError


@dataclass
class ValidationResult:
    """Result of a validation check."""
    is_valid: bool
    field: str
    message: str = ""


def validate_time_order(times: Sequence[float]) -> None:
    """Check that timestamps are finite and strictly increasing.

    Args:
        times: Timestamps in days

    Raises:
        TimeOrderError: Naming the 1-based position of the first offending
            timestamp
    """
    times = np.asarray(times, dtype=float)
    bad = np.flatnonzero(~np.isfinite(times))
    if bad.size:
        raise TimeOrderError(f"Timestamp must be finite, got {times[bad[0]]}", row=int(bad[0]) + 1)
    steps = np.diff(times)
    bad = np.flatnonzero(steps <= 0)
    if bad.size:
        k = int(bad[0]) + 1
        raise TimeOrderError(
            f"Timestamps must be strictly increasing, got {times[k]} after {times[k - 1]}",
            row=k + 1,
        )


def validate_observations(values: Sequence[float], first: int = 1) -> ValidationResult:
    """Validate that every observation is a finite number.

    Args:
        values: Observations, scalars or vectors
        first: Position reported for the first observation

    Returns:
        ValidationResult naming the position of the first non-finite observation
    """
    field = "y"
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size == 0:
        return ValidationResult(is_valid=True, field=field)
    finite = np.isfinite(values).reshape(values.shape[0], -1).all(axis=1)
    bad = np.flatnonzero(~finite)
    if bad.size:
        return ValidationResult(
            is_valid=False,
            field=field,
            message=f"Observation {int(bad[0]) + first} must be finite, got {values[bad[0]]}"
        )
    return ValidationResult(is_valid=True, field=field)


def _validate_weight(field: str, value: float, m_min: float, m_max: float) -> ValidationResult:
    if not math.isfinite(value) or not m_min < value < m_max:
        return ValidationResult(
            is_valid=False,
            field=field,
            message=f"{field} must be in ({m_min}, {m_max}), got {value}"
        )
    return ValidationResult(is_valid=True, field=field)


def validate_theta(
    mu1: float, p: float, m: float, m_min: float, m_max: float
) -> Tuple[bool, List[ValidationResult]]:
    """Validate an EM starting point against the outlier support.

    Args:
        mu1: Initial mean
        p: Inlier probability
        m: Asymptotic weight
        m_min, m_max: Outlier support

    Returns:
        Tuple of (all_valid, list of ValidationResults)
    """
    results = [
        _validate_weight("mu1", mu1, m_min, m_max),
        _validate_weight("m", m, m_min, m_max),
    ]
    if not 0.0 <= p <= 1.0:
        results.append(ValidationResult(
            is_valid=False,
            field="p",
            message=f"p must be in [0, 1], got {p}"
        ))
    else:
        results.append(ValidationResult(is_valid=True, field="p"))

    all_valid = all(r.is_valid for r in results)
    return all_valid, results


def from_pydantic(error) -> ValidationError:
    """Convert the first error of a pydantic ValidationError."""
    first = error.errors()[0]
    field = ".".join(str(part) for part in first.get("loc", ())) or "value"
    message = first.get("msg", str(error))
    if first.get("type") == "extra_forbidden":
        message = "unknown key"
    if message.startswith("Value error, "):
        message = message[len("Value error, "):]
    return ValidationError(field, message)
