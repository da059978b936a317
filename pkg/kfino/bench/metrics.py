"""Reconstruction and classification metrics."""
from typing import Sequence

import numpy as np

from kfino.utils.exceptions import DimensionError, EmptySeries


def _pair(first, second, kind) -> tuple:
    first = np.asarray(first, dtype=kind)
    second = np.asarray(second, dtype=kind)
    if first.shape != second.shape:
        raise DimensionError(f"Sequences of shapes {first.shape} and {second.shape} differ")
    if first.size == 0:
        raise EmptySeries("Metrics need at least one point")
    return first, second


def mse(x_hidden: Sequence[float], x_hat: Sequence[float]) -> float:
    """Square root of the summed squared errors, divided by the length.

    This is the error measure of the benchmark, not the root mean square.
    """
    x_hidden, x_hat = _pair(x_hidden, x_hat, float)
    return float(np.sqrt(np.sum((x_hidden - x_hat) ** 2)) / x_hidden.size)


def accuracy(z_true: Sequence[bool], z_map: Sequence[bool]) -> float:
    """Fraction of points whose indicator is classified correctly."""
    z_true, z_map = _pair(z_true, z_map, bool)
    return float(np.mean(z_true == z_map))
