"""Synthetic weighing series.

Each generator draws from its own random stream derived from the seed, so
changing one stage never shifts the draws of another.
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from kfino.core.wow import ou_transition, trapezoid_sample
from kfino.models.wow import WowParams
from kfino.utils.exceptions import ValidationError
from kfino.utils.validation import validate_time_order

TIMES_STREAM = 0
PATH_STREAM = 1
NOISE_STREAM = 2


@dataclass(frozen=True, eq=False)
class SyntheticSeries:
    """Simulated series with its ground truth; ``z_true`` is True for inliers."""
    times: np.ndarray
    x_hidden: np.ndarray
    z_true: np.ndarray
    y_obs: np.ndarray
    seed: int

    def __len__(self) -> int:
        return self.times.shape[0]


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


def sample_times(rate: float, horizon: float, seed: int) -> np.ndarray:
    """Homogeneous Poisson event times on (0, horizon].

    Raises:
        ValidationError: If ``rate`` or ``horizon`` is not positive
    """
    if not rate > 0:
        raise ValidationError("rate", f"must be positive, got {rate}")
    if not horizon > 0:
        raise ValidationError("horizon", f"must be positive, got {horizon}")
    rng = _rng(seed, TIMES_STREAM)
    count = rng.poisson(rate * horizon)
    return np.sort(horizon - rng.uniform(0.0, horizon, size=count))


def simulate_ou(params: WowParams, times: Sequence[float], seed: int) -> np.ndarray:
    """Hidden weights at ``times`` drawn from the exact OU transitions."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.empty(0)
    validate_time_order(times)
    rng = _rng(seed, PATH_STREAM)
    shocks = rng.standard_normal(times.size)
    x = np.empty(times.size)
    x[0] = params.mu1 + np.sqrt(params.sigma1) * shocks[0]
    for k in range(1, times.size):
        A, b, Q = ou_transition(params, times[k] - times[k - 1])
        x[k] = A * x[k - 1] + b + np.sqrt(Q) * shocks[k]
    return x


def corrupt(x_hidden: Sequence[float], params: WowParams, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Replace a fraction ``1 - p`` of noisy observations by trapezoidal outliers.

    Returns:
        Tuple of (observations, inlier indicators)
    """
    x_hidden = np.asarray(x_hidden, dtype=float)
    rng = _rng(seed, NOISE_STREAM)
    z_true = rng.random(x_hidden.size) < params.p
    noise = np.sqrt(params.sigma_p2) * rng.standard_normal(x_hidden.size)
    outliers = trapezoid_sample(rng.random(x_hidden.size), params.m_min, params.m_max)
    return np.where(z_true, x_hidden + noise, outliers), z_true


def simulate_series(params: WowParams, rate: float, horizon: float, seed: int) -> SyntheticSeries:
    """Simulate observation times, hidden path and corrupted observations."""
    times = sample_times(rate, horizon, seed)
    x_hidden = simulate_ou(params, times, seed)
    y_obs, z_true = corrupt(x_hidden, params, seed)
    return SyntheticSeries(times=times, x_hidden=x_hidden, z_true=z_true, y_obs=y_obs, seed=seed)
