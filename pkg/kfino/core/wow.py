"""Ornstein-Uhlenbeck weight model on irregular timestamps."""
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from kfino.models.gaussian import GaussianBelief, StepModel
from kfino.models.wow import WowParams
from kfino.utils.exceptions import EmptySeries, NegativeTimeStep
from kfino.utils.validation import validate_time_order


def ou_transition(params: WowParams, dt: float) -> Tuple[float, float, float]:
    """Exact discretization of the OU dynamics over ``dt`` days.

    Returns:
        Tuple of (A, b, Q)

    Raises:
        NegativeTimeStep: If ``dt`` is negative
    """
    if dt < 0:
        raise NegativeTimeStep(dt)
    decay = math.expm1(-params.a * dt)
    A = 1.0 + decay
    b = -params.m * decay
    Q = -params.sigma_m2 / (2.0 * params.a) * math.expm1(-2.0 * params.a * dt)
    return A, b, Q


def trapezoid_logpdf(y: float, m_min: float, m_max: float) -> float:
    """Log of the trapezoidal outlier density, -inf outside [m_min, m_max]."""
    if not m_min <= y <= m_max:
        return -math.inf
    length = m_max - m_min
    return math.log(2.0 / (6.0 * length) + 8.0 * (y - m_min) / (6.0 * length ** 2))


def trapezoid_sample(u, m_min: float, m_max: float):
    """Inverse CDF of the trapezoidal density; ``u`` may be an array."""
    s = (-1.0 + np.sqrt(1.0 + 24.0 * np.asarray(u, dtype=float))) / 4.0
    return m_min + (m_max - m_min) * s


@dataclass(frozen=True)
class TrapezoidDensity:
    """Trapezoidal outlier log-density, callable on a length-1 observation."""
    m_min: float
    m_max: float

    @property
    def support(self) -> Tuple[float, float]:
        return self.m_min, self.m_max

    def __call__(self, y) -> float:
        return trapezoid_logpdf(float(np.ravel(y)[0]), self.m_min, self.m_max)


@dataclass(frozen=True)
class UniformDensity:
    """Uniform outlier log-density on [low, high]."""
    low: float
    high: float

    @property
    def support(self) -> Tuple[float, float]:
        return self.low, self.high

    def __call__(self, y) -> float:
        value = float(np.ravel(y)[0])
        if not self.low <= value <= self.high:
            return -math.inf
        return -math.log(self.high - self.low)


def initial_belief(params: WowParams) -> GaussianBelief:
    """Prior on the first weight."""
    return GaussianBelief.scalar(params.mu1, params.sigma1)


def build_steps(params: WowParams, times: Sequence[float]) -> List[StepModel]:
    """Build one StepModel per timestamp.

    The first step only carries the observation part; its dynamics are the
    identity because the prior already describes the first weight.

    Raises:
        EmptySeries: If ``times`` is empty
        TimeOrderError: If ``times`` is not strictly increasing
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise EmptySeries("Cannot build a model for an empty series")
    validate_time_order(times)

    density = TrapezoidDensity(params.m_min, params.m_max)
    steps = [
        StepModel.scalar(
            R=params.sigma_p2, p_inlier=params.p, outlier_logpdf=density, index=1
        )
    ]
    for k in range(1, times.size):
        dt = float(times[k] - times[k - 1])
        A, b, Q = ou_transition(params, dt)
        steps.append(
            StepModel.scalar(
                A=A, b=b, Q=Q, R=params.sigma_p2, p_inlier=params.p,
                outlier_logpdf=density, index=k + 1, dt=dt,
            )
        )
    return steps
