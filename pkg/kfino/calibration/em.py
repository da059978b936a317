"""Expectation-maximization calibration of (mu1, p, m).

Conditionally on an indicator path, every filtered mean of the weight model
is an affine function ``a * mu1 + b * m + c`` whose coefficients do not
depend on (mu1, m). The filter carries these coefficients per hypothesis, so
the E-step reduces to weighted sums and the M-step to a 2x2 linear solve.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, field_validator

from kfino.core.filter import kfino_exact, kfino_filter
from kfino.core.wow import build_steps, initial_belief
from kfino.models.gaussian import GaussianBelief, StepModel
from kfino.models.wow import WowParams
from kfino.utils.exceptions import SingularMStep, ValidationError
from kfino.utils.validation import validate_theta

logger = logging.getLogger(__name__)

SINGULAR_TOL = 1e-12


class Theta(NamedTuple):
    """Individual parameters estimated by EM."""
    mu1: float
    p: float
    m: float


@dataclass(frozen=True)
class LinearCoeffs:
    """Coefficients of a filtered mean: ``a * mu1 + b * m + c``.

    Fields may be floats or equally shaped arrays.
    """
    a: object
    b: object
    c: object

    def mean(self, mu1: float, m: float):
        return self.a * mu1 + self.b * m + self.c

    def as_array(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(self.a, self.b, self.c), axis=-1).astype(float)

    @classmethod
    def from_array(cls, array: np.ndarray) -> "LinearCoeffs":
        array = np.asarray(array, dtype=float)
        return cls(array[..., 0], array[..., 1], array[..., 2])


def coeffs_init(y1: float, sigma1: float, sigma_p2: float) -> Tuple[LinearCoeffs, LinearCoeffs]:
    """Coefficients of the outlier and inlier branches of the first step.

    Raises:
        ValidationError: If ``sigma1 + sigma_p2`` is not positive
    """
    total = sigma1 + sigma_p2
    if not total > 0:
        raise ValidationError("sigma1", f"sigma1 + sigma_p2 must be positive, got {total}")
    return (
        LinearCoeffs(1.0, 0.0, 0.0),
        LinearCoeffs(sigma_p2 / total, 0.0, y1 * sigma1 / total),
    )


def coeffs_propagate(lc: LinearCoeffs, a_rate: float, dt: float) -> LinearCoeffs:
    """Coefficients after ``dt`` days of mean reversion."""
    decay = math.expm1(-a_rate * dt)
    keep = 1.0 + decay
    return LinearCoeffs(keep * lc.a, keep * lc.b - decay, keep * lc.c)


def coeffs_update(lc: LinearCoeffs, sigma_pred, sigma_p2: float, y: float) -> LinearCoeffs:
    """Coefficients after correction by an inlier observation.

    ``sigma_pred`` may be an array matching the coefficient fields.
    """
    total = np.asarray(sigma_pred, dtype=float) + sigma_p2
    shrink = sigma_p2 / total
    gain = sigma_pred / total
    return LinearCoeffs(shrink * lc.a, shrink * lc.b, shrink * lc.c + gain * y)


class WowCoefficientTracker:
    """Carries LinearCoeffs through the filter for the weight model."""

    def __init__(self, params: WowParams):
        self.params = params

    def initial(self, y: np.ndarray, step: StepModel, init: GaussianBelief) -> np.ndarray:
        outlier, inlier = coeffs_init(float(y[0]), float(init.cov[0, 0]), float(step.R[0, 0]))
        return np.stack([outlier.as_array(), inlier.as_array()])

    def propagate(self, coeffs: np.ndarray, step: StepModel) -> np.ndarray:
        lc = coeffs_propagate(LinearCoeffs.from_array(coeffs), self.params.a, step.dt)
        return lc.as_array()

    def update(
        self, coeffs: np.ndarray, pred_covs: np.ndarray, y: np.ndarray, step: StepModel
    ) -> np.ndarray:
        lc = coeffs_update(
            LinearCoeffs.from_array(coeffs), pred_covs[:, 0, 0], float(step.R[0, 0]), float(y[0])
        )
        return lc.as_array()


@dataclass(frozen=True)
class EmSuffStats:
    """Weighted sums of the E-step.

    The M-step solves ``a * mu1 + c * m = ya`` and ``c * mu1 + b * m = yb``.
    ``z_mass`` is the expected number of inliers and ``loglik`` the data
    log-likelihood at the parameters the statistics were computed with.
    """
    ya: float
    a: float
    c: float
    yb: float
    b: float
    z_mass: float
    loglik: float


class EmConfig(BaseModel):
    """EM settings. ``beam=None`` runs exact E-steps."""
    max_iters: int = 100
    param_tol: float = 1e-4
    p_clamp: float = 1e-6
    beam: Optional[int] = 1024
    exact_prefix: int = 10

    @field_validator('max_iters', 'exact_prefix')
    @classmethod
    def validate_nonnegative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be non-negative")
        return v

    @field_validator('param_tol')
    @classmethod
    def validate_tol(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator('p_clamp')
    @classmethod
    def validate_clamp(cls, v: float) -> float:
        """Validate the clamp leaves a non-empty interval for p."""
        if not 0.0 <= v < 0.5:
            raise ValueError("must be in [0, 0.5)")
        return v

    @field_validator('beam')
    @classmethod
    def validate_beam(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 2:
            raise ValueError("must be at least 2")
        return v


@dataclass
class EmResult:
    """Trajectory of an EM run; ``logliks[i]`` is evaluated at ``thetas[i]``."""
    thetas: List[Theta]
    logliks: List[float]
    converged: bool
    warnings: List[str] = field(default_factory=list)

    @property
    def theta(self) -> Theta:
        return self.thetas[-1]

    @property
    def iterations(self) -> int:
        return len(self.thetas) - 1


def em_e_step(
    ys: Sequence[float],
    times: Sequence[float],
    params: WowParams,
    theta: Theta,
    beam: Optional[int] = None,
    exact_prefix: int = 0,
) -> EmSuffStats:
    """Compute the E-step sums at ``theta``.

    The posterior probability of each path prefix followed by an inlier is
    approximated by the final weights of the surviving hypotheses.

    Args:
        ys: Observations
        times: Timestamps in days
        params: Fixed model parameters; mu1, p and m are taken from ``theta``
        theta: Current parameters
        beam: Hypotheses kept per step, or None for the exact filter
        exact_prefix: Leading steps without truncation

    Raises:
        DegenerateWeights: Propagated from the filter
    """
    current = params.with_theta(*theta)
    steps = build_steps(current, times)
    init = initial_belief(current)
    tracker = WowCoefficientTracker(current)
    if beam is None:
        result = kfino_exact(ys, steps, init, track_history=True, tracker=tracker)
    else:
        result = kfino_filter(
            ys, steps, init, beam, exact_prefix, track_history=True, tracker=tracker
        )

    final = result.final
    weights = final.weights
    rows = final.ancestry()
    totals = np.zeros(6)
    for k, (record, step) in enumerate(zip(final.history, steps)):
        here = rows[k]
        inlier_mass = weights * record.bits[here]
        a, b, c = np.moveaxis(record.pred_coeffs[here], -1, 0)
        scale = inlier_mass / (record.pred_covs[here][:, 0, 0] + step.R[0, 0])
        residual = float(ys[k]) - c
        totals += [
            np.sum(scale * a * residual),
            np.sum(scale * a * a),
            np.sum(scale * a * b),
            np.sum(scale * b * residual),
            np.sum(scale * b * b),
            np.sum(inlier_mass),
        ]
    ya, a_sum, c_sum, yb, b_sum, z_mass = totals.tolist()
    return EmSuffStats(ya=ya, a=a_sum, c=c_sum, yb=yb, b=b_sum, z_mass=z_mass, loglik=result.loglik)


def em_m_step(stats: EmSuffStats, n: int, p_clamp: float = 1e-6) -> Theta:
    """Closed-form maximization.

    Raises:
        ValidationError: If ``n`` is not positive
        SingularMStep: If the normal equations are singular; ``fallback``
            carries the updated p, ``ya / a`` as mu1 when only mu1 is
            identifiable and NaN for what cannot be estimated
    """
    if n < 1:
        raise ValidationError("n", f"must be positive, got {n}")
    p = min(max(stats.z_mass / n, p_clamp), 1.0 - p_clamp)
    det = stats.c ** 2 - stats.a * stats.b
    if abs(det) <= SINGULAR_TOL * stats.a * stats.b:
        mu1 = stats.ya / stats.a if stats.a > 0 and stats.b == 0 else math.nan
        raise SingularMStep(
            f"M-step normal equations are singular (C^2 - AB = {det:.3g})",
            fallback=Theta(mu1=mu1, p=p, m=math.nan),
        )
    mu1 = (stats.c * stats.yb - stats.b * stats.ya) / det
    m = (stats.ya * stats.c - stats.a * stats.yb) / det
    return Theta(mu1=mu1, p=p, m=m)


def em_fit(
    ys: Sequence[float],
    times: Sequence[float],
    params: WowParams,
    theta0: Theta,
    config: Optional[EmConfig] = None,
) -> EmResult:
    """Alternate E and M steps from ``theta0``.

    Stops when no parameter moves by ``param_tol`` or more, or after
    ``max_iters`` M-steps. A singular M-step keeps the previous mu1 and m.

    Raises:
        ValidationError: If ``theta0`` is out of bounds
    """
    config = config or EmConfig()
    theta = Theta(*theta0)
    is_valid, results = validate_theta(theta.mu1, theta.p, theta.m, params.m_min, params.m_max)
    if not is_valid:
        failed = next(r for r in results if not r.is_valid)
        raise ValidationError(failed.field, failed.message)

    result = EmResult(thetas=[], logliks=[], converged=False)
    n = len(ys)
    for iteration in range(config.max_iters + 1):
        stats = em_e_step(ys, times, params, theta, config.beam, config.exact_prefix)
        result.thetas.append(theta)
        result.logliks.append(stats.loglik)
        logger.info(
            f"EM iteration {iteration}: mu1={theta.mu1:.6g} p={theta.p:.6g} "
            f"m={theta.m:.6g} loglik={stats.loglik:.10g}"
        )
        if result.converged or iteration == config.max_iters:
            break

        try:
            new_theta = em_m_step(stats, n, config.p_clamp)
        except SingularMStep as e:
            logger.warning(f"EM iteration {iteration}: {e}; keeping previous mu1 and m")
            result.warnings.append(f"iteration {iteration}: {e}")
            fallback = e.fallback
            new_theta = Theta(
                mu1=fallback.mu1 if math.isfinite(fallback.mu1) else theta.mu1,
                p=fallback.p,
                m=fallback.m if math.isfinite(fallback.m) else theta.m,
            )
        change = max(abs(new - old) for new, old in zip(new_theta, theta))
        result.converged = change < config.param_tol
        theta = new_theta
    return result
