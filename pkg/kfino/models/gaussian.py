"""Gaussian belief and per-step model data types."""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from kfino.utils.exceptions import DimensionError, ValidationError

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10
DENSITY_MASS_TOL = 1e-6

OutlierLogPdf = Callable[[np.ndarray], float]


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    """Mean vector and covariance matrix of a hidden state."""
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float, ndmin=1)
        cov = np.array(self.cov, dtype=float, ndmin=2)
        if mean.ndim != 1 or cov.shape != (mean.shape[0], mean.shape[0]):
            raise DimensionError(
                f"Belief mean of shape {mean.shape} does not match covariance of shape {cov.shape}"
            )
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))

    @classmethod
    def scalar(cls, mean: float, var: float) -> "GaussianBelief":
        """Build a one-dimensional belief."""
        return cls(np.array([mean]), np.array([[var]]))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def is_valid(self) -> bool:
        """Check the symmetry and positive semi-definiteness invariants."""
        if np.max(np.abs(self.cov - self.cov.T), initial=0.0) >= SYMMETRY_TOL:
            return False
        return bool(np.all(np.linalg.eigvalsh(self.cov) >= -PSD_TOL))


def _integrate_density(logpdf: OutlierLogPdf) -> float:
    low, high = getattr(logpdf, "support", (-math.inf, math.inf))
    mass, _ = quad(lambda y: math.exp(logpdf(np.array([y]))), low, high, limit=200)
    return mass


_cached_density_mass = lru_cache(maxsize=128)(_integrate_density)


def _density_mass(logpdf: OutlierLogPdf) -> float:
    try:
        hash(logpdf)
    except TypeError:
        return _integrate_density(logpdf)
    return _cached_density_mass(logpdf)


def check_outlier_density(logpdf: OutlierLogPdf) -> None:
    """Check numerically that a one-dimensional density integrates to one.

    Densities exposing a ``support`` attribute are integrated over it, others
    over the whole real line. Results are cached for hashable densities.

    Raises:
        ValidationError: If the total mass differs from one.
    """
    mass = _density_mass(logpdf)
    if abs(mass - 1.0) > DENSITY_MASS_TOL:
        raise ValidationError("outlier_logpdf", f"density must integrate to 1, got {mass:.9f}")


def _is_psd(matrix: np.ndarray) -> bool:
    return bool(np.all(np.linalg.eigvalsh(matrix) >= -PSD_TOL))


@dataclass(frozen=True, eq=False)
class StepModel:
    """Parameters of one filtering step.

    Dynamics ``X_k = A X_{k-1} + b + N(0, Q)``; with probability ``p_inlier``
    the observation is ``C X_k + d + N(0, R)``, otherwise it is drawn from the
    outlier density. ``index`` is the 1-based position in the series and
    ``dt`` the elapsed time since the previous observation, when known.
    """
    A: np.ndarray
    b: np.ndarray
    Q: np.ndarray
    C: np.ndarray
    d: np.ndarray
    R: np.ndarray
    p_inlier: float
    outlier_logpdf: OutlierLogPdf
    index: Optional[int] = None
    dt: Optional[float] = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float, ndmin=1)
        Q = np.array(self.Q, dtype=float, ndmin=2)
        C = np.array(self.C, dtype=float, ndmin=2)
        d = np.array(self.d, dtype=float, ndmin=1)
        R = np.array(self.R, dtype=float, ndmin=2)

        n = A.shape[0]
        m = C.shape[0]
        if A.shape != (n, n) or b.shape != (n,) or Q.shape != (n, n):
            raise DimensionError(
                f"Dynamics shapes A{A.shape}, b{b.shape}, Q{Q.shape} are inconsistent"
            )
        if C.shape != (m, n) or d.shape != (m,) or R.shape != (m, m):
            raise DimensionError(
                f"Observation shapes C{C.shape}, d{d.shape}, R{R.shape} are inconsistent with state dimension {n}"
            )
        if not _is_psd(Q):
            raise ValidationError("Q", "must be positive semi-definite")
        if not _is_psd(R):
            raise ValidationError("R", "must be positive semi-definite")
        if not 0.0 <= self.p_inlier <= 1.0:
            raise ValidationError("p_inlier", f"must be in [0, 1], got {self.p_inlier}")
        if m == 1:
            check_outlier_density(self.outlier_logpdf)

        for name, value in (("A", A), ("b", b), ("Q", Q), ("C", C), ("d", d), ("R", R)):
            object.__setattr__(self, name, _frozen(value))
        object.__setattr__(self, "p_inlier", float(self.p_inlier))

    @classmethod
    def scalar(
        cls,
        *,
        outlier_logpdf: OutlierLogPdf,
        A: float = 1.0,
        b: float = 0.0,
        Q: float = 0.0,
        C: float = 1.0,
        d: float = 0.0,
        R: float = 1.0,
        p_inlier: float = 1.0,
        index: Optional[int] = None,
        dt: Optional[float] = None,
    ) -> "StepModel":
        """Build a step of a one-dimensional state observed in one dimension."""
        return cls(
            A=[[A]], b=[b], Q=[[Q]], C=[[C]], d=[d], R=[[R]],
            p_inlier=p_inlier, outlier_logpdf=outlier_logpdf, index=index, dt=dt,
        )

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.C.shape[0]
