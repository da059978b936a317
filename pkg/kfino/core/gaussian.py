"""Gaussian primitives shared by every filter.

Beliefs are processed as stacks: ``means`` of shape (H, n) and ``covs`` of
shape (H, n, n), one row per hypothesis. The single-belief operations are thin
wrappers over the stacked ones so that every filter shares one code path.
"""
import math
from typing import Optional, Tuple

import numpy as np

from kfino.models.gaussian import GaussianBelief, StepModel
from kfino.utils.exceptions import DimensionError, SingularCovariance

LOG_2PI = math.log(2.0 * math.pi)
CONDITION_TOL = 1e-12


def symmetrize(matrices: np.ndarray) -> np.ndarray:
    """Return (M + M^t) / 2 over the last two axes."""
    return 0.5 * (matrices + np.swapaxes(matrices, -1, -2))


def as_observation(y, step: StepModel) -> np.ndarray:
    """Convert an observation to a vector matching the step's observation dimension."""
    obs = np.array(y, dtype=float, ndmin=1)
    if obs.shape != (step.obs_dim,):
        raise DimensionError(
            f"Observation of shape {obs.shape} does not match observation dimension {step.obs_dim}"
        )
    return obs


def _check_state(means: np.ndarray, covs: np.ndarray, step: StepModel) -> None:
    n = step.state_dim
    if means.shape[1:] != (n,) or covs.shape[1:] != (n, n):
        raise DimensionError(
            f"Belief of dimension {means.shape[1:]} does not match step state dimension {n}"
        )


def cholesky(covs: np.ndarray, step_index: Optional[int] = None) -> np.ndarray:
    """Cholesky factors of a stack of strictly positive definite matrices.

    Raises:
        SingularCovariance: If a smallest eigenvalue is not above
            ``CONDITION_TOL`` times the largest one.
    """
    if covs.shape[-1] == 1:
        variances = covs[..., 0, 0]
        if not np.all(np.isfinite(variances) & (variances > 0)):
            raise SingularCovariance("Covariance is not strictly positive definite", step=step_index)
        return np.sqrt(covs)
    eig = np.linalg.eigvalsh(covs)
    smallest = eig[..., 0]
    largest = eig[..., -1]
    if not np.all(np.isfinite(eig)) or not np.all((smallest > 0) & (smallest > CONDITION_TOL * largest)):
        raise SingularCovariance("Covariance is not strictly positive definite", step=step_index)
    return np.linalg.cholesky(covs)


def cho_solve(chol: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``S X = rhs`` given stacked lower Cholesky factors of S."""
    if chol.shape[-1] == 1:
        return rhs / (chol * chol)
    half = np.linalg.solve(chol, rhs)
    return np.linalg.solve(np.swapaxes(chol, -1, -2), half)


def log_pdf_from_cholesky(innovations: np.ndarray, chol: np.ndarray) -> np.ndarray:
    """Gaussian log-densities of stacked innovations (H, m) under factors (H, m, m)."""
    m = innovations.shape[-1]
    if m == 1:
        whitened = innovations / chol[..., 0]
    else:
        whitened = np.linalg.solve(chol, innovations[..., None])[..., 0]
    mahalanobis = np.sum(whitened ** 2, axis=-1)
    log_det = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1)
    return -0.5 * (m * LOG_2PI + log_det + mahalanobis)


def propagate_stack(
    means: np.ndarray, covs: np.ndarray, step: StepModel
) -> Tuple[np.ndarray, np.ndarray]:
    """Prediction step for a stack of beliefs."""
    _check_state(means, covs, step)
    new_means = means @ step.A.T + step.b
    new_covs = symmetrize(step.A @ covs @ step.A.T + step.Q)
    return new_means, new_covs


def predictive_stack(
    means: np.ndarray, covs: np.ndarray, step: StepModel
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the inlier observation for a stack of beliefs."""
    _check_state(means, covs, step)
    obs_means = means @ step.C.T + step.d
    obs_covs = symmetrize(step.C @ covs @ step.C.T + step.R)
    return obs_means, obs_covs


def update_stack(
    means: np.ndarray,
    covs: np.ndarray,
    y: np.ndarray,
    step: StepModel,
    step_index: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Correction step for a stack of beliefs.

    Returns:
        Tuple of (updated means, updated covariances, log-density of ``y``
        under each predictive distribution). The log-density comes from the
        same factorization as the gain.
    """
    obs_means, obs_covs = predictive_stack(means, covs, step)
    chol = cholesky(obs_covs, step_index)
    innovations = y - obs_means

    cross = covs @ step.C.T
    gain = np.swapaxes(cho_solve(chol, np.swapaxes(cross, -1, -2)), -1, -2)
    new_means = means + (gain @ innovations[..., None])[..., 0]
    new_covs = symmetrize(covs - gain @ (step.C @ covs))
    return new_means, new_covs, log_pdf_from_cholesky(innovations, chol)


def smooth_stack(
    filtered_means: np.ndarray,
    filtered_covs: np.ndarray,
    predicted_means: np.ndarray,
    predicted_covs: np.ndarray,
    next_means: np.ndarray,
    next_covs: np.ndarray,
    next_step: StepModel,
    step_index: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """One backward Rauch-Tung-Striebel step for a stack of beliefs.

    Args:
        filtered_means, filtered_covs: Filtered beliefs at step k
        predicted_means, predicted_covs: Predicted beliefs at step k+1
        next_means, next_covs: Smoothed beliefs at step k+1
        next_step: Model of step k+1 (its ``A`` is used)
    """
    chol = cholesky(predicted_covs, step_index)
    # J = P_k A^t (P_{k+1}^-)^{-1}
    gain_t = cho_solve(chol, next_step.A @ filtered_covs)
    gain = np.swapaxes(gain_t, -1, -2)
    means = filtered_means + (gain @ (next_means - predicted_means)[..., None])[..., 0]
    covs = symmetrize(filtered_covs + gain @ (next_covs - predicted_covs) @ gain_t)
    return means, covs


def _stack(belief: GaussianBelief) -> Tuple[np.ndarray, np.ndarray]:
    return belief.mean[None, :], belief.cov[None, :, :]


def log_gaussian_pdf(y, mean, cov, step_index: Optional[int] = None) -> float:
    """Log-density of ``y`` under N(mean, cov), evaluated in log space.

    Raises:
        DimensionError: If shapes disagree
        SingularCovariance: If ``cov`` is not strictly positive definite
    """
    obs = np.array(y, dtype=float, ndmin=1)
    mu = np.array(mean, dtype=float, ndmin=1)
    sigma = np.array(cov, dtype=float, ndmin=2)
    if obs.shape != mu.shape or sigma.shape != (mu.shape[0], mu.shape[0]):
        raise DimensionError(
            f"Point {obs.shape}, mean {mu.shape} and covariance {sigma.shape} are inconsistent"
        )
    chol = cholesky(symmetrize(sigma)[None], step_index)
    return float(log_pdf_from_cholesky((obs - mu)[None], chol)[0])


def kalman_propagate(belief: GaussianBelief, step: StepModel) -> GaussianBelief:
    """Propagate a belief through the step dynamics."""
    means, covs = propagate_stack(*_stack(belief), step)
    return GaussianBelief(means[0], covs[0])


def kalman_update(
    belief: GaussianBelief, y, step: StepModel, step_index: Optional[int] = None
) -> GaussianBelief:
    """Condition a belief on an inlier observation."""
    obs = as_observation(y, step)
    means, covs, _ = update_stack(*_stack(belief), obs, step, step_index)
    return GaussianBelief(means[0], covs[0])


def predictive_obs_params(belief: GaussianBelief, step: StepModel) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and covariance of the inlier observation: (C m + d, C P C^t + R)."""
    obs_means, obs_covs = predictive_stack(*_stack(belief), step)
    return obs_means[0], obs_covs[0]
