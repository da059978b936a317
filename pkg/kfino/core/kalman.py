"""Classical Kalman filter, Rauch-Tung-Striebel smoother and the
confidence-interval outlier flags used as a baseline."""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from kfino.core.gaussian import (
    as_observation,
    predictive_stack,
    propagate_stack,
    smooth_stack,
    update_stack,
)
from kfino.models.gaussian import GaussianBelief, StepModel
from kfino.utils.exceptions import DimensionError, EmptySeries, ValidationError
from kfino.utils.validation import validate_observations

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KalmanRun:
    """Output of the forward pass.

    ``predicted[k]`` is the belief on X_k given the first k-1 observations;
    ``predicted[0]`` is the prior.
    """
    filtered: Tuple[GaussianBelief, ...]
    predicted: Tuple[GaussianBelief, ...]
    loglik: float

    def __len__(self) -> int:
        return len(self.filtered)


@dataclass(frozen=True)
class SmoothedRun:
    """Output of the backward pass."""
    smoothed: Tuple[GaussianBelief, ...]

    def __len__(self) -> int:
        return len(self.smoothed)


def check_series(ys: Sequence, steps: Sequence[StepModel], first: int = 1) -> List[np.ndarray]:
    """Convert observations to vectors and check them against the steps.

    Args:
        ys: Observations
        steps: Step models, one per observation
        first: 1-based position of the first observation in its series

    Raises:
        EmptySeries: If there is no observation
        DimensionError: If lengths or observation dimensions disagree
        ValidationError: If an observation is not finite
    """
    if len(ys) == 0:
        raise EmptySeries("Cannot filter an empty series")
    if len(ys) != len(steps):
        raise DimensionError(f"Got {len(ys)} observations for {len(steps)} steps")
    obs = [as_observation(y, step) for y, step in zip(ys, steps)]
    result = validate_observations(obs, first)
    if not result.is_valid:
        raise ValidationError(result.field, result.message)
    return obs


def kf_forward(ys: Sequence, steps: Sequence[StepModel], init: GaussianBelief) -> KalmanRun:
    """Run the Kalman filter over a series.

    The first step uses ``init`` as its predicted belief; only its
    observation part is used.

    Args:
        ys: Observations, one per step
        steps: Step models
        init: Prior belief on the first state

    Returns:
        KalmanRun with filtered and predicted beliefs and the log-likelihood

    Raises:
        EmptySeries: If ``ys`` is empty
        SingularCovariance: If an innovation covariance is singular
    """
    obs = check_series(ys, steps)
    means, covs = init.mean[None, :], init.cov[None, :, :]
    filtered = []
    predicted = []
    loglik = 0.0
    for k, (y, step) in enumerate(zip(obs, steps)):
        if k > 0:
            means, covs = propagate_stack(means, covs, step)
        predicted.append(GaussianBelief(means[0], covs[0]))
        means, covs, step_loglik = update_stack(means, covs, y, step, k + 1)
        filtered.append(GaussianBelief(means[0], covs[0]))
        loglik += float(step_loglik[0])
    logger.debug(f"Kalman forward pass over {len(obs)} steps, loglik={loglik}")
    return KalmanRun(filtered=tuple(filtered), predicted=tuple(predicted), loglik=loglik)


def rts_smooth(run: KalmanRun, steps: Sequence[StepModel]) -> SmoothedRun:
    """Rauch-Tung-Striebel backward pass over a forward run.

    Raises:
        DimensionError: If ``steps`` does not match the run
        SingularCovariance: If a predicted covariance is singular
    """
    if len(steps) != len(run):
        raise DimensionError(f"Run of length {len(run)} smoothed with {len(steps)} steps")
    smoothed = [run.filtered[-1]]
    for k in range(len(run) - 2, -1, -1):
        filtered, predicted, later = run.filtered[k], run.predicted[k + 1], smoothed[0]
        means, covs = smooth_stack(
            filtered.mean[None], filtered.cov[None],
            predicted.mean[None], predicted.cov[None],
            later.mean[None], later.cov[None],
            steps[k + 1], k + 2,
        )
        smoothed.insert(0, GaussianBelief(means[0], covs[0]))
    return SmoothedRun(smoothed=tuple(smoothed))


def outlier_flags_from_run(
    run: KalmanRun, ys: Sequence, steps: Sequence[StepModel], q: float = 2.0
) -> List[bool]:
    """Flag observations outside the one-step-ahead confidence interval.

    ``y_k`` is flagged when ``|y_k - mean_k| > q * sqrt(var_k)`` under the
    predictive distribution of the forward pass.
    """
    if q < 0:
        raise ValidationError("q", f"must be non-negative, got {q}")
    obs = check_series(ys, steps)
    if any(step.obs_dim != 1 for step in steps):
        raise DimensionError("Confidence-interval flags need scalar observations")
    flags = []
    for y, step, belief in zip(obs, steps, run.predicted):
        mean, cov = predictive_stack(belief.mean[None], belief.cov[None], step)
        flags.append(bool(abs(y[0] - mean[0, 0]) > q * np.sqrt(cov[0, 0, 0])))
    return flags


def kf_outlier_flags(
    ys: Sequence, steps: Sequence[StepModel], init: GaussianBelief, q: float = 2.0
) -> List[bool]:
    """Run the forward pass and return the confidence-interval outlier flags."""
    run = kf_forward(ys, steps, init)
    return outlier_flags_from_run(run, ys, steps, q)
