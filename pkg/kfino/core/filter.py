"""Kalman filtering with impulse-noised outliers.

Every hypothesis is a path of outlier indicators. Conditionally on a path
the model is linear-Gaussian, so each step branches every hypothesis into an
outlier child, which keeps the propagated belief, and an inlier child, which
is corrected by the observation. The exact filter keeps all 2^N paths; the
truncated filter keeps the ``beam`` heaviest ones.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from kfino.core.gaussian import propagate_stack, smooth_stack, symmetrize, update_stack
from kfino.core.kalman import check_series
from kfino.models.gaussian import GaussianBelief, StepModel
from kfino.models.hypothesis import HypothesisSet, PosteriorSummary, StepRecord
from kfino.utils.exceptions import (
    DegenerateWeights,
    DimensionError,
    ExactSizeExceeded,
    HistoryRequired,
    ValidationError,
)

logger = logging.getLogger(__name__)

MAX_EXACT_STEPS = 25
BAND_WIDTH = 2.0


class CoefficientTracker(Protocol):
    """Carries extra per-hypothesis coefficients through the branching.

    Coefficients are stacked as arrays of shape (H, k).
    """

    def initial(self, y: np.ndarray, step: StepModel, init: GaussianBelief) -> np.ndarray:
        """Coefficients of the outlier and inlier children of the first step, shape (2, k)."""
        ...

    def propagate(self, coeffs: np.ndarray, step: StepModel) -> np.ndarray:
        ...

    def update(
        self, coeffs: np.ndarray, pred_covs: np.ndarray, y: np.ndarray, step: StepModel
    ) -> np.ndarray:
        ...


@dataclass(frozen=True)
class FilterResult:
    """Output of a forward pass.

    Unpacks as ``summaries, final, loglik``. ``n_hypotheses`` and
    ``truncated_mass`` give, per step, the number of hypotheses kept and
    the posterior mass removed by truncation.
    """
    summaries: Tuple[PosteriorSummary, ...]
    final: HypothesisSet
    loglik: float
    n_hypotheses: Tuple[int, ...]
    truncated_mass: Tuple[float, ...]

    def __iter__(self):
        return iter((self.summaries, self.final, self.loglik))


def _log_prob(p: float) -> float:
    return math.log(p) if p > 0 else -math.inf


def _interleave(outlier: np.ndarray, inlier: np.ndarray) -> np.ndarray:
    children = np.empty((2 * outlier.shape[0],) + outlier.shape[1:], dtype=outlier.dtype)
    children[0::2] = outlier
    children[1::2] = inlier
    return children


def _branch(
    first_id: int,
    log_weights: np.ndarray,
    log_cond_lik: np.ndarray,
    pred_means: np.ndarray,
    pred_covs: np.ndarray,
    pred_coeffs: Optional[np.ndarray],
    upd_coeffs: Optional[np.ndarray],
    parents: np.ndarray,
    y: np.ndarray,
    step: StepModel,
    step_index: int,
    keep_record: bool,
) -> Tuple[dict, Optional[StepRecord], float]:
    """Branch every predicted belief into its outlier and inlier children.

    Returns:
        Tuple of (child arrays, step record or None, log of the normalization mass)
    """
    upd_means, upd_covs, gauss_ll = update_stack(pred_means, pred_covs, y, step, step_index)
    outlier_ll = float(step.outlier_logpdf(y))
    log_p = _log_prob(step.p_inlier)
    log_q = _log_prob(1.0 - step.p_inlier)

    child_lw = _interleave(log_weights + log_q + outlier_ll, log_weights + log_p + gauss_ll)
    keep = np.isfinite(child_lw)
    if not keep.any():
        raise DegenerateWeights("Every hypothesis has zero posterior mass", step=step_index)
    log_mass = float(logsumexp(child_lw[keep]))

    child_coeffs = None
    pred_child_coeffs = None
    if upd_coeffs is not None:
        child_coeffs = _interleave(pred_coeffs, upd_coeffs)[keep]
        pred_child_coeffs = np.repeat(pred_coeffs, 2, axis=0)[keep]

    n_children = 2 * log_weights.shape[0]
    children = {
        "ids": (first_id + np.arange(n_children))[keep],
        "log_weights": child_lw[keep] - log_mass,
        "log_cond_lik": _interleave(log_cond_lik + outlier_ll, log_cond_lik + gauss_ll)[keep],
        "means": _interleave(pred_means, upd_means)[keep],
        "covs": _interleave(pred_covs, upd_covs)[keep],
        "last_bits": np.tile([False, True], log_weights.shape[0])[keep],
        "coeffs": child_coeffs,
    }
    if not keep_record:
        return children, None, log_mass
    record = StepRecord(
        means=children["means"],
        covs=children["covs"],
        pred_means=np.repeat(pred_means, 2, axis=0)[keep],
        pred_covs=np.repeat(pred_covs, 2, axis=0)[keep],
        bits=children["last_bits"],
        parents=np.repeat(parents, 2)[keep],
        coeffs=child_coeffs,
        pred_coeffs=pred_child_coeffs,
    )
    return children, record, log_mass


def kfino_init(
    y1,
    step1: StepModel,
    init: GaussianBelief,
    track_history: bool = False,
    tracker: Optional[CoefficientTracker] = None,
) -> HypothesisSet:
    """Branch the prior on the first observation.

    Args:
        y1: First observation
        step1: First step model; only its observation part is used
        init: Prior belief on the first state
        track_history: Keep per-step records for smoothing and calibration
        tracker: Optional coefficient tracker

    Returns:
        HypothesisSet with the outlier child (id 0) and the inlier child (id 1)

    Raises:
        DegenerateWeights: If both children have zero mass
    """
    y = check_series([y1], [step1])[0]
    coeffs = pred_coeffs = None
    if tracker is not None:
        initial = np.asarray(tracker.initial(y, step1, init), dtype=float)
        pred_coeffs, coeffs = initial[0:1], initial[1:2]
    children, record, log_mass = _branch(
        0,
        np.zeros(1),
        np.zeros(1),
        init.mean[None, :],
        init.cov[None, :, :],
        pred_coeffs,
        coeffs,
        np.zeros(1, dtype=np.int64),
        y,
        step1,
        1,
        track_history,
    )
    return HypothesisSet(
        **children,
        log_norm_accum=log_mass,
        step_count=1,
        next_id=2,
        history=(record,) if track_history else None,
    )


def kfino_step(
    hset: HypothesisSet,
    y,
    step: StepModel,
    tracker: Optional[CoefficientTracker] = None,
) -> HypothesisSet:
    """Propagate every hypothesis and branch it on a new observation.

    Raises:
        DegenerateWeights: If every child has zero mass
        SingularCovariance: If an innovation covariance is singular
    """
    step_index = hset.step_count + 1
    if (hset.coeffs is None) != (tracker is None):
        raise ValueError("Coefficient tracker must be used from the first step on")
    y = check_series([y], [step], step_index)[0]

    pred_means, pred_covs = propagate_stack(hset.means, hset.covs, step)
    pred_coeffs = upd_coeffs = None
    if tracker is not None:
        pred_coeffs = np.asarray(tracker.propagate(hset.coeffs, step), dtype=float)
        upd_coeffs = np.asarray(tracker.update(pred_coeffs, pred_covs, y, step), dtype=float)

    children, record, log_mass = _branch(
        hset.next_id,
        hset.log_weights,
        hset.log_cond_lik,
        pred_means,
        pred_covs,
        pred_coeffs,
        upd_coeffs,
        np.arange(len(hset)),
        y,
        step,
        step_index,
        hset.history is not None,
    )
    history = None
    if hset.history is not None:
        history = hset.history + (record,)
    return HypothesisSet(
        **children,
        log_norm_accum=hset.log_norm_accum + log_mass,
        step_count=step_index,
        next_id=hset.next_id + 2 * len(hset),
        history=history,
    )


def _truncate(hset: HypothesisSet, beam: int) -> Tuple[HypothesisSet, float]:
    if beam < 1:
        raise ValidationError("beam", f"must be at least 1, got {beam}")
    if len(hset) <= beam:
        return hset, 0.0

    order = np.lexsort((hset.ids, -hset.log_weights))
    kept = np.sort(order[:beam])
    log_kept = float(logsumexp(hset.log_weights[kept]))
    dropped_mass = float(np.exp(logsumexp(hset.log_weights[order[beam:]])))
    history = None
    if hset.history is not None:
        history = hset.history[:-1] + (hset.history[-1].take(kept),)
    truncated = HypothesisSet(
        ids=hset.ids[kept],
        log_weights=hset.log_weights[kept] - log_kept,
        log_cond_lik=hset.log_cond_lik[kept],
        means=hset.means[kept],
        covs=hset.covs[kept],
        last_bits=hset.last_bits[kept],
        log_norm_accum=hset.log_norm_accum,
        step_count=hset.step_count,
        next_id=hset.next_id,
        coeffs=None if hset.coeffs is None else hset.coeffs[kept],
        history=history,
    )
    return truncated, dropped_mass


def truncate(hset: HypothesisSet, beam: int) -> HypothesisSet:
    """Keep the ``beam`` heaviest hypotheses and renormalize.

    Ties are broken in favour of the smaller id. The accumulated
    log-likelihood is left unchanged.
    """
    return _truncate(hset, beam)[0]


def _mixture_summary(
    weights: np.ndarray, means: np.ndarray, covs: np.ndarray, bits: np.ndarray
) -> PosteriorSummary:
    xhat = weights @ means
    spread = means - xhat
    sigma_hat = symmetrize(
        np.einsum("h,hij->ij", weights, covs)
        + np.einsum("h,hi,hj->ij", weights, spread, spread)
    )
    zpm = float(np.clip(weights[bits].sum(), 0.0, 1.0))
    half_width = BAND_WIDTH * np.sqrt(np.clip(np.diag(sigma_hat), 0.0, None))
    return PosteriorSummary(
        xhat=xhat,
        zpm=zpm,
        zmap=zpm > 0.5,
        sigma_hat=sigma_hat,
        band_low=xhat - half_width,
        band_high=xhat + half_width,
    )


def summarize(hset: HypothesisSet) -> PosteriorSummary:
    """Posterior mean, inlier probability, MAP flag and mixture covariance."""
    return _mixture_summary(hset.weights, hset.means, hset.covs, hset.last_bits)


def beam_for_kappa(kappa: int) -> Tuple[int, int]:
    """Map a truncation level to ``(beam, exact_prefix) = (2^kappa, kappa)``."""
    if kappa < 1:
        raise ValidationError("kappa", f"must be at least 1, got {kappa}")
    return 2 ** kappa, kappa


def _run(
    ys: Sequence,
    steps: Sequence[StepModel],
    init: GaussianBelief,
    beam: Optional[int],
    exact_prefix: int,
    track_history: bool,
    tracker: Optional[CoefficientTracker],
) -> FilterResult:
    obs = check_series(ys, steps)
    summaries: List[PosteriorSummary] = []
    counts: List[int] = []
    dropped: List[float] = []

    hset = None
    for k, (y, step) in enumerate(zip(obs, steps), start=1):
        if hset is None:
            hset = kfino_init(y, step, init, track_history, tracker)
        else:
            hset = kfino_step(hset, y, step, tracker)
        mass = 0.0
        if beam is not None and k > exact_prefix:
            hset, mass = _truncate(hset, beam)
        logger.debug(f"Step {k}: {len(hset)} hypotheses, truncated mass {mass:.3g}")
        summaries.append(summarize(hset))
        counts.append(len(hset))
        dropped.append(mass)

    return FilterResult(
        summaries=tuple(summaries),
        final=hset,
        loglik=hset.log_norm_accum,
        n_hypotheses=tuple(counts),
        truncated_mass=tuple(dropped),
    )


def kfino_filter(
    ys: Sequence,
    steps: Sequence[StepModel],
    init: GaussianBelief,
    beam: int,
    exact_prefix: int = 0,
    track_history: bool = False,
    tracker: Optional[CoefficientTracker] = None,
) -> FilterResult:
    """Truncated forward filter.

    The first ``exact_prefix`` steps keep every hypothesis; afterwards the
    set is truncated to ``beam`` hypotheses after each step.

    Args:
        ys: Observations, one per step
        steps: Step models
        init: Prior belief on the first state
        beam: Number of hypotheses kept, at least 2
        exact_prefix: Number of leading steps without truncation
        track_history: Keep per-step records for smoothing and calibration
        tracker: Optional coefficient tracker

    Returns:
        FilterResult

    Raises:
        ValidationError: If ``beam`` or ``exact_prefix`` is out of range
        ExactSizeExceeded: If the exact prefix would enumerate too many paths
    """
    if beam < 2:
        raise ValidationError("beam", f"must be at least 2, got {beam}")
    if exact_prefix < 0:
        raise ValidationError("exact_prefix", f"must be non-negative, got {exact_prefix}")
    untruncated = min(exact_prefix, len(ys))
    if untruncated > MAX_EXACT_STEPS:
        raise ExactSizeExceeded(untruncated, MAX_EXACT_STEPS)
    return _run(ys, steps, init, beam, exact_prefix, track_history, tracker)


def kfino_exact(
    ys: Sequence,
    steps: Sequence[StepModel],
    init: GaussianBelief,
    track_history: bool = False,
    tracker: Optional[CoefficientTracker] = None,
) -> FilterResult:
    """Exact forward filter over all 2^N indicator paths.

    Raises:
        ExactSizeExceeded: If the series has more than ``MAX_EXACT_STEPS`` observations
    """
    if len(ys) > MAX_EXACT_STEPS:
        raise ExactSizeExceeded(len(ys), MAX_EXACT_STEPS)
    return _run(ys, steps, init, None, len(ys), track_history, tracker)


def kfino_smooth(final: HypothesisSet, steps: Sequence[StepModel]) -> List[PosteriorSummary]:
    """Smoothed estimators from the surviving hypotheses.

    Each surviving path is smoothed independently with the
    Rauch-Tung-Striebel recursion and the results are mixed with the final
    weights.

    Raises:
        HistoryRequired: If the set was filtered without history
        DimensionError: If ``steps`` does not match the set
    """
    if not final.tracks_history:
        raise HistoryRequired("Smoothing needs a filter run with track_history=True")
    n_steps = final.step_count
    if len(steps) != n_steps:
        raise DimensionError(f"Set of {n_steps} steps smoothed with {len(steps)} steps")

    weights = final.weights
    rows = final.ancestry()
    history = final.history
    means, covs = final.means, final.covs
    summaries = [_mixture_summary(weights, means, covs, final.last_bits)]
    for k in range(n_steps - 2, -1, -1):
        record, later = history[k], history[k + 1]
        here, there = rows[k], rows[k + 1]
        means, covs = smooth_stack(
            record.means[here], record.covs[here],
            later.pred_means[there], later.pred_covs[there],
            means, covs,
            steps[k + 1], k + 2,
        )
        summaries.insert(0, _mixture_summary(weights, means, covs, record.bits[here]))
    return summaries
