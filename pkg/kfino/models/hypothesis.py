"""Hypothesis set data model.

A hypothesis is one outlier-indicator path. The set stores every hypothesis
as a row of stacked arrays so that one filtering step is a handful of
vectorized operations over the whole beam.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from kfino.models.gaussian import GaussianBelief, _frozen

NORMALIZATION_TOL = 1e-10


def _frozen_or_none(array) -> Optional[np.ndarray]:
    if array is None:
        return None
    return _frozen(np.array(array, dtype=float))


@dataclass(frozen=True, eq=False)
class StepRecord:
    """Beliefs of every hypothesis alive after one step.

    ``parents[r]`` is the row, in the previous record, of the hypothesis that
    row ``r`` was branched from. ``coeffs`` and ``pred_coeffs`` are only set
    when a coefficient tracker runs with the filter.
    """
    means: np.ndarray
    covs: np.ndarray
    pred_means: np.ndarray
    pred_covs: np.ndarray
    bits: np.ndarray
    parents: np.ndarray
    coeffs: Optional[np.ndarray] = None
    pred_coeffs: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("means", "covs", "pred_means", "pred_covs"):
            object.__setattr__(self, name, _frozen(np.array(getattr(self, name), dtype=float)))
        object.__setattr__(self, "bits", _frozen(np.array(self.bits, dtype=bool)))
        object.__setattr__(self, "parents", _frozen(np.array(self.parents, dtype=np.int64)))
        object.__setattr__(self, "coeffs", _frozen_or_none(self.coeffs))
        object.__setattr__(self, "pred_coeffs", _frozen_or_none(self.pred_coeffs))

    def __len__(self) -> int:
        return self.bits.shape[0]

    def take(self, rows: np.ndarray) -> "StepRecord":
        """Keep only the given rows, in the given order."""
        return StepRecord(
            means=self.means[rows],
            covs=self.covs[rows],
            pred_means=self.pred_means[rows],
            pred_covs=self.pred_covs[rows],
            bits=self.bits[rows],
            parents=self.parents[rows],
            coeffs=None if self.coeffs is None else self.coeffs[rows],
            pred_coeffs=None if self.pred_coeffs is None else self.pred_coeffs[rows],
        )


@dataclass(frozen=True)
class PathStep:
    """One step of a single hypothesis history."""
    belief: GaussianBelief
    predicted: GaussianBelief
    bit: bool


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """Read-only view of one row of a HypothesisSet.

    ``tail`` holds the full indicator path when history is tracked and only
    the last indicator otherwise.
    """
    id: int
    tail: Tuple[bool, ...]
    log_weight: float
    log_cond_lik: float
    belief: GaussianBelief
    history: Optional[Tuple[PathStep, ...]] = None


@dataclass(frozen=True, eq=False)
class HypothesisSet:
    """Normalized finite Gaussian mixture over the hidden state.

    Attributes:
        ids: Creation-order identifiers, strictly increasing
        log_weights: Normalized log posterior weights
        log_cond_lik: Log conditional likelihood of each path
        means: Stacked means, shape (H, n)
        covs: Stacked covariances, shape (H, n, n)
        last_bits: Indicator of the most recent step (True = inlier)
        log_norm_accum: Running sum of per-step log normalization masses
        step_count: Number of observations consumed
        next_id: Identifier given to the next created hypothesis
        coeffs: Optional linear coefficients per hypothesis, shape (H, k)
        history: Optional per-step records, one per consumed observation
    """
    ids: np.ndarray
    log_weights: np.ndarray
    log_cond_lik: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    last_bits: np.ndarray
    log_norm_accum: float
    step_count: int
    next_id: int
    coeffs: Optional[np.ndarray] = None
    history: Optional[Tuple[StepRecord, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "ids", _frozen(np.array(self.ids, dtype=np.int64)))
        for name in ("log_weights", "log_cond_lik", "means", "covs"):
            object.__setattr__(self, name, _frozen(np.array(getattr(self, name), dtype=float)))
        object.__setattr__(self, "last_bits", _frozen(np.array(self.last_bits, dtype=bool)))
        object.__setattr__(self, "coeffs", _frozen_or_none(self.coeffs))
        if self.history is not None:
            object.__setattr__(self, "history", tuple(self.history))

    def __len__(self) -> int:
        return self.ids.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def tracks_history(self) -> bool:
        return self.history is not None

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        """Check that the weights sum to one in log space."""
        return bool(abs(logsumexp(self.log_weights)) <= tol)

    def ancestry(self) -> np.ndarray:
        """Row of every current hypothesis in each step record.

        Returns:
            Integer array of shape (step_count, H); entry ``[k, h]`` is the
            row of hypothesis ``h``'s ancestor in ``history[k]``.

        Raises:
            ValueError: If history is not tracked
        """
        if self.history is None:
            raise ValueError("Ancestry needs tracked history")
        rows = np.empty((len(self.history), len(self)), dtype=np.int64)
        current = np.arange(len(self))
        for k in range(len(self.history) - 1, -1, -1):
            rows[k] = current
            current = self.history[k].parents[current]
        return rows

    def paths(self) -> np.ndarray:
        """Full indicator paths, shape (H, step_count)."""
        rows = self.ancestry()
        return np.stack(
            [record.bits[rows[k]] for k, record in enumerate(self.history)], axis=1
        ).reshape(len(self), len(self.history))

    def hypothesis(self, row: int) -> Hypothesis:
        """Materialize one row as a Hypothesis."""
        history = None
        if self.history is not None:
            rows = self.ancestry()[:, row]
            history = tuple(
                PathStep(
                    belief=GaussianBelief(record.means[r], record.covs[r]),
                    predicted=GaussianBelief(record.pred_means[r], record.pred_covs[r]),
                    bit=bool(record.bits[r]),
                )
                for record, r in zip(self.history, rows)
            )
            tail = tuple(step.bit for step in history)
        else:
            tail = (bool(self.last_bits[row]),)
        return Hypothesis(
            id=int(self.ids[row]),
            tail=tail,
            log_weight=float(self.log_weights[row]),
            log_cond_lik=float(self.log_cond_lik[row]),
            belief=GaussianBelief(self.means[row], self.covs[row]),
            history=history,
        )

    @property
    def hypotheses(self) -> List[Hypothesis]:
        return [self.hypothesis(row) for row in range(len(self))]


@dataclass(frozen=True, eq=False)
class PosteriorSummary:
    """Per-step estimators of the hidden state and of the indicator.

    Attributes:
        xhat: Mixture mean
        zpm: Posterior probability that the observation is an inlier
        zmap: ``zpm > 0.5``
        sigma_hat: Mixture covariance
        band_low: ``xhat - 2 sqrt(diag(sigma_hat))``
        band_high: ``xhat + 2 sqrt(diag(sigma_hat))``
    """
    xhat: np.ndarray
    zpm: float
    zmap: bool
    sigma_hat: np.ndarray
    band_low: np.ndarray
    band_high: np.ndarray

    @property
    def sigma(self) -> np.ndarray:
        """Marginal standard deviations."""
        return np.sqrt(np.clip(np.diag(self.sigma_hat), 0.0, None))
