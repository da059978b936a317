"""Filters and the weight model."""
from .filter import (
    FilterResult,
    kfino_exact,
    kfino_filter,
    kfino_init,
    kfino_smooth,
    kfino_step,
    summarize,
    truncate,
)
from .kalman import KalmanRun, SmoothedRun, kf_forward, kf_outlier_flags, rts_smooth
from .wow import build_steps, initial_belief

__all__ = [
    'FilterResult',
    'kfino_exact',
    'kfino_filter',
    'kfino_init',
    'kfino_smooth',
    'kfino_step',
    'summarize',
    'truncate',
    'KalmanRun',
    'SmoothedRun',
    'kf_forward',
    'kf_outlier_flags',
    'rts_smooth',
    'build_steps',
    'initial_belief',
]
