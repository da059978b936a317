"""Kfino models."""
from .gaussian import GaussianBelief, StepModel
from .hypothesis import Hypothesis, HypothesisSet, PosteriorSummary, StepRecord
from .wow import WowParams

__all__ = [
    'GaussianBelief',
    'StepModel',
    'Hypothesis',
    'HypothesisSet',
    'PosteriorSummary',
    'StepRecord',
    'WowParams',
]
