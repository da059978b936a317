"""EM calibration."""
from .em import EmConfig, EmResult, Theta, em_fit

__all__ = ['EmConfig', 'EmResult', 'Theta', 'em_fit']
