"""Walk-over-weighing model parameters."""
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class WowParams(BaseModel):
    """Parameters of the weighing model.

    Time is in days and weights in kg. ``p`` is the probability that an
    observation is a Gaussian measurement of the weight (an inlier).
    """
    model_config = ConfigDict(frozen=True)

    a: float = 0.001  # mean reversion rate, 1/day
    m: float = 60.0  # asymptotic weight
    sigma_m2: float = 0.05  # diffusion variance, kg^2/day
    sigma_p2: float = 5.0  # observation variance
    p: float = 0.5
    mu1: float = 40.0
    sigma1: float = 1.0
    m_min: float = 10.0
    m_max: float = 100.0

    @field_validator('a', 'sigma_m2', 'sigma1')
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """Validate rate and variances are positive."""
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator('sigma_p2')
    @classmethod
    def validate_nonnegative(cls, v: float) -> float:
        if not v >= 0:
            raise ValueError("must be non-negative")
        return v

    @field_validator('p')
    @classmethod
    def validate_probability(cls, v: float) -> float:
        """Validate p is a probability."""
        if not 0.0 <= v <= 1.0:
            raise ValueError("must be in [0, 1]")
        return v

    @model_validator(mode='after')
    def validate_range(self) -> "WowParams":
        """Validate the outlier support is a proper interval."""
        if not self.m_min < self.m_max:
            raise ValueError("m_min must be smaller than m_max")
        return self

    def with_theta(self, mu1: float, p: float, m: float) -> "WowParams":
        """Copy with the individual parameters replaced."""
        return WowParams(**{**self.model_dump(), "mu1": mu1, "p": p, "m": m})
