"""Run configuration model."""
from typing import Any, Dict, Mapping, Optional, Tuple

import pydantic
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from kfino.bench.models import BenchSettings
from kfino.calibration.em import EmConfig, Theta
from kfino.core.filter import beam_for_kappa
from kfino.models.wow import WowParams
from kfino.utils.exceptions import ValidationError
from kfino.utils.validation import from_pydantic

WOW_FIELDS = tuple(WowParams.model_fields)


class RunConfig(BaseModel):
    """Flat configuration of every command.

    Model parameters default to the expert constants and to the synthetic
    benchmark values. ``kappa``, when set, replaces ``beam`` and
    ``exact_prefix`` by ``2^kappa`` and ``kappa``.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    a: float = 0.001
    m: float = 60.0
    sigma_m2: float = 0.05
    sigma_p2: float = 5.0
    p: float = 0.5
    mu1: float = 40.0
    sigma1: float = 1.0
    m_min: float = 10.0
    m_max: float = 100.0

    beam: int = 1024
    kappa: Optional[int] = None
    exact_prefix: int = 10
    q: float = 2.0
    oor_min: Optional[float] = None
    oor_max: Optional[float] = None

    seed: int = 0
    rate: float = 1.0
    horizon: float = 100.0
    replicates: int = 100
    workers: int = 4

    em_max_iters: int = 100
    em_param_tol: float = 1e-4
    em_p_clamp: float = 1e-6
    em_exact: bool = False

    @field_validator('beam')
    @classmethod
    def validate_beam(cls, v: int) -> int:
        if v < 2:
            raise ValueError("must be at least 2")
        return v

    @field_validator('kappa')
    @classmethod
    def validate_kappa(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator('exact_prefix', 'seed')
    @classmethod
    def validate_nonnegative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be non-negative")
        return v

    @field_validator('replicates', 'workers')
    @classmethod
    def validate_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @model_validator(mode='after')
    def validate_oor(self) -> "RunConfig":
        """Validate the out-of-range bounds."""
        if (self.oor_min is None) != (self.oor_max is None):
            raise ValueError("oor_min and oor_max must be set together")
        if self.oor_min is not None and not self.oor_min < self.oor_max:
            raise ValueError("oor_min must be smaller than oor_max")
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RunConfig":
        """Build a config from raw (possibly string) values.

        Raises:
            ValidationError: Naming the first invalid or unknown key
        """
        try:
            config = cls(**dict(values))
            config.wow_params()
            config.bench_settings()
        except pydantic.ValidationError as e:
            raise from_pydantic(e) from e
        try:
            config.em_config()
        except pydantic.ValidationError as e:
            error = from_pydantic(e)
            raise ValidationError(f"em_{error.field}", error.message) from e
        return config

    def with_overrides(self, updates: Mapping[str, Any]) -> "RunConfig":
        """Revalidated copy with some keys replaced."""
        return RunConfig.from_mapping({**self.model_dump(), **updates})

    def wow_params(self) -> WowParams:
        return WowParams(**{name: getattr(self, name) for name in WOW_FIELDS})

    def theta(self) -> Theta:
        return Theta(mu1=self.mu1, p=self.p, m=self.m)

    def filter_settings(self) -> Tuple[int, int]:
        """Effective ``(beam, exact_prefix)``."""
        if self.kappa is not None:
            return beam_for_kappa(self.kappa)
        return self.beam, self.exact_prefix

    def em_config(self) -> EmConfig:
        beam, exact_prefix = self.filter_settings()
        return EmConfig(
            max_iters=self.em_max_iters,
            param_tol=self.em_param_tol,
            p_clamp=self.em_p_clamp,
            beam=None if self.em_exact else beam,
            exact_prefix=exact_prefix,
        )

    def bench_settings(self) -> BenchSettings:
        beam, exact_prefix = self.filter_settings()
        return BenchSettings(
            params=self.wow_params(),
            rate=self.rate,
            horizon=self.horizon,
            beam=beam,
            exact_prefix=exact_prefix,
            q=self.q,
        )

    def as_dict(self) -> Dict[str, Any]:
        """Set values in field order, unset optional keys left out."""
        return {key: value for key, value in self.model_dump().items() if value is not None}
