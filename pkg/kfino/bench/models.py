"""Benchmark sweep data models."""
from datetime import datetime
from dataclasses import dataclass, field
from typing import List, Sequence
from enum import Enum
import math
import threading

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from kfino.models.wow import WowParams

SWEEP_VARIABLES = ("kappa", "sigma_p2", "p")
METHODS = ("kfino", "kalman")


class SweepStatus(Enum):
    """Sweep status enumeration."""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class SweepTask:
    """Progress record of a running sweep, shared by the worker threads."""
    task_id: str
    status: SweepStatus
    variable: str
    total_replicates: int
    processed_replicates: int = 0
    failed_count: int = 0
    errors: List[str] = field(default_factory=list)
    created_at: datetime = field(default_factory=datetime.now)
    _count_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def progress(self) -> float:
        """Calculate progress percentage."""
        if self.total_replicates == 0:
            return 0.0
        return self.processed_replicates / self.total_replicates * 100

    def increment_failed(self, error_msg: str, replicate: str = "unknown") -> None:
        """Thread-safe increment of failed_count and error logging.

        Args:
            error_msg: The error message to log
            replicate: Label of the failed replicate
        """
        with self._count_lock:
            self.failed_count += 1
            self.errors.append(f"{replicate}: {error_msg}")

    def increment_processed(self) -> None:
        """Thread-safe increment of processed_replicates."""
        with self._count_lock:
            self.processed_replicates += 1


class SweepRequest(BaseModel):
    """One-variable sweep request."""
    variable: str
    values: List[float]
    replicates: int = 100
    methods: List[str] = list(METHODS)
    seed: int = 0

    @field_validator('variable')
    @classmethod
    def validate_variable(cls, v: str) -> str:
        """Validate variable is one of: kappa, sigma_p2, p."""
        if v not in SWEEP_VARIABLES:
            raise ValueError("variable must be 'kappa', 'sigma_p2', or 'p'")
        return v

    @field_validator('values')
    @classmethod
    def validate_values(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("at least one value is required")
        return v

    @field_validator('replicates')
    @classmethod
    def validate_replicates(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator('methods')
    @classmethod
    def validate_methods(cls, v: List[str]) -> List[str]:
        """Validate methods are among kfino and kalman, in canonical order."""
        unknown = [method for method in v if method not in METHODS]
        if unknown or not v:
            raise ValueError("methods must be a non-empty subset of 'kfino', 'kalman'")
        return [method for method in METHODS if method in v]

    @field_validator('seed')
    @classmethod
    def validate_seed(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be non-negative")
        return v

    @model_validator(mode='after')
    def validate_kappa(self) -> "SweepRequest":
        """Validate kappa values are positive integers."""
        if self.variable == "kappa":
            for value in self.values:
                if value != int(value) or value < 1:
                    raise ValueError(f"kappa values must be positive integers, got {value}")
        return self


class BenchSettings(BaseModel):
    """Fixed settings of a sweep; the swept variable overrides them."""
    params: WowParams = WowParams()
    rate: float = 1.0  # observations per day
    horizon: float = 100.0  # days
    beam: int = 1024
    exact_prefix: int = 10
    q: float = 2.0

    @field_validator('rate', 'horizon')
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator('beam')
    @classmethod
    def validate_beam(cls, v: int) -> int:
        if v < 2:
            raise ValueError("must be at least 2")
        return v

    @field_validator('exact_prefix')
    @classmethod
    def validate_prefix(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be non-negative")
        return v

    @field_validator('q')
    @classmethod
    def validate_q(cls, v: float) -> float:
        if not v >= 0:
            raise ValueError("must be non-negative")
        return v


@dataclass(frozen=True)
class QuantileRow:
    """Box-plot statistics of one metric."""
    min: float
    q25: float
    median: float
    q75: float
    max: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "QuantileRow":
        """Quantiles of ``values``; NaN everywhere when empty."""
        if len(values) == 0:
            return cls(math.nan, math.nan, math.nan, math.nan, math.nan)
        q = np.quantile(np.asarray(values, dtype=float), [0.0, 0.25, 0.5, 0.75, 1.0])
        return cls(*(float(x) for x in q))

    def as_tuple(self) -> tuple:
        return (self.min, self.q25, self.median, self.q75, self.max)


@dataclass(frozen=True)
class SweepRow:
    """Statistics of one method at one grid value."""
    value: float
    method: str
    mse: QuantileRow
    accuracy: QuantileRow
    n_ok: int
    n_failed: int


@dataclass
class SweepReport:
    """All rows of a sweep, grouped by grid value then method."""
    variable: str
    rows: List[SweepRow] = field(default_factory=list)

    def row(self, value: float, method: str) -> SweepRow:
        """Find the row of a grid value and method.

        Raises:
            KeyError: If no such row exists
        """
        for row in self.rows:
            if row.value == value and row.method == method:
                return row
        raise KeyError(f"No row for {self.variable}={value}, method {method}")
