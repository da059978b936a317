"""Synthetic benchmark sweeps."""
from .models import (
    SweepStatus,
    SweepTask,
    SweepRequest,
    BenchSettings,
    QuantileRow,
    SweepRow,
    SweepReport,
)
from .runner import SweepRunner, run_sweep

__all__ = [
    'SweepStatus',
    'SweepTask',
    'SweepRequest',
    'BenchSettings',
    'QuantileRow',
    'SweepRow',
    'SweepReport',
    'SweepRunner',
    'run_sweep',
]
