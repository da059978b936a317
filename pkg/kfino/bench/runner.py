"""Benchmark sweeps over synthetic series."""
import logging
import uuid
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pydantic

from kfino.bench.metrics import accuracy, mse
from kfino.bench.models import (
    METHODS,
    BenchSettings,
    QuantileRow,
    SweepReport,
    SweepRequest,
    SweepRow,
    SweepStatus,
    SweepTask,
)
from kfino.bench.synth import SyntheticSeries, simulate_series
from kfino.core.filter import beam_for_kappa, kfino_filter
from kfino.core.kalman import kf_forward, outlier_flags_from_run
from kfino.core.wow import build_steps, initial_belief
from kfino.models.wow import WowParams
from kfino.utils.exceptions import KfinoError
from kfino.utils.validation import from_pydantic

logger = logging.getLogger(__name__)

MAX_WORKERS = 4


def replicate_seed(master_seed: int, value_index: int, replicate: int) -> int:
    """Seed of one replicate, independent of scheduling."""
    sequence = np.random.SeedSequence([master_seed, value_index, replicate])
    return int(sequence.generate_state(1)[0])


@dataclass(frozen=True)
class RunSettings:
    """Model and filter settings at one grid value."""
    params: WowParams
    beam: int
    exact_prefix: int
    q: float


@dataclass(frozen=True)
class ReplicateOutcome:
    """Metrics of one method on one replicate; ``error`` is set on failure."""
    value_index: int
    replicate: int
    method: str
    mse: float = float("nan")
    accuracy: float = float("nan")
    error: Optional[str] = None


def estimate(method: str, series: SyntheticSeries, settings: RunSettings) -> Tuple[np.ndarray, np.ndarray]:
    """Reconstructed weights and inlier classification of one method.

    Raises:
        KfinoError: Propagated from the filters
    """
    steps = build_steps(settings.params, series.times)
    init = initial_belief(settings.params)
    if method == "kfino":
        result = kfino_filter(series.y_obs, steps, init, settings.beam, settings.exact_prefix)
        x_hat = np.array([summary.xhat[0] for summary in result.summaries])
        z_map = np.array([summary.zmap for summary in result.summaries])
        return x_hat, z_map
    run = kf_forward(series.y_obs, steps, init)
    flags = outlier_flags_from_run(run, series.y_obs, steps, settings.q)
    x_hat = np.array([belief.mean[0] for belief in run.filtered])
    return x_hat, ~np.array(flags, dtype=bool)


class SweepRunner:
    """Runs sweeps with replicates spread over a thread pool."""

    def __init__(self, settings: Optional[BenchSettings] = None, max_workers: int = MAX_WORKERS):
        """Initialize SweepRunner.

        Args:
            settings: Fixed settings; the swept variable overrides them
            max_workers: Maximum number of concurrent worker threads
        """
        self.settings = settings or BenchSettings()
        self.executor = ThreadPoolExecutor(max_workers=max_workers)

    def __enter__(self) -> "SweepRunner":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        self.executor.shutdown(wait=True)

    def settings_for(self, variable: str, value: float) -> RunSettings:
        """Settings at one grid value.

        Raises:
            ValidationError: If the value is invalid for the variable
        """
        base = self.settings
        if variable == "kappa":
            beam, exact_prefix = beam_for_kappa(int(value))
            return RunSettings(base.params, beam, exact_prefix, base.q)
        try:
            params = WowParams(**{**base.params.model_dump(), variable: value})
        except pydantic.ValidationError as e:
            raise from_pydantic(e) from e
        return RunSettings(params, base.beam, base.exact_prefix, base.q)

    def _run_replicate(
        self,
        request: SweepRequest,
        value_index: int,
        replicate: int,
        settings: RunSettings,
        task: SweepTask,
    ) -> List[ReplicateOutcome]:
        """Simulate one series and score every method on it, isolating failures."""
        seed = replicate_seed(request.seed, value_index, replicate)
        series = simulate_series(settings.params, self.settings.rate, self.settings.horizon, seed)
        outcomes = []
        for method in request.methods:
            try:
                x_hat, z_map = estimate(method, series, settings)
                outcomes.append(ReplicateOutcome(
                    value_index, replicate, method,
                    mse=mse(series.x_hidden, x_hat),
                    accuracy=accuracy(series.z_true, z_map),
                ))
            except KfinoError as e:
                label = f"{request.variable}={request.values[value_index]} replicate {replicate} {method}"
                logger.warning(f"Replicate failed ({label}): {e}")
                task.increment_failed(str(e), label)
                outcomes.append(ReplicateOutcome(value_index, replicate, method, error=str(e)))
        task.increment_processed()
        return outcomes

    def run(self, request: SweepRequest, task: Optional[SweepTask] = None) -> SweepReport:
        """Run a sweep.

        Args:
            request: Swept variable, values, replicate count, methods and seed
            task: Optional progress record, created when not given

        Returns:
            SweepReport with one row per (value, method), in grid then
            method order
        """
        grid = [self.settings_for(request.variable, value) for value in request.values]
        if task is None:
            task = SweepTask(
                task_id=str(uuid.uuid4()),
                status=SweepStatus.PENDING,
                variable=request.variable,
                total_replicates=len(grid) * request.replicates,
            )
        task.status = SweepStatus.RUNNING
        logger.info(
            f"Sweep over {request.variable}: {len(grid)} values x {request.replicates} replicates"
        )

        futures = [
            self.executor.submit(self._run_replicate, request, index, replicate, settings, task)
            for index, settings in enumerate(grid)
            for replicate in range(request.replicates)
        ]
        outcomes: Dict[Tuple[int, str], List[ReplicateOutcome]] = {}
        try:
            for future in as_completed(futures):
                for outcome in future.result():
                    outcomes.setdefault((outcome.value_index, outcome.method), []).append(outcome)
        except Exception:
            task.status = SweepStatus.FAILED
            raise

        report = SweepReport(variable=request.variable)
        for index, value in enumerate(request.values):
            for method in request.methods:
                group = sorted(outcomes.get((index, method), []), key=lambda o: o.replicate)
                ok = [o for o in group if o.error is None]
                report.rows.append(SweepRow(
                    value=value,
                    method=method,
                    mse=QuantileRow.from_values([o.mse for o in ok]),
                    accuracy=QuantileRow.from_values([o.accuracy for o in ok]),
                    n_ok=len(ok),
                    n_failed=len(group) - len(ok),
                ))

        task.status = SweepStatus.COMPLETED
        logger.info(f"Sweep over {request.variable} done, {task.failed_count} failed runs")
        return report


def run_sweep(
    variable: str,
    values: Sequence[float],
    settings: Optional[BenchSettings] = None,
    replicates: int = 100,
    seed: int = 0,
    methods: Sequence[str] = METHODS,
    max_workers: int = MAX_WORKERS,
) -> SweepReport:
    """Run one sweep with a temporary runner.

    Raises:
        ValidationError: If the request is invalid
    """
    try:
        request = SweepRequest(
            variable=variable, values=list(values), replicates=replicates,
            methods=list(methods), seed=seed,
        )
    except pydantic.ValidationError as e:
        raise from_pydantic(e) from e
    with SweepRunner(settings, max_workers) as runner:
        return runner.run(request)
