"""Command-line interface.

Usage:
    kfino <simulate|filter|smooth|calibrate|bench|compare> [--config FILE]
          [--seed N] [--beam N | --kappa N] [--oor MIN,MAX] [-i IN] -o OUT
"""
import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from kfino.bench.models import METHODS, SWEEP_VARIABLES
from kfino.bench.runner import run_sweep
from kfino.bench.synth import simulate_series
from kfino.calibration.em import em_fit
from kfino.core.filter import kfino_filter, kfino_smooth
from kfino.core.kalman import kf_forward, outlier_flags_from_run
from kfino.core.wow import build_steps, initial_belief
from kfino.models.config import RunConfig
from kfino.models.hypothesis import PosteriorSummary
from kfino.utils.config_io import load_config, save_config
from kfino.utils.exceptions import KfinoError
from kfino.utils.series_io import (
    ObservationSeries,
    SeriesParser,
    format_number,
    ingest,
    write_table,
)

logger = logging.getLogger(__name__)

ESTIMATOR_HEADER = ("t", "y", "zpm", "zmap", "xhat", "sigma", "lo", "hi")
CALIBRATION_HEADER = ("iter", "mu1", "m", "p", "loglik")
BENCH_HEADER = (
    "variable", "value", "method", "metric",
    "min", "q25", "median", "q75", "max", "n_ok", "n_failed",
)
COMPARE_HEADER = (
    "t", "y",
    "kfino_zpm", "kfino_zmap", "kfino_xhat", "kfino_sigma",
    "kalman_zmap", "kalman_xhat", "kalman_sigma",
)
TRUTH_HEADER = ("t", "x", "z")


def _parse_range(text: str) -> Tuple[float, float]:
    try:
        low, high = (float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MIN,MAX, got '{text}'")
    return low, high


def _parse_values(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _estimator_rows(series: ObservationSeries, summaries: Sequence[PosteriorSummary]):
    for t, y, summary in zip(series.times, series.values, summaries):
        yield (
            t, y, summary.zpm, summary.zmap, summary.xhat[0], summary.sigma[0],
            summary.band_low[0], summary.band_high[0],
        )


def _prepare(config: RunConfig, args: argparse.Namespace):
    series = ingest(args.input, config.oor_min, config.oor_max)
    params = config.wow_params()
    return series, build_steps(params, series.times), initial_belief(params)


def cmd_simulate(config: RunConfig, args: argparse.Namespace) -> int:
    """Write a synthetic series and its ground truth."""
    series = simulate_series(config.wow_params(), config.rate, config.horizon, config.seed)
    SeriesParser().save(ObservationSeries(series.times, series.y_obs), args.output)
    truth = args.truth
    if truth is None and args.output != "-":
        truth = str(Path(args.output).with_suffix(".truth.csv"))
    if truth is not None:
        write_table(truth, TRUTH_HEADER, zip(series.times, series.x_hidden, series.z_true))
    logger.info(f"Simulated {len(series)} observations with seed {config.seed}")
    return 0


def _filter(config: RunConfig, args: argparse.Namespace, smooth: bool) -> int:
    series, steps, init = _prepare(config, args)
    beam, exact_prefix = config.filter_settings()
    result = kfino_filter(series.values, steps, init, beam, exact_prefix, track_history=smooth)
    summaries = kfino_smooth(result.final, steps) if smooth else result.summaries
    write_table(args.output, ESTIMATOR_HEADER, _estimator_rows(series, summaries))
    print(f"loglik={format_number(result.loglik)}")
    return 0


def cmd_filter(config: RunConfig, args: argparse.Namespace) -> int:
    """Write the forward estimators of a series."""
    return _filter(config, args, smooth=False)


def cmd_smooth(config: RunConfig, args: argparse.Namespace) -> int:
    """Write the smoothed estimators of a series."""
    return _filter(config, args, smooth=True)


def cmd_calibrate(config: RunConfig, args: argparse.Namespace) -> int:
    """Fit (mu1, p, m) by EM, starting from the configured values."""
    series = ingest(args.input, config.oor_min, config.oor_max)
    result = em_fit(
        series.values, series.times, config.wow_params(), config.theta(), config.em_config()
    )
    rows = (
        (i, theta.mu1, theta.m, theta.p, loglik)
        for i, (theta, loglik) in enumerate(zip(result.thetas, result.logliks))
    )
    footer = [f"# warning {warning}" for warning in result.warnings]
    footer.append(f"converged={'true' if result.converged else 'false'}")
    write_table(args.output, CALIBRATION_HEADER, rows, footer)
    return 0


def cmd_bench(config: RunConfig, args: argparse.Namespace) -> int:
    """Run one benchmark sweep and write its quantile table."""
    report = run_sweep(
        args.sweep,
        args.values,
        settings=config.bench_settings(),
        replicates=config.replicates,
        seed=config.seed,
        methods=METHODS,
        max_workers=config.workers,
    )
    rows = []
    for row in report.rows:
        for metric, quantiles in (("mse", row.mse), ("accuracy", row.accuracy)):
            rows.append((
                report.variable, row.value, row.method, metric,
                *quantiles.as_tuple(), row.n_ok, row.n_failed,
            ))
    write_table(args.output, BENCH_HEADER, rows)
    return 0


def cmd_compare(config: RunConfig, args: argparse.Namespace) -> int:
    """Write Kfino and classical Kalman estimators side by side."""
    series, steps, init = _prepare(config, args)
    beam, exact_prefix = config.filter_settings()
    result = kfino_filter(series.values, steps, init, beam, exact_prefix)
    run = kf_forward(series.values, steps, init)
    flags = outlier_flags_from_run(run, series.values, steps, config.q)
    rows = (
        (
            t, y, summary.zpm, summary.zmap, summary.xhat[0], summary.sigma[0],
            not flag, belief.mean[0], belief.cov[0, 0] ** 0.5,
        )
        for t, y, summary, flag, belief in zip(
            series.times, series.values, result.summaries, flags, run.filtered
        )
    )
    write_table(args.output, COMPARE_HEADER, rows)
    print(f"loglik_kfino={format_number(result.loglik)}")
    print(f"loglik_kalman={format_number(run.loglik)}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "filter": cmd_filter,
    "smooth": cmd_smooth,
    "calibrate": cmd_calibrate,
    "bench": cmd_bench,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--seed", type=int, help="random seed")
    truncation = common.add_mutually_exclusive_group()
    truncation.add_argument("--beam", type=int, help="number of hypotheses kept")
    truncation.add_argument("--kappa", type=int, help="keep 2^KAPPA hypotheses after KAPPA exact steps")
    common.add_argument("--oor", type=_parse_range, metavar="MIN,MAX",
                        help="drop observations outside [MIN, MAX]")
    common.add_argument("-o", "--output", required=True, help="output file, '-' for stdout")
    common.add_argument("--dump-config", metavar="PATH", help="write the effective configuration")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    with_input = argparse.ArgumentParser(add_help=False)
    with_input.add_argument("-i", "--input", required=True, help="series file with header t,y")

    parser = argparse.ArgumentParser(
        prog="kfino", description="Kalman filtering with impulse-noised outliers"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", parents=[common], help="simulate a series")
    simulate.add_argument("--truth", help="ground truth file (default: OUTPUT.truth.csv)")

    commands.add_parser("filter", parents=[common, with_input], help="forward estimators")
    commands.add_parser("smooth", parents=[common, with_input], help="smoothed estimators")

    calibrate = commands.add_parser("calibrate", parents=[common, with_input], help="EM calibration")
    calibrate.add_argument("--exact", action="store_true", help="exact E-steps")

    bench = commands.add_parser("bench", parents=[common], help="benchmark sweep")
    bench.add_argument("--sweep", required=True, choices=SWEEP_VARIABLES, help="swept variable")
    bench.add_argument("--values", required=True, type=_parse_values, help="comma-separated grid")
    bench.add_argument("--replicates", type=int, help="replicates per grid value")
    bench.add_argument("--workers", type=int, help="worker threads")

    commands.add_parser("compare", parents=[common, with_input], help="Kfino against Kalman")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    updates: Dict[str, Any] = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.beam is not None:
        updates.update(beam=args.beam, kappa=None)
    if args.kappa is not None:
        updates["kappa"] = args.kappa
    if args.oor is not None:
        updates.update(oor_min=args.oor[0], oor_max=args.oor[1])
    for name in ("replicates", "workers"):
        if getattr(args, name, None) is not None:
            updates[name] = getattr(args, name)
    if getattr(args, "exact", False):
        updates["em_exact"] = True
    return updates


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run a command; returns the exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config) if args.config else RunConfig()
        config = config.with_overrides(_overrides(args))
        if args.dump_config:
            save_config(config, args.dump_config)
        return COMMANDS[args.command](config, args)
    except KfinoError as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
