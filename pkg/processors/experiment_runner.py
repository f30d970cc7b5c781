#!/usr/bin/env python3
"""
Experiment Runner - batch front end for fluctlab

Runs the trials of one experiment config, serially or on a process pool,
and writes a JSON or CSV report plus a human-readable run log.

Trial seeds are derived from the master seed and the trial index only
(utils.seeding.derive_trial_seed), so serial and parallel runs produce the
same numbers. Reports are sorted by trial index.

Exit codes:
    0  every trial passed
    1  configuration or usage error
    2  at least one relation failed or a trial raised a contract error
    3  a file could not be read or written

Usage:
    fluctlab randomsuite --config suite.json --out runs/suite.json --jobs 4
    FLUCTLAB_SEED=7 fluctlab jarzynski --config fixture.json --format csv
"""

import argparse
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from contracts import (
    ConfigError,
    ConvergenceError,
    ExperimentConfig,
    ExperimentKind,
    FluctlabError,
    OutputFormat,
    ReportIOError,
    RunReport,
    RunSummary,
    TrialRecord,
)
from utils.environment_config import get_or_create_env_config
from utils.run_logger import generate_run_log, log_event
from utils.seeding import derive_trial_seed, trial_generator
from utils.serialization import csv_text, format_number, write_text

from .experiment_config import parse_config
from .experiment_handlers import select_handler

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED = 2
EXIT_IO = 3

CSV_HEADER = ("trial", "seed", "kind", "lhs", "rhs", "gap", "holds")

# Seed used for trial derivation when a deterministic config has none
UNSEEDED_MASTER = 0


# =========================
# Trials
# =========================

def execute_trial(config: ExperimentConfig, trial: int, master_seed: int) -> TrialRecord:
    """
    Run one trial; module-level so worker processes can import it.

    Contract errors, and LinAlgError wrapped as ConvergenceError, are
    captured on the record instead of propagating.
    """
    seed = derive_trial_seed(master_seed, trial)
    handler = select_handler(config)
    kind = handler.relation or config.experiment.value
    try:
        return handler.run_trial(trial, seed, trial_generator(master_seed, trial))
    except FluctlabError as exc:
        error = exc
    except np.linalg.LinAlgError as exc:
        error = ConvergenceError(f"linear algebra failed: {exc}", error_code="LINALG_FAILED")
    return TrialRecord(trial=trial, seed=seed, kind=kind, error=error.to_dict())


def _log_failure(config: ExperimentConfig, record: TrialRecord) -> None:
    if record.error:
        log_event(
            logger, logging.ERROR, "trial_error", config.experiment.value,
            record.error["message"], trial=record.trial,
            data={"seed": record.seed}, error=record.error,
        )
    else:
        log_event(
            logger, logging.WARNING, "trial_failed", config.experiment.value,
            f"relation does not hold (gap {format_number(record.gap) or '-'})",
            trial=record.trial,
            data={"seed": record.seed, "lhs": record.lhs, "rhs": record.rhs, "asserted": record.asserted},
        )


def run_experiment(
    config: ExperimentConfig,
    jobs: int = 1,
    show_progress: bool = True
) -> RunReport:
    """
    Run every trial of a config.

    Args:
        config: validated experiment config
        jobs: worker processes (1 runs in-process)
        show_progress: show a tqdm progress bar

    Returns:
        RunReport with trials sorted by index
    """
    master_seed = config.seed if config.seed is not None else UNSEEDED_MASTER
    handler = select_handler(config)
    start = time.perf_counter()
    records: List[TrialRecord] = []

    pbar = tqdm(
        total=config.trials,
        desc=handler.relation or config.experiment.value,
        unit="trial",
        disable=not show_progress,
    )
    if jobs > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = [
                executor.submit(execute_trial, config, trial, master_seed)
                for trial in range(config.trials)
            ]
            for future in as_completed(futures):
                records.append(future.result())
                pbar.update(1)
    else:
        for trial in range(config.trials):
            records.append(execute_trial(config, trial, master_seed))
            pbar.update(1)
    pbar.close()

    records.sort(key=lambda record: record.trial)
    for record in records:
        if not record.passed:
            _log_failure(config, record)

    gaps = [record.gap for record in records if record.gap is not None]
    passed = sum(record.passed for record in records)
    summary = RunSummary(
        trial_count=len(records),
        pass_count=passed,
        fail_count=len(records) - passed,
        max_gap=max(gaps) if gaps else None,
        wall_time_seconds=time.perf_counter() - start,
    )
    logger.info(
        f"{config.experiment.value}: {summary.pass_count}/{summary.trial_count} trials passed "
        f"in {summary.wall_time_seconds:.2f}s"
    )
    return RunReport(
        experiment=config.experiment,
        relation=handler.relation,
        master_seed=config.seed,
        tolerances=config.tolerances,
        trials=records,
        summary=summary,
    )


# =========================
# Reports
# =========================

def report_to_csv(report: RunReport) -> str:
    """One row per trial; the header alone for an empty report."""
    rows = (
        (
            record.trial,
            record.seed,
            record.kind,
            format_number(record.lhs),
            format_number(record.rhs),
            format_number(record.gap),
            "true" if record.passed else "false",
        )
        for record in report.trials
    )
    return csv_text(CSV_HEADER, rows)


def emit_report(report: RunReport, path: Path, fmt: OutputFormat = OutputFormat.JSON) -> Path:
    """
    Write the report as JSON (full structure) or CSV (per-trial rows).

    Raises:
        ReportIOError: the destination cannot be written
    """
    if fmt == OutputFormat.CSV:
        text = report_to_csv(report)
    else:
        text = report.model_dump_json(indent=2) + "\n"
    write_text(path, text)
    logger.info(f"Saved report to {path}")
    return path


def default_report_path(config: ExperimentConfig, fmt: OutputFormat, output_dir: Path) -> Path:
    parts = [config.experiment.value]
    if config.suite is not None:
        parts.append(config.suite.relation.value)
    if config.seed is not None:
        parts.append(f"seed{config.seed}")
    return output_dir / f"{'_'.join(parts)}.{fmt.value}"


def run_log_path(report_path: Path, log_dir: Optional[Path] = None) -> Path:
    directory = log_dir if log_dir is not None else report_path.parent
    return directory / f"{report_path.stem}_run.log"


def print_summary(report: RunReport, report_path: Path) -> None:
    summary = report.summary
    mark = "✓" if report.all_passed else "✗"
    print(f"{mark} {report.experiment.value}{' / ' + report.relation if report.relation else ''}: "
          f"{summary.pass_count}/{summary.trial_count} passed, "
          f"max gap {format_number(summary.max_gap) or '-'}, "
          f"{summary.wall_time_seconds:.2f}s")
    print(f"💾 Report: {report_path}")


# =========================
# Main
# =========================

def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='fluctlab',
        description='Verify quantum fluctuation relations on configured or random instances'
    )

    parser.add_argument(
        'kind',
        choices=[kind.value for kind in ExperimentKind],
        help='Experiment kind (must match the config)'
    )

    parser.add_argument(
        '--config',
        required=True,
        help='Experiment config JSON file'
    )

    parser.add_argument(
        '--out',
        default=None,
        help='Report file (default: config output.path, else FLUCTLAB_OUTPUT_DIR)'
    )

    parser.add_argument(
        '--format',
        choices=[fmt.value for fmt in OutputFormat],
        default=None,
        help='Report format (default: config output.format)'
    )

    parser.add_argument(
        '--jobs',
        type=_positive_int,
        default=None,
        help='Worker processes (default: FLUCTLAB_JOBS or 1)'
    )

    parser.add_argument(
        '--log-dir',
        default=None,
        help='Directory for the run log (default: FLUCTLAB_LOG_DIR, else next to the report)'
    )

    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument(
        '--quiet',
        action='store_true',
        help='Only warnings and errors; no progress bar or summary'
    )
    verbosity.add_argument(
        '--verbose',
        action='store_true',
        help='Debug logging'
    )

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s', force=True)

    env = get_or_create_env_config()
    env_errors = env.validate()
    if env_errors:
        for error in env_errors:
            logger.error(error)
        return EXIT_CONFIG

    try:
        config = parse_config(args.config, env.seed_override)
    except ConfigError as exc:
        log_event(logger, logging.ERROR, "config_error", args.kind, exc.message, error=exc.to_dict())
        return EXIT_CONFIG
    except ReportIOError as exc:
        log_event(logger, logging.ERROR, "io_error", args.kind, exc.message, error=exc.to_dict())
        return EXIT_IO

    if config.experiment.value != args.kind:
        logger.error(f"Config describes a '{config.experiment.value}' experiment, not '{args.kind}'")
        return EXIT_CONFIG

    fmt = OutputFormat(args.format) if args.format else config.output.format
    if args.out:
        report_path = Path(args.out)
    elif config.output.path:
        report_path = Path(config.output.path)
    else:
        report_path = default_report_path(config, fmt, env.output_dir)

    jobs = args.jobs or env.default_jobs
    report = run_experiment(config, jobs=jobs, show_progress=not args.quiet)

    try:
        emit_report(report, report_path, fmt)
        generate_run_log(
            run_log_path(report_path, Path(args.log_dir) if args.log_dir else env.log_dir),
            report,
            config_source=str(args.config),
        )
    except ReportIOError as exc:
        log_event(logger, logging.ERROR, "io_error", args.kind, exc.message, error=exc.to_dict())
        return EXIT_IO

    if not args.quiet:
        print_summary(report, report_path)

    if any(record.error and record.error.get("error_type") == "ReportIOError" for record in report.trials):
        return EXIT_IO
    return EXIT_OK if report.all_passed else EXIT_FAILED


if __name__ == "__main__":
    exit(main())
