#!/usr/bin/env python3
"""
Run Logger - human-readable run logs and structured log events

Creates a log file next to each report documenting:
- Experiment kind, relation and master seed
- Tolerances in force
- Per-trial status with gaps and error codes
- Summary (pass/fail counts, max gap, wall time)
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional

from contracts import LogEntry, RunReport

from .serialization import format_number, write_text

MAX_LISTED_FAILURES = 20


def log_event(
    logger: logging.Logger,
    level: int,
    event: str,
    experiment: str,
    message: str,
    trial: Optional[int] = None,
    data: Optional[Dict[str, Any]] = None,
    error: Optional[Dict[str, Any]] = None
) -> LogEntry:
    """Emit one structured event as a JSON line through a standard logger."""
    entry = LogEntry(
        level=logging.getLevelName(level),
        event=event,
        experiment=experiment,
        trial=trial,
        message=message,
        data=data,
        error=error,
    )
    logger.log(level, entry.model_dump_json(exclude_none=True))
    return entry


def generate_run_log(log_path: Path, report: RunReport, config_source: Optional[str] = None) -> Path:
    """
    Generate a detailed log for one run

    Args:
        log_path: Destination of the log file
        report: Completed run report
        config_source: Path of the configuration file, if any

    Returns:
        Path to the generated log file
    """
    lines = []
    lines.append("=" * 80)
    lines.append("FLUCTLAB RUN LOG")
    lines.append("=" * 80)
    lines.append(f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    lines.append(f"Experiment: {report.experiment.value}")
    if report.relation:
        lines.append(f"Relation: {report.relation}")
    if config_source:
        lines.append(f"Config: {config_source}")
    lines.append(f"Master seed: {report.master_seed if report.master_seed is not None else '-'}")
    lines.append(f"Tool version: {report.tool_version}")
    lines.append("")

    lines.append("TOLERANCES")
    lines.append("-" * 40)
    for key, value in report.tolerances.model_dump().items():
        lines.append(f"  {key}: {value:.1e}")
    lines.append("")

    lines.append("TRIALS")
    lines.append("-" * 40)
    for record in report.trials:
        status_mark = "✓" if record.passed else "✗"
        gap = format_number(record.gap) if record.gap is not None else "-"
        note = "" if record.asserted else " (not asserted)"
        lines.append(f"  {status_mark} trial {record.trial:>4}  seed {record.seed:<20}  gap {gap}{note}")
    lines.append("")

    failures = [record for record in report.trials if not record.passed]
    if failures:
        lines.append("FAILURES")
        lines.append("-" * 40)
        for record in failures[:MAX_LISTED_FAILURES]:
            if record.error:
                lines.append(f"  trial {record.trial}: [{record.error.get('error_code')}] {record.error.get('message')}")
            else:
                lines.append(f"  trial {record.trial}: relation does not hold (gap {format_number(record.gap)})")
            if record.defects:
                lines.append(f"      Defects: {json.dumps(record.defects)}")
        if len(failures) > MAX_LISTED_FAILURES:
            lines.append(f"  ... and {len(failures) - MAX_LISTED_FAILURES} more")
        lines.append("")

    summary = report.summary
    lines.append("SUMMARY")
    lines.append("-" * 40)
    lines.append(f"  Trials: {summary.trial_count}")
    lines.append(f"  Passed: {summary.pass_count}")
    lines.append(f"  Failed: {summary.fail_count}")
    lines.append(f"  Max gap: {format_number(summary.max_gap) if summary.max_gap is not None else '-'}")
    lines.append(f"  Wall time: {summary.wall_time_seconds:.2f}s")
    if report.all_passed:
        lines.append("  ✓ All relations hold")
    else:
        lines.append("  ✗ At least one relation failed (see above)")

    lines.append("")
    lines.append("=" * 80)

    return write_text(log_path, "\n".join(lines) + "\n")
