import json
import logging

from contracts import ExperimentKind, RunReport, RunSummary, TrialRecord
from utils.run_logger import MAX_LISTED_FAILURES, generate_run_log, log_event


def _failing_report(n_failures):
    trials = [
        TrialRecord(trial=k, seed=k + 100, kind="crooks", gap=0.5, holds=False, defects={"unital_defect": 0.2})
        for k in range(n_failures)
    ]
    trials.append(TrialRecord(
        trial=n_failures, seed=1, kind="crooks",
        error={"error_type": "ContractError", "error_code": "CHANNEL_NOT_UNITAL", "message": "channel is not unital"},
    ))
    return RunReport(
        experiment=ExperimentKind.RANDOMSUITE,
        relation="crooks",
        master_seed=3,
        trials=trials,
        summary=RunSummary(trial_count=len(trials), pass_count=0, fail_count=len(trials), max_gap=0.5),
    )


def test_run_log_caps_listed_failures(tmp_path):
    path = generate_run_log(tmp_path / "suite_run.log", _failing_report(MAX_LISTED_FAILURES + 4))
    text = path.read_text(encoding="utf-8")
    assert "FAILURES" in text
    assert "... and 5 more" in text
    assert "Master seed: 3" in text
    assert "✗ At least one relation failed" in text


def test_run_log_lists_error_codes(tmp_path):
    text = generate_run_log(tmp_path / "run.log", _failing_report(1)).read_text(encoding="utf-8")
    assert "[CHANNEL_NOT_UNITAL] channel is not unital" in text
    assert 'Defects: {"unital_defect": 0.2}' in text


def test_run_log_for_passing_run(tmp_path):
    report = RunReport(
        experiment=ExperimentKind.VALIDATE,
        trials=[TrialRecord(trial=0, seed=0, kind="validate", gap=0.0, holds=True)],
        summary=RunSummary(trial_count=1, pass_count=1, fail_count=0, max_gap=0.0),
    )
    text = generate_run_log(tmp_path / "run.log", report, config_source="validate.json").read_text(encoding="utf-8")
    assert "FAILURES" not in text
    assert "Config: validate.json" in text
    assert "Master seed: -" in text
    assert "✓ All relations hold" in text


def test_log_event_emits_json_line(caplog):
    logger = logging.getLogger("fluctlab.test")
    with caplog.at_level(logging.WARNING, logger="fluctlab.test"):
        entry = log_event(logger, logging.WARNING, "trial_failed", "randomsuite", "gap too large", trial=4)
    payload = json.loads(caplog.records[-1].getMessage())
    assert payload["event"] == "trial_failed"
    assert payload["trial"] == 4
    assert "data" not in payload
    assert entry.level == "WARNING"
