import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from contracts import ExperimentKind, OutputFormat, RunReport, RunSummary
from processors.experiment_config import config_from_dict, parse_config
from processors.experiment_runner import (
    CSV_HEADER,
    EXIT_CONFIG,
    EXIT_FAILED,
    EXIT_IO,
    EXIT_OK,
    emit_report,
    execute_trial,
    main,
    report_to_csv,
    run_experiment,
)
from utils.seeding import derive_trial_seed, trial_generator

from .conftest import LN3


def _write_config(tmp_path, doc, name="experiment.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def _jarzynski_doc():
    return {
        "experiment": "jarzynski",
        "channel": {"kind": "depolarizing", "params": {"p": 0.2, "d": 2}},
        "observables": {"A": {"diag": [0.0, 1.0]}, "B": {"diag": [0.0, 1.0]}},
        "parameters": {"alpha": 1.0, "beta": 1.0},
    }


def _suite_doc(relation, trials=10, seed=42, **suite):
    return {
        "experiment": "randomsuite",
        "seed": seed,
        "trials": trials,
        "suite": {"relation": relation, "dims": [2, 3], "outcomes": [2, 3], **suite},
    }


# =========================
# Fixed instances
# =========================

def test_amplitude_damping_counterexample_fails(fixtures_dir, tmp_path):
    out = tmp_path / "report.json"
    code = main(["jarzynski", "--config", str(fixtures_dir / "jarzynski_amplitude_damping.json"),
                 "--out", str(out), "--quiet"])
    assert code == EXIT_FAILED

    report = RunReport.model_validate_json(out.read_text(encoding="utf-8"))
    record = report.trials[0]
    assert record.lhs == pytest.approx(1.5, abs=1e-12)
    assert record.rhs == pytest.approx(1.0, abs=1e-12)
    assert not record.holds
    assert not record.asserted
    assert record.defects["unital_defect"] == pytest.approx(1.0)
    assert report.summary.fail_count == 1


def test_report_and_run_log_default_locations(fixtures_dir, tmp_path):
    code = main(["jarzynski", "--config", str(fixtures_dir / "jarzynski_amplitude_damping.json"), "--quiet"])
    assert code == EXIT_FAILED
    runs = tmp_path / "runs"
    assert (runs / "jarzynski_seed1.json").exists()
    log_text = (runs / "jarzynski_seed1_run.log").read_text(encoding="utf-8")
    assert "FLUCTLAB RUN LOG" in log_text
    assert "Relation: jarzynski" in log_text
    assert "✗ At least one relation failed" in log_text


def test_run_log_directory_from_environment(fixtures_dir, tmp_path, monkeypatch):
    from utils.environment_config import reset_env_config

    monkeypatch.setenv("FLUCTLAB_LOG_DIR", str(tmp_path / "logs"))
    reset_env_config()
    out = tmp_path / "report.json"
    main(["jarzynski", "--config", str(fixtures_dir / "jarzynski_amplitude_damping.json"),
          "--out", str(out), "--quiet"])
    assert (tmp_path / "logs" / "report_run.log").exists()
    assert not (tmp_path / "report_run.log").exists()


def test_validate_experiment_on_channel_file(fixtures_dir, tmp_path):
    doc = {
        "experiment": "validate",
        "channel": {"kind": "file", "path": str(fixtures_dir / "amplitude_damping_channel.json")},
    }
    report = run_experiment(config_from_dict(doc), show_progress=False)
    record = report.trials[0]
    assert record.holds
    assert record.details["is_tp"] is True
    assert record.details["is_unital"] is False
    assert record.details["adjoint_is_tp"] is False


def test_crooks_experiment_with_work_form():
    doc = {
        "experiment": "crooks",
        "channel": {"kind": "depolarizing", "params": {"p": 0.4, "d": 3}},
        "observables": {"A": {"diag": [0.0, 0.7, 1.9]}, "B": {"diag": [-0.5, 0.2, 1.1]}},
        "parameters": {"alpha": 0.9, "beta": 0.9},
    }
    record = run_experiment(config_from_dict(doc), show_progress=False).trials[0]
    assert record.holds
    assert record.details["unmatched_count"] == 0
    assert record.details["work_form_max_relative_error"] <= 1e-8
    assert record.defects["tp_defect"] <= 1e-12
    assert record.defects["unital_defect"] <= 1e-12


def test_heat_experiment_with_swap():
    doc = {
        "experiment": "heat",
        "channel": {"kind": "swap", "params": {"d": 2}},
        "observables": {"A": {"diag": [0.0, 1.0]}, "B": {"diag": [0.0, 1.0]}},
        "parameters": {"alpha": 2.0, "beta": 0.5},
    }
    record = run_experiment(config_from_dict(doc), show_progress=False).trials[0]
    assert record.holds
    assert record.details["delta_S"] > 0
    assert record.details["second_law_holds"] is True
    assert set(record.defects) == {"tp_defect", "unital_defect"}
    assert record.defects["unital_defect"] <= 1e-12


def test_feedback_experiment_with_measurement_errors(fixtures_dir, tmp_path):
    out = tmp_path / "feedback.json"
    code = main(["feedback", "--config", str(fixtures_dir / "feedback_experiment.json"),
                 "--out", str(out), "--quiet"])
    assert code == EXIT_OK
    record = RunReport.model_validate_json(out.read_text(encoding="utf-8")).trials[0]
    assert record.details["holds_mi"] is True
    assert record.rhs == pytest.approx(record.details["gamma_tilde"])


def test_contract_errors_are_recorded_per_trial():
    doc = {
        "experiment": "crooks",
        "channel": {"kind": "amplitude_damping", "params": {"gamma": 0.3}},
        "observables": {"A": {"diag": [0.0, 1.0]}, "B": {"diag": [0.0, 1.0]}},
        "parameters": {"alpha": LN3},
    }
    report = run_experiment(config_from_dict(doc), show_progress=False)
    record = report.trials[0]
    assert record.error["error_type"] == "ContractError"
    assert record.error["error_code"] == "CHANNEL_NOT_UNITAL"
    assert not report.all_passed


def test_linear_algebra_failure_is_recorded_as_convergence_error(monkeypatch):
    from processors.experiment_handlers.fixed_instance import JarzynskiHandler

    def singular(self, trial, seed, rng):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(JarzynskiHandler, "run_trial", singular)
    config = config_from_dict(_jarzynski_doc())
    record = execute_trial(config, 0, 11)
    assert record.error["error_type"] == "ConvergenceError"
    assert record.error["error_code"] == "LINALG_FAILED"
    assert "SVD did not converge" in record.error["message"]
    assert record.seed == derive_trial_seed(11, 0)


def test_trial_generator_feeds_handler(monkeypatch):
    from processors.experiment_handlers.fixed_instance import JarzynskiHandler

    draws = []

    def capture(self, trial, seed, rng):
        draws.append(rng.standard_normal(3))
        return self.record(trial, seed, gap=0.0, holds=True)

    monkeypatch.setattr(JarzynskiHandler, "run_trial", capture)
    execute_trial(config_from_dict(_jarzynski_doc()), 4, 11)
    assert_allclose(draws[0], trial_generator(11, 4).standard_normal(3))


# =========================
# Randomized suites
# =========================

def test_randomsuite_jarzynski_fixture_passes(fixtures_dir, tmp_path):
    out = tmp_path / "suite.json"
    code = main(["randomsuite", "--config", str(fixtures_dir / "randomsuite_jarzynski.json"),
                 "--out", str(out), "--quiet"])
    assert code == EXIT_OK
    report = RunReport.model_validate_json(out.read_text(encoding="utf-8"))
    assert report.summary.pass_count == 100
    assert report.summary.max_gap <= 1e-9
    assert [record.trial for record in report.trials] == list(range(100))


@pytest.mark.parametrize("relation", [
    "tasaki", "work", "crooks", "crooks_work", "heat",
    "feedback", "feedback_errors", "structural",
])
def test_randomsuite_relations_hold(relation):
    report = run_experiment(config_from_dict(_suite_doc(relation, trials=5)), show_progress=False)
    assert report.all_passed, [record.error or record.gap for record in report.trials]


def test_randomsuite_structural_checks_composed_and_tensored_channels():
    report = run_experiment(config_from_dict(_suite_doc("structural", trials=3)), show_progress=False)
    for record in report.trials:
        assert record.defects["composed_tp_defect"] <= 1e-9
        assert record.defects["tensored_tp_defect"] <= 1e-9
        assert record.defects["composed_unital_defect"] <= 1e-9


def test_randomsuite_montecarlo_agrees_with_exact_joint():
    doc = _suite_doc("montecarlo", trials=3, n_samples=20000)
    report = run_experiment(config_from_dict(doc), show_progress=False)
    assert report.all_passed


def test_runs_are_deterministic():
    config = config_from_dict(_suite_doc("crooks", trials=6))
    first = run_experiment(config, show_progress=False)
    second = run_experiment(config, show_progress=False)
    assert first.comparable_dump() == second.comparable_dump()


def test_parallel_run_matches_serial_run():
    config = config_from_dict(_suite_doc("jarzynski", trials=8))
    serial = run_experiment(config, jobs=1, show_progress=False)
    parallel = run_experiment(config, jobs=2, show_progress=False)
    assert serial.comparable_dump() == parallel.comparable_dump()


def test_environment_seed_override(tmp_path, monkeypatch):
    from utils.environment_config import reset_env_config

    monkeypatch.setenv("FLUCTLAB_SEED", "7")
    reset_env_config()
    config_path = _write_config(tmp_path, _suite_doc("jarzynski", trials=2, seed=1))
    out = tmp_path / "seeded.json"
    assert main(["randomsuite", "--config", str(config_path), "--out", str(out), "--quiet"]) == EXIT_OK
    assert RunReport.model_validate_json(out.read_text(encoding="utf-8")).master_seed == 7


# =========================
# Reports
# =========================

def test_empty_report_csv_is_header_only():
    report = RunReport(
        experiment=ExperimentKind.RANDOMSUITE,
        summary=RunSummary(trial_count=0, pass_count=0, fail_count=0),
    )
    assert report_to_csv(report) == ",".join(CSV_HEADER) + "\n"


def test_csv_report_of_single_trial(fixtures_dir, tmp_path):
    out = tmp_path / "report.csv"
    code = main(["jarzynski", "--config", str(fixtures_dir / "jarzynski_amplitude_damping.json"),
                 "--out", str(out), "--format", "csv", "--quiet"])
    assert code == EXIT_FAILED
    raw = out.read_bytes()
    assert b"\r\n" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert len(lines) == 2
    fields = lines[1].split(",")
    assert fields[2] == "jarzynski"
    assert float(fields[3]) == pytest.approx(1.5, abs=1e-12)
    assert fields[-1] == "false"


def test_emit_report_json_round_trip(tmp_path):
    report = run_experiment(config_from_dict(_suite_doc("jarzynski", trials=3)), show_progress=False)
    path = emit_report(report, tmp_path / "out" / "report.json", OutputFormat.JSON)
    again = RunReport.model_validate_json(path.read_text(encoding="utf-8"))
    assert again.comparable_dump() == report.comparable_dump()


# =========================
# Exit codes
# =========================

def test_kind_mismatch_is_config_error(fixtures_dir):
    code = main(["crooks", "--config", str(fixtures_dir / "jarzynski_amplitude_damping.json"), "--quiet"])
    assert code == EXIT_CONFIG


def test_invalid_config_exits_with_config_error(tmp_path):
    config_path = _write_config(tmp_path, {"experiment": "randomsuite", "suite": {"relation": "heat"}})
    assert main(["randomsuite", "--config", str(config_path), "--quiet"]) == EXIT_CONFIG


def test_missing_config_file_exits_with_io_error(tmp_path):
    assert main(["jarzynski", "--config", str(tmp_path / "absent.json"), "--quiet"]) == EXIT_IO


def test_unwritable_report_exits_with_io_error(fixtures_dir, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    code = main(["jarzynski", "--config", str(fixtures_dir / "jarzynski_amplitude_damping.json"),
                 "--out", str(blocker / "report.json"), "--quiet"])
    assert code == EXIT_IO


def test_bad_arguments_exit_with_config_error():
    assert main(["jarzynski"]) == EXIT_CONFIG
    assert main(["teleport", "--config", "x.json"]) == EXIT_CONFIG
    assert main(["jarzynski", "--config", "x.json", "--jobs", "0"]) == EXIT_CONFIG


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "fluctlab" in capsys.readouterr().out


def test_parse_config_of_fixture_matches_cli_kind(fixtures_dir):
    config = parse_config(fixtures_dir / "jarzynski_amplitude_damping.json")
    assert config.parameters.alpha == pytest.approx(LN3)
