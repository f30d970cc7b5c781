import io
import json

import pytest

from contracts import ConfigError, ExperimentKind, ReportIOError, SuiteRelation
from processors.experiment_config import config_from_dict, parse_config


def _jarzynski_doc(**overrides):
    doc = {
        "experiment": "jarzynski",
        "seed": 1,
        "channel": {"kind": "depolarizing", "params": {"p": 0.2}},
        "observables": {"A": {"diag": [0.0, 1.0]}, "B": {"diag": [0.0, 1.0]}},
        "parameters": {"alpha": 1.0, "beta": 1.0},
    }
    doc.update(overrides)
    return doc


def test_minimal_jarzynski_config_is_valid():
    config = config_from_dict(_jarzynski_doc())
    assert config.experiment == ExperimentKind.JARZYNSKI
    assert config.trials == 1
    assert config.tolerances.relation == 1e-9
    assert not config.is_randomized


def test_randomsuite_without_seed():
    doc = {"experiment": "randomsuite", "trials": 10, "suite": {"relation": "crooks"}}
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc)
    assert exc.value.error_code == "CONFIG_INVALID"
    assert "seed required" in exc.value.message


def test_random_channel_source_requires_seed():
    doc = _jarzynski_doc(seed=None, channel={"kind": "haar_unitary", "params": {"d": 2}})
    with pytest.raises(ConfigError, match="seed required"):
        config_from_dict(doc)


def test_error_matrix_row_sum_names_the_row():
    doc = {
        "experiment": "feedback",
        "protocol": {"path": "protocol.json"},
        "parameters": {"error_matrix": [[1.0, 0.0], [0.5, 0.4]]},
    }
    with pytest.raises(ConfigError) as exc:
        config_from_dict(doc)
    assert "row 1" in exc.value.message
    assert exc.value.context["location"] == "parameters.error_matrix"


def test_unknown_experiment_kind():
    with pytest.raises(ConfigError) as exc:
        config_from_dict(_jarzynski_doc(experiment="teleport"))
    assert exc.value.context["location"] == "experiment"


def test_unknown_channel_kind_is_config_error():
    with pytest.raises(ConfigError, match="unknown channel kind"):
        config_from_dict(_jarzynski_doc(channel={"kind": "teleport"}))


def test_unknown_top_level_field():
    with pytest.raises(ConfigError):
        config_from_dict(_jarzynski_doc(verbose=True))


@pytest.mark.parametrize("field, value", [
    ("trials", 0),
    ("seed", -1),
    ("seed", 2**64),
])
def test_out_of_range_fields(field, value):
    with pytest.raises(ConfigError) as exc:
        config_from_dict(_jarzynski_doc(**{field: value}))
    assert exc.value.context["location"] == field


def test_non_positive_tolerance():
    with pytest.raises(ConfigError) as exc:
        config_from_dict(_jarzynski_doc(tolerances={"relation": 0.0}))
    assert exc.value.context["location"] == "tolerances.relation"


def test_missing_relation_parameters():
    with pytest.raises(ConfigError, match="alpha"):
        config_from_dict(_jarzynski_doc(parameters={"beta": 1.0}))


def test_observable_needs_exactly_one_form():
    observables = {"A": {"diag": [0.0, 1.0], "matrix": [[0.0]]}, "B": {"diag": [0.0, 1.0]}}
    with pytest.raises(ConfigError, match="exactly one"):
        config_from_dict(_jarzynski_doc(observables=observables))


def test_config_root_must_be_object():
    with pytest.raises(ConfigError) as exc:
        config_from_dict([1, 2, 3])
    assert exc.value.error_code == "CONFIG_NOT_OBJECT"


def test_environment_seed_overrides_config_seed():
    config = config_from_dict(_jarzynski_doc(seed=1), env_seed=99)
    assert config.seed == 99


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError) as exc:
        parse_config(io.StringIO('{"experiment": "jarzynski",\n  "seed": }'))
    assert exc.value.error_code == "CONFIG_MALFORMED_JSON"
    assert exc.value.context["location"].startswith("line 2")


def test_missing_config_file_is_io_error(tmp_path):
    with pytest.raises(ReportIOError):
        parse_config(tmp_path / "absent.json")


def test_relative_paths_resolve_against_config_dir(tmp_path):
    doc = _jarzynski_doc(channel={"kind": "file", "path": "channels/decay.json"})
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    config = parse_config(path)
    assert config.channel.path == str(tmp_path.resolve() / "channels" / "decay.json")


def test_fixture_configs_parse(fixtures_dir):
    suite = parse_config(fixtures_dir / "randomsuite_jarzynski.json")
    assert suite.suite.relation == SuiteRelation.JARZYNSKI
    assert suite.trials == 100
    feedback = parse_config(fixtures_dir / "feedback_experiment.json")
    assert feedback.protocol.path.endswith("feedback_protocol.json")
