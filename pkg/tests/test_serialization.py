import json
import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose

from contracts import ReportIOError, StructuralError
from quantum.channels import amplitude_damping, depolarizing
from quantum.linalg_core import HermitianOperator, spectral_decompose
from quantum.twopoint import build_joint, conditional_probs, delta_histogram, gibbs
from utils.serialization import (
    channel_from_dict,
    channel_to_dict,
    format_number,
    histogram_to_csv,
    joint_to_csv,
    load_channel,
    load_protocol,
    matrix_from_entries,
    protocol_from_dict,
    protocol_to_dict,
    save_channel,
    save_histogram_csv,
    save_joint_csv,
)


def test_matrix_entries_accept_complex_pairs():
    matrix = matrix_from_entries([[1, [0.0, -1.0]], [[0.0, 1.0], 2.5]])
    assert matrix[0, 1] == -1j
    assert matrix[1, 1] == 2.5


def test_malformed_matrix_entry():
    with pytest.raises(StructuralError) as exc:
        matrix_from_entries([[1, "x"]])
    assert exc.value.error_code == "MALFORMED_MATRIX"


def test_load_channel_file(fixtures_dir):
    channel = load_channel(fixtures_dir / "amplitude_damping_channel.json")
    assert channel.n_ops == 2
    assert_allclose(channel.kraus_ops[1], amplitude_damping(1.0).kraus_ops[1])


def test_ingest_rejects_non_trace_preserving_document():
    doc = {"dim_in": 2, "dim_out": 2, "kraus": [[[1.0, 0.0], [0.0, 0.5]]]}
    with pytest.raises(StructuralError) as exc:
        channel_from_dict(doc)
    assert exc.value.error_code == "INGEST_NOT_TP"
    assert exc.value.context["tp_defect"] == pytest.approx(0.75)


def test_ingest_tolerates_small_defects_with_warning(caplog):
    doc = {"dim_in": 1, "dim_out": 1, "kraus": [[[1.0 + 1e-7]]]}
    with caplog.at_level(logging.WARNING):
        channel = channel_from_dict(doc)
    assert channel.dim_in == 1
    assert "strict checks will reject it" in caplog.text


def test_channel_document_missing_keys():
    with pytest.raises(StructuralError) as exc:
        channel_from_dict({"kraus": []})
    assert exc.value.context["missing"] == ["dim_in", "dim_out"]


def test_channel_reference_builds_standard_channel():
    channel = channel_from_dict({"kind": "depolarizing", "params": {"p": 0.2, "d": 3}})
    assert channel.dim_in == 3 and channel.n_ops == 9


def test_saved_channel_reloads_exactly(tmp_path):
    original = depolarizing(0.3)
    path = save_channel(original, tmp_path / "nested" / "channel.json")
    reloaded = load_channel(path)
    for a, b in zip(original.kraus_ops, reloaded.kraus_ops):
        assert np.array_equal(a, b)
    assert json.loads(path.read_text())["dim_out"] == 2


def test_missing_file_is_io_error(tmp_path):
    with pytest.raises(ReportIOError) as exc:
        load_channel(tmp_path / "absent.json")
    assert exc.value.error_code == "READ_FAILED"


def test_invalid_json_is_structural_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"kraus\": [", encoding="utf-8")
    with pytest.raises(StructuralError) as exc:
        load_channel(path)
    assert exc.value.error_code == "MALFORMED_JSON"


def test_load_protocol_fixture(fixtures_dir):
    protocol = load_protocol(fixtures_dir / "feedback_protocol.json")
    assert protocol.n_outcomes == 2
    assert protocol.param == 0.5
    assert protocol.error_free


def test_protocol_document_missing_keys():
    with pytest.raises(StructuralError) as exc:
        protocol_from_dict({"measurement": []})
    assert exc.value.error_code == "MALFORMED_PROTOCOL"
    assert "alpha" in exc.value.context["missing"]


def test_protocol_channel_paths_resolve_against_base_dir(fixtures_dir):
    doc = json.loads((fixtures_dir / "feedback_protocol.json").read_text())
    doc["first_channel"] = "amplitude_damping_channel.json"
    doc["error_matrix"] = [[1.0, 0.0], [0.0, 1.0]]
    protocol = protocol_from_dict(doc, base_dir=fixtures_dir)
    assert protocol.first_channel.n_ops == 2
    assert not protocol.error_free


def test_format_number_keeps_full_precision():
    assert format_number(0.1) == "0.10000000000000001"
    assert float(format_number(np.pi)) == np.pi
    assert format_number(None) == ""


def _decay_joint():
    h = HermitianOperator.from_diagonal([0.0, 1.0])
    spectrum = spectral_decompose(h)
    return build_joint(gibbs(h, np.log(3.0), spectrum), conditional_probs(amplitude_damping(1.0), spectrum, spectrum))


def test_joint_csv_uses_lf_and_one_row_per_pair(tmp_path):
    path = save_joint_csv(_decay_joint(), tmp_path / "joint.csv")
    raw = path.read_bytes()
    assert b"\r\n" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == "i,j,a_i,b_j,p"
    assert len(lines) == 5


def test_histogram_csv():
    text = histogram_to_csv(delta_histogram(_decay_joint()))
    lines = text.splitlines()
    assert lines[0] == "delta,probability"
    assert len(lines) == 4
    assert joint_to_csv(_decay_joint()).endswith("\n")


def test_channel_dict_entries_are_pairs():
    doc = channel_to_dict(amplitude_damping(0.5))
    assert doc["kraus"][0][1][1] == [pytest.approx(np.sqrt(0.5)), 0.0]


def test_protocol_document_reloads(fixtures_dir):
    protocol = load_protocol(fixtures_dir / "feedback_protocol.json")
    doc = protocol_to_dict(protocol)
    doc["error_matrix"] = [[0.9, 0.1], [0.2, 0.8]]
    again = protocol_from_dict(json.loads(json.dumps(doc)))
    assert again.param == protocol.param
    assert_allclose(again.error_model.matrix, [[0.9, 0.1], [0.2, 0.8]])
    assert_allclose(again.feedback_channels[1].kraus_ops[0], protocol.feedback_channels[1].kraus_ops[0])
    assert protocol_to_dict(again)["error_matrix"] == [[0.9, 0.1], [0.2, 0.8]]


def test_save_histogram_csv(tmp_path):
    path = save_histogram_csv(delta_histogram(_decay_joint()), tmp_path / "out" / "hist.csv")
    assert path.read_text(encoding="utf-8").startswith("delta,probability\n")
