#!/usr/bin/env python3
"""
Serialization helpers.

Channel interchange documents:
    {"dim_in": int, "dim_out": int, "kraus": [operator, ...]}
with each operator a row-major list of rows and each entry a [re, im] pair
(a bare number is read as a real entry).

Protocol documents hold channel objects (interchange form, or
{"kind": ..., "params": {...}} for a standard channel), measurement
operators, observables, an optional error matrix and the parameter.

CSV output uses ',' separators, '.' decimals, LF line endings and 17
significant digits.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from contracts import ReportIOError, StructuralError
from quantum.channels import KrausChannel, standard_channel, validate
from quantum.feedback import ErrorModel, FeedbackProtocol, Measurement
from quantum.linalg_core import HermitianOperator
from quantum.twopoint import DeltaHistogram, JointDistribution

logger = logging.getLogger(__name__)

INGEST_TP_TOL = 1e-6
STRICT_TP_TOL = 1e-9


def format_number(value: Optional[float]) -> str:
    """17 significant digits; empty for missing values."""
    if value is None:
        return ""
    return format(float(value), ".17g")


# =========================
# Matrices
# =========================

def matrix_from_entries(rows: Sequence[Sequence[Any]], name: str = "matrix") -> np.ndarray:
    """Nested rows of numbers or [re, im] pairs -> complex array."""
    try:
        return np.array(
            [[complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e) for e in row] for row in rows],
            dtype=np.complex128,
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise StructuralError(
            f"{name} is not a matrix of numbers or [re, im] pairs: {exc}",
            error_code="MALFORMED_MATRIX",
        ) from exc


def matrix_to_entries(matrix: np.ndarray) -> List[List[List[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix)]


def hermitian_from_entries(rows, name: str = "observable") -> HermitianOperator:
    return HermitianOperator(matrix_from_entries(rows, name))


# =========================
# Channels
# =========================

def channel_to_dict(channel: KrausChannel) -> Dict[str, Any]:
    return {
        "dim_in": channel.dim_in,
        "dim_out": channel.dim_out,
        "kraus": [matrix_to_entries(op) for op in channel.kraus_ops],
    }


def channel_from_dict(doc: Dict[str, Any], ingest_tol: float = INGEST_TP_TOL) -> KrausChannel:
    """
    Build a channel from an interchange document or a standard-channel reference.

    Interchange documents are re-validated; a TP defect above ingest_tol is
    rejected with the exact defect in the error context.
    """
    if not isinstance(doc, dict):
        raise StructuralError("channel document must be a JSON object", error_code="MALFORMED_CHANNEL")

    if "kind" in doc and "kraus" not in doc:
        return standard_channel(doc["kind"], **doc.get("params", {}))

    missing = [key for key in ("dim_in", "dim_out", "kraus") if key not in doc]
    if missing:
        raise StructuralError(
            f"channel document is missing {missing}",
            error_code="MALFORMED_CHANNEL",
            context={"missing": missing},
        )
    ops = tuple(matrix_from_entries(op, f"kraus[{k}]") for k, op in enumerate(doc["kraus"]))
    channel = KrausChannel(ops, dim_in=int(doc["dim_in"]), dim_out=int(doc["dim_out"]))

    report = validate(channel, ingest_tol)
    if not report.is_tp:
        raise StructuralError(
            f"channel is not trace-preserving (tp_defect {report.tp_defect:.3e} > {ingest_tol:.1e})",
            error_code="INGEST_NOT_TP",
            context=report.defects(),
        )
    if report.tp_defect > STRICT_TP_TOL:
        logger.warning(f"Loaded channel has tp_defect {report.tp_defect:.3e}; strict checks will reject it")
    return channel


def _read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except OSError as exc:
        raise ReportIOError(f"cannot read {path}: {exc}", error_code="READ_FAILED", context={"path": str(path)}) from exc
    except json.JSONDecodeError as exc:
        raise StructuralError(
            f"{path} is not valid JSON: {exc}",
            error_code="MALFORMED_JSON",
            context={"path": str(path), "line": exc.lineno, "column": exc.colno},
        ) from exc


def write_text(path: Union[str, Path], text: str) -> Path:
    """Write UTF-8 text with LF line endings, creating parent directories."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write {path}: {exc}", error_code="WRITE_FAILED", context={"path": str(path)}) from exc
    return path


def load_channel(path: Union[str, Path], ingest_tol: float = INGEST_TP_TOL) -> KrausChannel:
    return channel_from_dict(_read_json(path), ingest_tol)


def save_channel(channel: KrausChannel, path: Union[str, Path]) -> Path:
    return write_text(path, json.dumps(channel_to_dict(channel), indent=2) + "\n")


# =========================
# Protocols
# =========================

def protocol_from_dict(doc: Dict[str, Any], base_dir: Optional[Path] = None) -> FeedbackProtocol:
    """
    Build a feedback protocol.

    Keys: first_channel, measurement, feedback_channels, observables_out,
    observable_in, alpha (or beta), optional error_matrix. Channel entries
    may also be file paths, resolved against base_dir.
    """
    required = ("first_channel", "measurement", "feedback_channels", "observables_out", "observable_in")
    missing = [key for key in required if key not in doc]
    if "alpha" not in doc and "beta" not in doc:
        missing.append("alpha")
    if missing:
        raise StructuralError(
            f"protocol document is missing {missing}",
            error_code="MALFORMED_PROTOCOL",
            context={"missing": missing},
        )

    def channel_entry(entry):
        if isinstance(entry, str):
            path = Path(entry)
            return load_channel(path if path.is_absolute() or base_dir is None else base_dir / path)
        return channel_from_dict(entry)

    error_matrix = doc.get("error_matrix")
    return FeedbackProtocol(
        first_channel=channel_entry(doc["first_channel"]),
        measurement=Measurement(tuple(
            matrix_from_entries(op, f"measurement[{k}]") for k, op in enumerate(doc["measurement"])
        )),
        feedback_channels=tuple(channel_entry(entry) for entry in doc["feedback_channels"]),
        observables_out=tuple(
            hermitian_from_entries(rows, f"observables_out[{k}]") for k, rows in enumerate(doc["observables_out"])
        ),
        observable_in=hermitian_from_entries(doc["observable_in"], "observable_in"),
        param=float(doc.get("alpha", doc.get("beta"))),
        error_model=ErrorModel(np.array(error_matrix, dtype=float)) if error_matrix is not None else None,
    )


def protocol_to_dict(protocol: FeedbackProtocol) -> Dict[str, Any]:
    doc = {
        "first_channel": channel_to_dict(protocol.first_channel),
        "measurement": [matrix_to_entries(op) for op in protocol.measurement.operators],
        "feedback_channels": [channel_to_dict(channel) for channel in protocol.feedback_channels],
        "observables_out": [matrix_to_entries(b.matrix) for b in protocol.observables_out],
        "observable_in": matrix_to_entries(protocol.observable_in.matrix),
        "alpha": protocol.param,
    }
    if protocol.error_model is not None:
        doc["error_matrix"] = protocol.error_model.matrix.tolist()
    return doc


def load_protocol(path: Union[str, Path]) -> FeedbackProtocol:
    path = Path(path)
    return protocol_from_dict(_read_json(path), base_dir=path.parent)


# =========================
# CSV tables
# =========================

def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


def joint_to_csv(joint: JointDistribution) -> str:
    """Columns i, j, a_i, b_j, p."""
    rows = (
        (i, j, format_number(joint.input_eigenvalues[i]), format_number(joint.output_eigenvalues[j]),
         format_number(joint.joint[i, j]))
        for i in range(joint.shape[0])
        for j in range(joint.shape[1])
    )
    return csv_text(("i", "j", "a_i", "b_j", "p"), rows)


def histogram_to_csv(histogram: DeltaHistogram) -> str:
    """Columns delta, probability."""
    rows = ((format_number(c), format_number(p)) for c, p in histogram.bins)
    return csv_text(("delta", "probability"), rows)


def save_joint_csv(joint: JointDistribution, path: Union[str, Path]) -> Path:
    return write_text(path, joint_to_csv(joint))


def save_histogram_csv(histogram: DeltaHistogram, path: Union[str, Path]) -> Path:
    return write_text(path, histogram_to_csv(histogram))
