#!/usr/bin/env python3
"""
Experiment Standards - Pydantic Schemas

Defines the contracts shared by every stage of a fluctlab run: the
experiment configuration read from disk, the per-trial records and run
report written back, the structured log entry format, and the exception
hierarchy used by the numerical modules.
"""

from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


TOOL_VERSION = "0.3.0"

# Absolute tolerance on the row sums of a classical error matrix
ERROR_MATRIX_ROW_TOL = 1e-12

MatrixEntry = Union[float, Tuple[float, float]]
MatrixRows = List[List[MatrixEntry]]


# =============================================================================
# ENUMERATIONS
# =============================================================================

class ExperimentKind(str, Enum):
    """Top-level experiment kinds accepted by the CLI"""
    VALIDATE = "validate"
    JARZYNSKI = "jarzynski"
    CROOKS = "crooks"
    HEAT = "heat"
    FEEDBACK = "feedback"
    RANDOMSUITE = "randomsuite"


class SuiteRelation(str, Enum):
    """Relations a randomized suite can sweep"""
    JARZYNSKI = "jarzynski"
    TASAKI = "tasaki"
    WORK = "work"
    CROOKS = "crooks"
    CROOKS_WORK = "crooks_work"
    HEAT = "heat"
    FEEDBACK = "feedback"
    FEEDBACK_ERRORS = "feedback_errors"
    STRUCTURAL = "structural"
    MONTECARLO = "montecarlo"


class OutputFormat(str, Enum):
    """Report output formats"""
    JSON = "json"
    CSV = "csv"


STANDARD_CHANNEL_KINDS = (
    "identity",
    "unitary",
    "depolarizing",
    "phase_damping",
    "amplitude_damping",
    "swap",
    "mub_isometry",
)

RANDOM_CHANNEL_KINDS = (
    "haar_unitary",
    "mixture_of_unitaries",
    "cptp_stinespring",
)

SOURCE_CHANNEL_KINDS = ("file", "kraus")


def _check_matrix_rows(rows: MatrixRows, name: str) -> MatrixRows:
    """Reject ragged or empty nested-list matrices early, before numpy sees them."""
    if not rows or not rows[0]:
        raise ValueError(f"{name} must be a non-empty matrix")
    width = len(rows[0])
    for index, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{name} row {index} has {len(row)} entries, expected {width}")
    return rows


# =============================================================================
# EXPERIMENT CONFIGURATION
# =============================================================================

class ChannelSource(BaseModel):
    """
    Where a channel comes from.

    Standard kinds take their parameters from `params` (p, lam, gamma, d,
    d_in, d_out, unitary). Random kinds draw from the trial seed. `file`
    loads an interchange document; `kraus` takes the operator list inline.
    """

    model_config = ConfigDict(extra="forbid")

    kind: str = Field(..., description="Channel kind (standard, random, 'file' or 'kraus')")
    params: Dict[str, Any] = Field(default_factory=dict)
    path: Optional[str] = Field(None, description="Interchange file for kind='file'")
    kraus: Optional[List[MatrixRows]] = Field(None, description="Inline Kraus operators for kind='kraus'")

    @field_validator("kind")
    @classmethod
    def validate_kind(cls, v):
        known = STANDARD_CHANNEL_KINDS + RANDOM_CHANNEL_KINDS + SOURCE_CHANNEL_KINDS
        if v not in known:
            raise ValueError(f"unknown channel kind '{v}' (expected one of: {', '.join(known)})")
        return v

    @model_validator(mode="after")
    def validate_source(self):
        if self.kind == "file" and not self.path:
            raise ValueError("channel kind 'file' requires 'path'")
        if self.kind == "kraus":
            if not self.kraus:
                raise ValueError("channel kind 'kraus' requires a non-empty 'kraus' list")
            for index, op in enumerate(self.kraus):
                _check_matrix_rows(op, f"kraus[{index}]")
        return self

    @property
    def is_random(self) -> bool:
        return self.kind in RANDOM_CHANNEL_KINDS


class RandomObservable(BaseModel):
    """Random Hermitian observable drawn from the trial seed"""

    model_config = ConfigDict(extra="forbid")

    dim: int = Field(..., ge=1)
    scale: float = Field(1.0, gt=0.0)


class ObservableSource(BaseModel):
    """An observable given as a full matrix, a diagonal, or a random draw"""

    model_config = ConfigDict(extra="forbid")

    matrix: Optional[MatrixRows] = None
    diag: Optional[List[float]] = None
    random: Optional[RandomObservable] = None

    @model_validator(mode="after")
    def validate_exactly_one(self):
        given = [name for name in ("matrix", "diag", "random") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError("observable needs exactly one of 'matrix', 'diag', 'random'")
        if self.matrix is not None:
            _check_matrix_rows(self.matrix, "matrix")
            if len(self.matrix) != len(self.matrix[0]):
                raise ValueError("observable matrix must be square")
        if self.diag is not None and not self.diag:
            raise ValueError("observable diag must be non-empty")
        return self

    @property
    def is_random(self) -> bool:
        return self.random is not None


class ProtocolSource(BaseModel):
    """Feedback protocol description, from a file or inline"""

    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = None
    inline: Optional[Dict[str, Any]] = None

    @model_validator(mode="after")
    def validate_exactly_one(self):
        if (self.path is None) == (self.inline is None):
            raise ValueError("protocol needs exactly one of 'path', 'inline'")
        return self


class Parameters(BaseModel):
    """Physical parameters of a fixed-instance experiment"""

    model_config = ConfigDict(extra="forbid")

    alpha: Optional[float] = None
    beta: Optional[float] = None
    beta0: Optional[float] = None
    beta1: Optional[float] = None
    error_matrix: Optional[List[List[float]]] = None
    n_samples: int = Field(100_000, ge=1)

    @field_validator("error_matrix")
    @classmethod
    def validate_error_matrix(cls, v):
        if v is None:
            return v
        _check_matrix_rows(v, "error_matrix")
        if len(v) != len(v[0]):
            raise ValueError("error_matrix must be square (actual x registered outcomes)")
        for index, row in enumerate(v):
            if any(entry < 0.0 or entry > 1.0 for entry in row):
                raise ValueError(f"error_matrix row {index} has entries outside [0, 1]")
            total = sum(row)
            if abs(total - 1.0) > ERROR_MATRIX_ROW_TOL:
                raise ValueError(f"error_matrix row {index} sums to {total!r}, expected 1")
        return v


class SuiteSettings(BaseModel):
    """Randomized sweep settings for experiment kind 'randomsuite'"""

    model_config = ConfigDict(extra="forbid")

    relation: SuiteRelation
    dims: List[int] = Field(default_factory=lambda: [2, 3, 4])
    outcomes: List[int] = Field(default_factory=lambda: [2, 3, 4])
    param_range: Tuple[float, float] = (-2.0, 2.0)
    channel_family: str = Field("mixture_of_unitaries", description="Bistochastic family for unital sweeps")
    n_unitaries: int = Field(3, ge=1)
    n_samples: int = Field(100_000, ge=1)

    @field_validator("dims", "outcomes")
    @classmethod
    def validate_positive_list(cls, v):
        if not v or any(item < 1 for item in v):
            raise ValueError("must be a non-empty list of positive integers")
        return v

    @field_validator("channel_family")
    @classmethod
    def validate_family(cls, v):
        if v not in ("mixture_of_unitaries", "haar_unitary"):
            raise ValueError(f"unknown bistochastic family '{v}'")
        return v

    @field_validator("param_range")
    @classmethod
    def validate_range(cls, v):
        if v[0] > v[1]:
            raise ValueError("param_range must be ordered (low, high)")
        return v


class Tolerances(BaseModel):
    """Tolerance overrides; every value must be positive"""

    model_config = ConfigDict(extra="forbid")

    validation: float = Field(1e-9, gt=0.0)
    relation: float = Field(1e-9, gt=0.0)
    crooks_ratio: float = Field(1e-8, gt=0.0)
    cluster: float = Field(1e-8, gt=0.0)


class OutputSettings(BaseModel):
    """Report destination"""

    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON


class ExperimentConfig(BaseModel):
    """
    Fully validated experiment configuration.

    Randomized experiments (any random source, or kind 'randomsuite') must
    carry a master seed; per-trial seeds are derived from it.
    """

    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentKind
    seed: Optional[int] = Field(None, ge=0, lt=2**64, description="Master seed (64-bit unsigned)")
    trials: int = Field(1, ge=1)
    channel: Optional[ChannelSource] = None
    observables: Dict[str, ObservableSource] = Field(default_factory=dict)
    parameters: Parameters = Field(default_factory=Parameters)
    protocol: Optional[ProtocolSource] = None
    suite: Optional[SuiteSettings] = None
    tolerances: Tolerances = Field(default_factory=Tolerances)
    output: OutputSettings = Field(default_factory=OutputSettings)

    @property
    def is_randomized(self) -> bool:
        if self.experiment == ExperimentKind.RANDOMSUITE:
            return True
        if self.channel is not None and self.channel.is_random:
            return True
        return any(source.is_random for source in self.observables.values())

    @model_validator(mode="after")
    def validate_requirements(self):
        if self.is_randomized and self.seed is None:
            raise ValueError("seed required")

        kind = self.experiment
        if kind in (ExperimentKind.VALIDATE, ExperimentKind.JARZYNSKI,
                    ExperimentKind.CROOKS, ExperimentKind.HEAT) and self.channel is None:
            raise ValueError(f"experiment '{kind.value}' requires 'channel'")
        if kind in (ExperimentKind.JARZYNSKI, ExperimentKind.CROOKS, ExperimentKind.HEAT):
            missing = [name for name in ("A", "B") if name not in self.observables]
            if missing:
                raise ValueError(f"experiment '{kind.value}' requires observables {missing}")
        if kind == ExperimentKind.JARZYNSKI and (self.parameters.alpha is None or self.parameters.beta is None):
            raise ValueError("experiment 'jarzynski' requires parameters 'alpha' and 'beta'")
        if kind == ExperimentKind.CROOKS and self.parameters.alpha is None:
            raise ValueError("experiment 'crooks' requires parameter 'alpha'")
        if kind == ExperimentKind.HEAT and (self.parameters.alpha is None or self.parameters.beta is None):
            raise ValueError("experiment 'heat' requires parameters 'alpha' and 'beta'")
        if kind == ExperimentKind.FEEDBACK and self.protocol is None:
            raise ValueError("experiment 'feedback' requires 'protocol'")
        if kind == ExperimentKind.RANDOMSUITE and self.suite is None:
            raise ValueError("experiment 'randomsuite' requires 'suite'")
        return self


# =============================================================================
# RUN REPORTS
# =============================================================================

class TrialRecord(BaseModel):
    """One trial: instance seed, defects, relation sides and verdict"""

    trial: int = Field(..., ge=0)
    seed: int = Field(..., ge=0)
    kind: str
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    gap: Optional[float] = None
    holds: bool = False
    asserted: bool = Field(True, description="Whether the relation's hypotheses hold for this instance")
    defects: Dict[str, float] = Field(default_factory=dict)
    details: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[Dict[str, Any]] = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.holds


class RunSummary(BaseModel):
    """Aggregate over all trials of a run"""

    trial_count: int = Field(..., ge=0)
    pass_count: int = Field(..., ge=0)
    fail_count: int = Field(..., ge=0)
    max_gap: Optional[float] = None
    wall_time_seconds: float = Field(0.0, ge=0.0)

    @model_validator(mode="after")
    def validate_counts(self):
        if self.pass_count + self.fail_count != self.trial_count:
            raise ValueError("pass_count + fail_count must equal trial_count")
        return self


class RunReport(BaseModel):
    """Complete machine-readable output of one run"""

    tool_version: str = TOOL_VERSION
    experiment: ExperimentKind
    relation: Optional[str] = None
    master_seed: Optional[int] = None
    tolerances: Tolerances = Field(default_factory=Tolerances)
    trials: List[TrialRecord] = Field(default_factory=list)
    summary: RunSummary

    @property
    def all_passed(self) -> bool:
        return self.summary.fail_count == 0

    def comparable_dump(self) -> Dict[str, Any]:
        """Everything except the wall-time field, for determinism checks."""
        return self.model_dump(mode="json", exclude={"summary": {"wall_time_seconds"}})


# =============================================================================
# LOGGING
# =============================================================================

class LogEntry(BaseModel):
    """Standard log entry format for structured logging"""

    timestamp: datetime = Field(default_factory=datetime.now)
    level: str = Field(..., description="DEBUG, INFO, WARNING, ERROR, CRITICAL")
    event: str = Field(..., description="Event type (e.g., 'trial_failed')")

    experiment: str = Field(..., description="Experiment kind generating the log")
    trial: Optional[int] = Field(None)

    message: str = Field(..., description="Human-readable message")

    data: Optional[Dict[str, Any]] = Field(None, description="Structured event data")
    error: Optional[Dict[str, Any]] = Field(None, description="Error details")


# =============================================================================
# EXCEPTIONS
# =============================================================================

class FluctlabError(Exception):
    """
    Base exception for all fluctlab errors.

    Carries a stable error code and a context dict so that failures can be
    recorded per trial and serialized into reports.
    """

    def __init__(
        self,
        message: str,
        error_code: str,
        context: Optional[Dict[str, Any]] = None,
        recoverable: bool = False
    ):
        super().__init__(message)
        self.message = message
        self.error_code = error_code
        self.context = context or {}
        self.recoverable = recoverable

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for serialization"""
        return {
            "error_type": self.__class__.__name__,
            "message": self.message,
            "error_code": self.error_code,
            "context": self.context,
            "recoverable": self.recoverable
        }


class ShapeError(FluctlabError):
    """Operand dimensions do not match"""
    pass


class StructuralError(FluctlabError):
    """Malformed object (Kraus list, measurement, protocol)"""
    pass


class ContractError(FluctlabError):
    """An operation's precondition or a relation's hypothesis is unmet"""
    pass


class DomainError(FluctlabError):
    """Parameter outside its valid range"""
    pass


class NumericRangeError(FluctlabError):
    """Floating-point overflow in an exponential or partition function"""
    pass


class SizeError(FluctlabError):
    """Composite dimension above the configured maximum"""
    pass


class ConvergenceError(FluctlabError):
    """Eigen-solver failed or returned an inaccurate decomposition"""
    pass


class ConfigError(FluctlabError):
    """Experiment configuration could not be parsed or validated"""
    pass


class ReportIOError(FluctlabError):
    """Input or output file could not be read or written"""
    pass
