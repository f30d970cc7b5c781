"""
Experiment Contracts

Data contracts, report schemas and exceptions shared by every fluctlab stage.
"""

from .experiment_standards import (
    TOOL_VERSION,

    # Enumerations
    ExperimentKind,
    SuiteRelation,
    OutputFormat,
    STANDARD_CHANNEL_KINDS,
    RANDOM_CHANNEL_KINDS,

    # Configuration
    ChannelSource,
    RandomObservable,
    ObservableSource,
    ProtocolSource,
    Parameters,
    SuiteSettings,
    Tolerances,
    OutputSettings,
    ExperimentConfig,

    # Reports
    TrialRecord,
    RunSummary,
    RunReport,

    # Logging
    LogEntry,

    # Exceptions
    FluctlabError,
    ShapeError,
    StructuralError,
    ContractError,
    DomainError,
    NumericRangeError,
    SizeError,
    ConvergenceError,
    ConfigError,
    ReportIOError,
)

__all__ = [
    "TOOL_VERSION",

    # Enumerations
    "ExperimentKind",
    "SuiteRelation",
    "OutputFormat",
    "STANDARD_CHANNEL_KINDS",
    "RANDOM_CHANNEL_KINDS",

    # Configuration
    "ChannelSource",
    "RandomObservable",
    "ObservableSource",
    "ProtocolSource",
    "Parameters",
    "SuiteSettings",
    "Tolerances",
    "OutputSettings",
    "ExperimentConfig",

    # Reports
    "TrialRecord",
    "RunSummary",
    "RunReport",

    # Logging
    "LogEntry",

    # Exceptions
    "FluctlabError",
    "ShapeError",
    "StructuralError",
    "ContractError",
    "DomainError",
    "NumericRangeError",
    "SizeError",
    "ConvergenceError",
    "ConfigError",
    "ReportIOError",
]
