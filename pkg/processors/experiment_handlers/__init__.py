"""Experiment handlers, one per experiment kind."""

from contracts import ConfigError, ExperimentConfig

from .base import BaseExperimentHandler
from .fixed_instance import (
    CrooksHandler,
    FeedbackHandler,
    HeatHandler,
    JarzynskiHandler,
    ValidateHandler,
)
from .random_suite import RandomSuiteHandler

HANDLERS = (
    ValidateHandler,
    JarzynskiHandler,
    CrooksHandler,
    HeatHandler,
    FeedbackHandler,
    RandomSuiteHandler,
)


def select_handler(config: ExperimentConfig) -> BaseExperimentHandler:
    """Instantiate the handler for the config's experiment kind."""
    for handler_cls in HANDLERS:
        if handler_cls.can_handle(config):
            return handler_cls(config)
    raise ConfigError(
        f"no handler for experiment '{config.experiment.value}'",
        error_code="UNKNOWN_EXPERIMENT",
        context={"location": "experiment"},
    )


__all__ = [
    'BaseExperimentHandler',
    'ValidateHandler',
    'JarzynskiHandler',
    'CrooksHandler',
    'HeatHandler',
    'FeedbackHandler',
    'RandomSuiteHandler',
    'HANDLERS',
    'select_handler',
]
