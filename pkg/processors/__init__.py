"""
Experiment Pipeline - Processors Module

Config parsing, instance building, per-kind handlers and the batch runner.
"""

from .experiment_config import config_from_dict, parse_config
from .experiment_runner import emit_report, main, run_experiment

__all__ = [
    'config_from_dict',
    'parse_config',
    'run_experiment',
    'emit_report',
    'main',
]
