#!/usr/bin/env python3
"""Base experiment handler."""

import math
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

import numpy as np

from contracts import ExperimentConfig, TrialRecord


def finite_or_none(value: Optional[float]) -> Optional[float]:
    """Reports carry finite floats only."""
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


class BaseExperimentHandler(ABC):
    """One experiment kind: turns a trial index and seed into a TrialRecord."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.tolerances = config.tolerances

    @classmethod
    @abstractmethod
    def can_handle(cls, config: ExperimentConfig) -> bool:
        pass

    @property
    def relation(self) -> Optional[str]:
        """Name of the relation checked, for the report header."""
        return None

    @abstractmethod
    def run_trial(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        """
        Run one trial.

        Errors raised here are caught by the runner and recorded on the trial.
        """
        pass

    def record(
        self,
        trial: int,
        seed: int,
        lhs: Optional[float] = None,
        rhs: Optional[float] = None,
        gap: Optional[float] = None,
        holds: bool = False,
        asserted: bool = True,
        defects: Optional[Dict[str, float]] = None,
        details: Optional[Dict[str, Any]] = None
    ) -> TrialRecord:
        return TrialRecord(
            trial=trial,
            seed=seed,
            kind=self.relation or self.config.experiment.value,
            lhs=finite_or_none(lhs),
            rhs=finite_or_none(rhs),
            gap=finite_or_none(gap),
            holds=bool(holds),
            asserted=bool(asserted),
            defects=defects or {},
            details=details or {},
        )
