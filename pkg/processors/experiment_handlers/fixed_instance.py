#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""Handlers for experiments on a configured instance."""

import logging
from typing import Any, Dict, List, Optional

import numpy as np

from contracts import ExperimentConfig, ExperimentKind, TrialRecord
from quantum.channels import adjoint, validate
from quantum.feedback import ProtocolResult, jsu_check, jsu_error_check
from quantum.fluctuation import (
    crooks_check,
    crooks_work_form,
    heat_exchange_check,
    jarzynski_check,
    work_statistics,
)

from ..instance_builder import build_instance
from .base import BaseExperimentHandler, finite_or_none

logger = logging.getLogger(__name__)


def table_to_lists(table: np.ndarray) -> List[Any]:
    """Nested lists with NaN entries as None."""
    if table.ndim == 1:
        return [finite_or_none(x) for x in table]
    return [table_to_lists(row) for row in table]


class ValidateHandler(BaseExperimentHandler):
    """TP and unitality defects of the configured channel (and its adjoint when square)."""

    @classmethod
    def can_handle(cls, config: ExperimentConfig) -> bool:
        return config.experiment == ExperimentKind.VALIDATE

    def run_trial(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        channel = build_instance(self.config, rng).channel
        report = validate(channel, self.tolerances.validation)
        details: Dict[str, Any] = {
            "dim_in": channel.dim_in,
            "dim_out": channel.dim_out,
            "n_ops": channel.n_ops,
            "is_tp": report.is_tp,
            "is_unital": report.is_unital,
            "is_bistochastic": report.is_bistochastic,
        }
        defects = report.defects()
        if channel.is_square:
            adjoint_report = validate(adjoint(channel), self.tolerances.validation)
            defects.update({f"adjoint_{k}": v for k, v in adjoint_report.defects().items()})
            details["adjoint_is_tp"] = adjoint_report.is_tp
        return self.record(trial, seed, gap=report.tp_defect, holds=report.is_tp, defects=defects, details=details)


class JarzynskiHandler(BaseExperimentHandler):
    """Generalized Jarzynski relation, plus work statistics at alpha = beta on square channels."""

    @classmethod
    def can_handle(cls, config: ExperimentConfig) -> bool:
        return config.experiment == ExperimentKind.JARZYNSKI

    @property
    def relation(self) -> Optional[str]:
        return "jarzynski"

    def run_trial(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        instance = build_instance(self.config, rng)
        a, b = instance.observables["A"], instance.observables["B"]
        params = self.config.parameters
        report = jarzynski_check(
            instance.channel, a, b, params.alpha, params.beta,
            self.tolerances.relation, self.tolerances.validation,
        )
        details: Dict[str, Any] = {"log_lhs": report.log_lhs, "log_rhs": report.log_rhs}
        if instance.channel.is_square and params.alpha == params.beta and params.beta != 0:
            stats = work_statistics(instance.channel, a, b, params.beta, self.tolerances.validation)
            details.update({
                "mean_work": stats.mean_work,
                "delta_F": stats.delta_F,
                "second_law_gap": stats.second_law_gap,
            })
        return self.record(
            trial, seed,
            lhs=report.lhs, rhs=report.rhs, gap=report.relative_gap,
            holds=report.holds, asserted=report.asserted,
            defects=report.channel_report.defects(), details=details,
        )


class CrooksHandler(BaseExperimentHandler):
    """Tasaki-Crooks detailed balance; the work form is added when beta is configured."""

    @classmethod
    def can_handle(cls, config: ExperimentConfig) -> bool:
        return config.experiment == ExperimentKind.CROOKS

    @property
    def relation(self) -> Optional[str]:
        return "crooks"

    def run_trial(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        instance = build_instance(self.config, rng)
        a, b = instance.observables["A"], instance.observables["B"]
        params = self.config.parameters
        report = crooks_check(
            instance.channel, a, b, params.alpha,
            self.tolerances.relation, self.tolerances.validation, self.tolerances.cluster,
        )
        holds = report.holds
        details: Dict[str, Any] = {
            "forward": [[delta, p] for delta, p in report.forward.bins],
            "backward": [[delta, p] for delta, p in report.backward.bins],
            "unmatched_count": report.unmatched_count,
            "unmatched_mass": report.unmatched_mass,
        }
        if params.beta is not None:
            table = crooks_work_form(
                instance.channel, a, b, params.beta,
                self.tolerances.crooks_ratio, self.tolerances.validation, self.tolerances.cluster,
            )
            details["work_form_max_relative_error"] = table.max_relative_error
            details["work_form_excluded_bins"] = table.excluded_bins
            holds = holds and table.holds
        defects = validate(instance.channel, self.tolerances.validation).defects()
        return self.record(trial, seed, gap=report.max_residual, holds=holds, defects=defects, details=details)


class HeatHandler(BaseExperimentHandler):
    """Heat-exchange identity and entropy production on A (x) B."""

    @classmethod
    def can_handle(cls, config: ExperimentConfig) -> bool:
        return config.experiment == ExperimentKind.HEAT

    @property
    def relation(self) -> Optional[str]:
        return "heat"

    def run_trial(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        instance = build_instance(self.config, rng)
        params = self.config.parameters
        report = heat_exchange_check(
            instance.channel, instance.observables["A"], instance.observables["B"],
            params.alpha, params.beta, self.tolerances.relation, self.tolerances.validation,
        )
        second_law = bool(report.delta_S >= -self.tolerances.relation)
        return self.record(
            trial, seed,
            lhs=report.identity_average, rhs=1.0, gap=abs(np.expm1(report.log_identity_average)),
            holds=report.holds and (second_law or not report.asserted),
            asserted=report.asserted,
            defects=report.channel_report.defects(),
            details={
                "delta_S": report.delta_S,
                "mean_delta_a": report.mean_delta_a,
                "mean_delta_b": report.mean_delta_b,
                "second_law_holds": second_law,
            },
        )


def protocol_details(result: ProtocolResult) -> Dict[str, Any]:
    return {
        "gamma": result.gamma,
        "gamma_tilde": result.gamma_tilde,
        "mutual_info_average": result.mutual_info_average,
        "mutual_info_pointwise": table_to_lists(result.mutual_info.pointwise),
        "mi_equality_value": result.mi_equality_value,
        "holds_mi": result.holds_mi,
        "outcome_probs": table_to_lists(result.outcome_probs),
        "registered_probs": table_to_lists(result.registered_probs),
        "normalization_defect": result.normalization_defect,
        "first_stage_unital": result.first_stage_unital,
        "feedback_unital": result.feedback_unital,
        "pclr_satisfied": result.measurement_flags.pclr_satisfied,
    }


def protocol_verdict(result: ProtocolResult) -> bool:
    """The efficacy relation holds, and the mutual-information one too where asserted."""
    return bool(result.holds) and result.holds_mi is not False


class FeedbackHandler(BaseExperimentHandler):
    """Feedback relations on a configured protocol, with or without measurement errors."""

    @classmethod
    def can_handle(cls, config: ExperimentConfig) -> bool:
        return config.experiment == ExperimentKind.FEEDBACK

    @property
    def relation(self) -> Optional[str]:
        return "feedback"

    def run_trial(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        protocol = build_instance(self.config, rng).protocol
        check = jsu_check if protocol.error_free else jsu_error_check
        result = check(protocol, self.tolerances.relation)
        return self.record(
            trial, seed,
            lhs=result.generalized_average, rhs=result.efficacy, gap=result.efficacy_gap,
            holds=protocol_verdict(result), asserted=result.holds is not None,
            details=protocol_details(result),
        )
