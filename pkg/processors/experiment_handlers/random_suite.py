#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Randomized verification suites.

Each trial draws one instance from the trial generator and checks one
relation on it. Draw order inside a trial is fixed, so a trial seed always
reproduces the same instance.
"""

import logging
from dataclasses import replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from contracts import ExperimentConfig, ExperimentKind, SuiteRelation, TrialRecord
from quantum.channels import (
    KrausChannel,
    adjoint,
    apply,
    compose,
    cptp_stinespring,
    random_channel,
    tensor,
    validate,
)
from quantum.feedback import ErrorModel, jsu_check, jsu_error_check, random_protocol
from quantum.fluctuation import (
    crooks_check,
    crooks_work_form,
    heat_exchange_check,
    jarzynski_check,
    mixed_state_crooks,
    tasaki_two_temperature,
    work_statistics,
)
from quantum.linalg_core import random_density_matrix, random_hermitian, spectral_decompose
from quantum.twopoint import build_joint, conditional_probs, gibbs, sample_trajectories

from .base import BaseExperimentHandler
from .fixed_instance import protocol_details, protocol_verdict

logger = logging.getLogger(__name__)

STRUCTURAL_INPUTS = 50
MONTECARLO_SIGMAS = 4.0
MONTECARLO_CELL_FRACTION = 0.99


class RandomSuiteHandler(BaseExperimentHandler):
    """Dispatches each trial to the configured suite relation."""

    def __init__(self, config: ExperimentConfig):
        super().__init__(config)
        self.suite = config.suite
        self._relations: Dict[SuiteRelation, Callable[[int, int, np.random.Generator], TrialRecord]] = {
            SuiteRelation.JARZYNSKI: self._jarzynski,
            SuiteRelation.TASAKI: self._tasaki,
            SuiteRelation.WORK: self._work,
            SuiteRelation.CROOKS: self._crooks,
            SuiteRelation.CROOKS_WORK: self._crooks_work,
            SuiteRelation.HEAT: self._heat,
            SuiteRelation.FEEDBACK: self._feedback,
            SuiteRelation.FEEDBACK_ERRORS: self._feedback_errors,
            SuiteRelation.STRUCTURAL: self._structural,
            SuiteRelation.MONTECARLO: self._montecarlo,
        }

    @classmethod
    def can_handle(cls, config: ExperimentConfig) -> bool:
        return config.experiment == ExperimentKind.RANDOMSUITE

    @property
    def relation(self) -> Optional[str]:
        return self.suite.relation.value

    def run_trial(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        return self._relations[self.suite.relation](trial, seed, rng)

    # =========================
    # Instance draws
    # =========================

    def _dim(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.suite.dims))

    def _param(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(*self.suite.param_range))

    def _bistochastic(self, d: int, rng: np.random.Generator) -> KrausChannel:
        if self.suite.channel_family == "haar_unitary":
            return random_channel("haar_unitary", rng, d=d)
        return random_channel("mixture_of_unitaries", rng, d=d, n=self.suite.n_unitaries)

    def _unital_instance(self, rng: np.random.Generator):
        d = self._dim(rng)
        channel = self._bistochastic(d, rng)
        return d, channel, random_hermitian(d, rng), random_hermitian(d, rng)

    # =========================
    # Relations
    # =========================

    def _jarzynski(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d, channel, a, b = self._unital_instance(rng)
        alpha, beta = self._param(rng), self._param(rng)
        report = jarzynski_check(channel, a, b, alpha, beta, self.tolerances.relation, self.tolerances.validation)

        # equal-temperature second law on the same instance
        details = {"dim": d, "alpha": alpha, "beta": beta}
        holds = report.holds
        if beta != 0:
            stats = work_statistics(channel, a, b, beta, self.tolerances.validation)
            second_law = stats.second_law_holds(self.tolerances.relation)
            details.update({"second_law_gap": stats.second_law_gap, "second_law_holds": second_law})
            holds = holds and second_law
        return self.record(
            trial, seed,
            lhs=report.lhs, rhs=report.rhs, gap=report.relative_gap, holds=holds,
            asserted=report.asserted, defects=report.channel_report.defects(), details=details,
        )

    def _tasaki(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d, channel, h0, h1 = self._unital_instance(rng)
        beta0, beta1 = self._param(rng), self._param(rng)
        report = tasaki_two_temperature(channel, h0, h1, beta0, beta1, self.tolerances.relation)
        return self.record(
            trial, seed,
            lhs=report.lhs, rhs=report.rhs, gap=report.relative_gap, holds=report.holds,
            asserted=report.asserted, defects=report.channel_report.defects(),
            details={"dim": d, "beta0": beta0, "beta1": beta1},
        )

    def _work(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d, channel, h0, h1 = self._unital_instance(rng)
        beta = self._param(rng)
        stats = work_statistics(channel, h0, h1, beta, self.tolerances.validation)
        gap = abs(stats.jarzynski_average - stats.jarzynski_rhs) / stats.jarzynski_rhs
        second_law = stats.second_law_holds(self.tolerances.relation)
        return self.record(
            trial, seed,
            lhs=stats.jarzynski_average, rhs=stats.jarzynski_rhs, gap=gap,
            holds=gap <= self.tolerances.relation and second_law,
            asserted=stats.channel_report.is_unital, defects=stats.channel_report.defects(),
            details={
                "dim": d,
                "beta": beta,
                "mean_work": stats.mean_work,
                "delta_F": stats.delta_F,
                "second_law_gap": stats.second_law_gap,
                "second_law_holds": second_law,
                "jensen_value": stats.jensen_value,
            },
        )

    def _crooks(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d, channel, a, b = self._unital_instance(rng)
        alpha = self._param(rng)
        report = crooks_check(
            channel, a, b, alpha,
            self.tolerances.relation, self.tolerances.validation, self.tolerances.cluster,
        )
        mixed = mixed_state_crooks(channel, a, b, self.tolerances.relation)
        return self.record(
            trial, seed,
            gap=max(report.max_residual, mixed.max_residual),
            holds=report.holds and mixed.holds,
            details={
                "dim": d,
                "alpha": alpha,
                "max_residual": report.max_residual,
                "mixed_max_residual": mixed.max_residual,
                "n_bins": len(report.forward),
                "unmatched_count": report.unmatched_count,
            },
        )

    def _crooks_work(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d, channel, h0, h1 = self._unital_instance(rng)
        beta = self._param(rng)
        table = crooks_work_form(
            channel, h0, h1, beta,
            self.tolerances.crooks_ratio, self.tolerances.validation, self.tolerances.cluster,
        )
        return self.record(
            trial, seed,
            gap=table.max_relative_error, holds=table.holds,
            details={
                "dim": d,
                "beta": beta,
                "delta_F": table.delta_F,
                "rows": len(table.rows),
                "excluded_bins": table.excluded_bins,
            },
        )

    def _heat(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d_a, d_b = self._dim(rng), self._dim(rng)
        channel = self._bistochastic(d_a * d_b, rng)
        a, b = random_hermitian(d_a, rng), random_hermitian(d_b, rng)
        beta0, beta1 = self._param(rng), self._param(rng)
        report = heat_exchange_check(channel, a, b, beta0, beta1, self.tolerances.relation, self.tolerances.validation)
        second_law = bool(report.delta_S >= -self.tolerances.relation)
        return self.record(
            trial, seed,
            lhs=report.identity_average, rhs=1.0, gap=abs(np.expm1(report.log_identity_average)),
            holds=report.holds and second_law, asserted=report.asserted,
            defects=report.channel_report.defects(),
            details={
                "dims": [d_a, d_b],
                "beta0": beta0,
                "beta1": beta1,
                "delta_S": report.delta_S,
                "second_law_holds": second_law,
            },
        )

    def _outcomes(self, rng: np.random.Generator) -> Tuple[int, int]:
        return self._dim(rng), int(rng.choice(self.suite.outcomes))

    def _feedback(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d, m = self._outcomes(rng)
        protocol = random_protocol(
            d, m, rng,
            param_range=self.suite.param_range, n_unitaries=self.suite.n_unitaries,
        )
        result = jsu_check(protocol, self.tolerances.relation)
        details = {"dim": d, "outcomes": m, **protocol_details(result)}
        return self.record(
            trial, seed,
            lhs=result.generalized_average, rhs=result.gamma, gap=result.efficacy_gap,
            holds=protocol_verdict(result), details=details,
        )

    def _feedback_errors(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d, m = self._outcomes(rng)
        unital_feedback = bool(rng.integers(2))
        pclr = bool(rng.integers(2))
        protocol = random_protocol(
            d, m, rng,
            unital_feedback=unital_feedback, pclr=pclr, with_errors=True,
            param_range=self.suite.param_range, n_unitaries=self.suite.n_unitaries,
        )
        result = jsu_error_check(protocol, self.tolerances.relation)

        # identity error matrix must reproduce the error-free numbers
        noiseless = jsu_check(replace(protocol, error_model=None), self.tolerances.relation)
        perfect = jsu_error_check(replace(protocol, error_model=ErrorModel.identity(m)), self.tolerances.relation)
        reduction_defect = max(
            abs(perfect.generalized_average - noiseless.generalized_average),
            abs(perfect.gamma_tilde - noiseless.gamma),
        )
        reduction_holds = reduction_defect <= self.tolerances.relation * max(1.0, abs(noiseless.gamma))

        details = {
            "dim": d,
            "outcomes": m,
            "unital_feedback": unital_feedback,
            "pclr": pclr,
            "reduction_defect": reduction_defect,
            **protocol_details(result),
        }
        return self.record(
            trial, seed,
            lhs=result.generalized_average, rhs=result.gamma_tilde, gap=result.efficacy_gap,
            holds=protocol_verdict(result) and reduction_holds, details=details,
        )

    def _structural(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d = self._dim(rng)
        channel = self._bistochastic(d, rng)
        other = self._bistochastic(d, rng)
        tp_channel = cptp_stinespring(d, d, 2, rng)

        adjoint_report = validate(adjoint(channel), self.tolerances.validation)
        composed_report = validate(compose(channel, other), self.tolerances.validation)
        tensored_report = validate(tensor(channel, tp_channel), self.tolerances.validation)
        trace_defect = positivity_defect = 0.0
        for _ in range(STRUCTURAL_INPUTS):
            rho = random_density_matrix(d, rng)
            out = apply(tp_channel, rho, self.tolerances.validation)
            trace_defect = max(trace_defect, abs(float(np.real(np.trace(out.matrix))) - 1.0))
            positivity_defect = max(positivity_defect, max(0.0, -float(np.linalg.eigvalsh(out.matrix)[0])))

        defects = {
            "adjoint_tp_defect": adjoint_report.tp_defect,
            "adjoint_unital_defect": adjoint_report.unital_defect,
            "composed_tp_defect": composed_report.tp_defect,
            "composed_unital_defect": composed_report.unital_defect,
            "tensored_tp_defect": tensored_report.tp_defect,
            "trace_defect": trace_defect,
            "positivity_defect": positivity_defect,
        }
        gap = max(defects.values())
        return self.record(
            trial, seed, gap=gap, holds=gap <= self.tolerances.validation,
            defects=defects, details={"dim": d, "inputs": STRUCTURAL_INPUTS},
        )

    def _montecarlo(self, trial: int, seed: int, rng: np.random.Generator) -> TrialRecord:
        d = self._dim(rng)
        channel = cptp_stinespring(d, d, 2, rng)
        a, b = random_hermitian(d, rng), random_hermitian(d, rng)
        alpha = self._param(rng)
        n = self.suite.n_samples

        spec_in, spec_out = spectral_decompose(a), spectral_decompose(b)
        state = gibbs(a, alpha, spec_in)
        exact = build_joint(state, conditional_probs(channel, spec_in, spec_out))
        sampled = sample_trajectories(state, channel, spec_in, spec_out, n, rng)

        p = exact.joint
        # variance floored at 1/n for cells with n * p << 1
        sigma = np.sqrt(np.maximum(p * (1.0 - p), 1.0 / n) / n)
        deviation = np.abs(sampled.joint - p)
        within = deviation <= MONTECARLO_SIGMAS * sigma
        cells = int(within.size)
        inside = int(within.sum())
        fraction = inside / cells
        return self.record(
            trial, seed,
            gap=float(np.max(deviation)), holds=fraction >= MONTECARLO_CELL_FRACTION,
            details={"dim": d, "alpha": alpha, "samples": n, "cells": cells, "cells_within": inside},
        )
