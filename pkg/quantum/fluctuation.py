#!/usr/bin/env python3
"""
Exact fluctuation relations for channels without feedback.

Every check evaluates both sides as finite sums over the two-point joint
distribution. Exponential averages are accumulated in log form, and the
relative gap is |expm1(ln lhs - ln rhs)|, which equals |lhs - rhs|/|rhs|
without forming either side when they are huge.

Relations covered:
    generalized Jarzynski   <exp(alpha a - beta b)> = (d_A/d_B) Tr e^{-beta B} / Tr e^{-alpha A}
    two-temperature Tasaki   the same with A = H0, B = H1, alpha = beta0, beta = beta1
    work statistics          <w>, Delta F, <e^{-beta w}> and the second-law gap
    Tasaki-Crooks            e^{-alpha D} Z_A P_fwd(D) = Z_B P_bwd(-D)
    heat exchange            <exp(alpha(a - a') + beta(b - b'))> = 1, Delta S >= 0
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from contracts import ContractError, DomainError, NumericRangeError, ShapeError
from utils.seeding import SeedLike, as_generator

from .channels import (
    DEFAULT_VALIDATION_TOL,
    ChannelReport,
    KrausChannel,
    adjoint,
    random_non_unital_channel,
    require_bistochastic,
    require_tp,
)
from .linalg_core import HermitianOperator, random_hermitian, spectral_decompose, tensor_product
from .twopoint import (
    DEFAULT_CLUSTER_TOL,
    DeltaHistogram,
    DeltaSign,
    build_joint,
    conditional_probs,
    delta_histogram,
    gibbs,
    joint_from_probabilities,
    joint_log_average,
    product_spectrum,
)

logger = logging.getLogger(__name__)

DEFAULT_RELATION_TOL = 1e-9
DEFAULT_RATIO_TOL = 1e-8
NONZERO_PROBABILITY = 1e-12
SECOND_LAW_TOL = 1e-9

# largest ln x with exp(x) finite in double precision
_MAX_LOG = float(np.log(np.finfo(float).max))


def _exp_checked(log_value: float, name: str) -> float:
    if log_value > _MAX_LOG:
        raise NumericRangeError(
            f"{name} overflows double precision (ln value {log_value:.6g})",
            error_code="AVERAGE_OVERFLOW",
            context={"log_value": log_value},
        )
    return float(np.exp(log_value))


def _relative_gap(log_lhs: float, log_rhs: float) -> float:
    if np.isneginf(log_lhs) and np.isneginf(log_rhs):
        return 0.0
    return float(abs(np.expm1(log_lhs - log_rhs)))


def _check_dims(channel: KrausChannel, first: HermitianOperator, second: HermitianOperator) -> None:
    if first.dim != channel.dim_in or second.dim != channel.dim_out:
        raise ShapeError(
            f"observable dims ({first.dim}, {second.dim}) do not match channel "
            f"({channel.dim_in} -> {channel.dim_out})",
            error_code="SHAPE_MISMATCH",
        )


def _require_square(channel: KrausChannel, relation: str) -> None:
    if not channel.is_square:
        raise ShapeError(
            f"{relation} needs d_in = d_out, got {channel.dim_in} -> {channel.dim_out}",
            error_code="CHANNEL_NOT_SQUARE",
        )


# =========================
# Report types
# =========================

@dataclass(frozen=True)
class JarzynskiReport:
    """Both sides of the generalized Jarzynski relation for one instance."""

    lhs: float
    rhs: float
    relative_gap: float
    holds: bool
    tolerance: float
    log_lhs: float
    log_rhs: float
    channel_report: ChannelReport

    @property
    def asserted(self) -> bool:
        """The identity is guaranteed only for unital channels."""
        return self.channel_report.is_unital


@dataclass(frozen=True)
class WorkStatistics:
    """Work moments of a two-point protocol at one inverse temperature."""

    beta: float
    mean_work: float
    delta_F: float
    jarzynski_average: float
    jarzynski_rhs: float
    second_law_gap: float
    channel_report: ChannelReport

    @property
    def jensen_value(self) -> float:
        """exp(-beta (<w> - Delta F)); at most 1 for unital channels."""
        return float(np.exp(-self.beta * self.second_law_gap))

    def second_law_holds(self, tol: float = SECOND_LAW_TOL) -> bool:
        # beta (<w> - dF) >= 0 covers both signs of beta
        return self.beta * self.second_law_gap >= -tol


@dataclass(frozen=True)
class CrooksReport:
    """Forward and backward difference histograms with per-bin residuals."""

    forward: DeltaHistogram
    backward: DeltaHistogram
    deltas: np.ndarray
    per_bin_residuals: np.ndarray
    max_residual: float
    unmatched_count: int
    unmatched_mass: float
    holds: bool
    tolerance: float
    log_partition_in: float
    log_partition_out: float


@dataclass(frozen=True)
class CrooksWorkRow:
    work: float
    p_forward: float
    p_backward: float
    ratio: float
    expected: float
    relative_error: float


@dataclass(frozen=True)
class CrooksWorkTable:
    """P_fwd(w)/P_bwd(-w) against e^{beta (w - Delta F)}, per work bin."""

    beta: float
    delta_F: Optional[float]
    rows: Tuple[CrooksWorkRow, ...]
    excluded_bins: int
    max_relative_error: float
    holds: bool
    tolerance: float


@dataclass(frozen=True)
class HeatExchangeReport:
    """Two systems prepared at their own Gibbs states, coupled by one channel."""

    identity_average: float
    log_identity_average: float
    delta_S: float
    mean_delta_a: float
    mean_delta_b: float
    holds: bool
    tolerance: float
    channel_report: ChannelReport

    @property
    def asserted(self) -> bool:
        return self.channel_report.is_unital


@dataclass(frozen=True)
class NecessityProbe:
    """Outcome of checking the generalized Jarzynski relation on non-unital channels."""

    instances: int
    violations: int
    threshold: float
    gaps: Tuple[float, ...] = field(repr=False)

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.instances if self.instances else 0.0


# =========================
# Generalized Jarzynski
# =========================

def jarzynski_check(
    channel: KrausChannel,
    observable_in: HermitianOperator,
    observable_out: HermitianOperator,
    alpha: float,
    beta: float,
    tol: float = DEFAULT_RELATION_TOL,
    validation_tol: float = DEFAULT_VALIDATION_TOL
) -> JarzynskiReport:
    """
    Evaluate <exp(alpha a - beta b)> against (d_A/d_B) Tr e^{-beta B} / Tr e^{-alpha A}.

    The input state is gibbs(A, alpha); the left side is the exact double sum
    over the two-point joint distribution. For unital channels the relation
    is an identity, and a failure there is logged as a warning.

    Args:
        channel: trace-preserving channel H_A -> H_B
        observable_in: A on H_A
        observable_out: B on H_B
        alpha: input-state parameter
        beta: output parameter
        tol: relative-gap tolerance
        validation_tol: TP/unitality tolerance

    Returns:
        JarzynskiReport
    """
    channel_report = require_tp(channel, validation_tol)
    _check_dims(channel, observable_in, observable_out)

    spec_in = spectral_decompose(observable_in)
    spec_out = spectral_decompose(observable_out)
    state_in = gibbs(observable_in, alpha, spec_in)
    state_out = gibbs(observable_out, beta, spec_out)

    joint = build_joint(state_in, conditional_probs(channel, spec_in, spec_out, validation_tol))
    log_lhs = joint_log_average(joint, lambda a, b: alpha * a - beta * b)
    log_rhs = (
        np.log(channel.dim_in / channel.dim_out)
        + state_out.log_partition
        - state_in.log_partition
    )

    gap = _relative_gap(log_lhs, log_rhs)
    report = JarzynskiReport(
        lhs=_exp_checked(log_lhs, "Jarzynski average"),
        rhs=_exp_checked(log_rhs, "partition-function ratio"),
        relative_gap=gap,
        holds=gap <= tol,
        tolerance=tol,
        log_lhs=float(log_lhs),
        log_rhs=float(log_rhs),
        channel_report=channel_report,
    )
    if channel_report.is_unital and not report.holds:
        logger.warning(f"Jarzynski relation fails on a unital channel: gap {gap:.3e} > {tol:.1e}")
    return report


def tasaki_two_temperature(
    channel: KrausChannel,
    h0: HermitianOperator,
    h1: HermitianOperator,
    beta0: float,
    beta1: float,
    tol: float = DEFAULT_RELATION_TOL
) -> JarzynskiReport:
    """<exp(beta0 e0 - beta1 e1)> = Z1(beta1)/Z0(beta0) for square unital channels."""
    _require_square(channel, "two-temperature relation")
    return jarzynski_check(channel, h0, h1, beta0, beta1, tol)


def work_statistics(
    channel: KrausChannel,
    h0: HermitianOperator,
    h1: HermitianOperator,
    beta: float,
    validation_tol: float = DEFAULT_VALIDATION_TOL
) -> WorkStatistics:
    """
    Mean work, free-energy change and the Jarzynski average at one temperature.

    Work of a realization is w = e1_j - e0_i.

    Raises:
        DomainError: beta = 0 (free energies undefined)
    """
    if beta == 0:
        raise DomainError("free energies are undefined at beta = 0", error_code="ZERO_BETA")
    _require_square(channel, "work statistics")
    channel_report = require_tp(channel, validation_tol)
    _check_dims(channel, h0, h1)

    spec0 = spectral_decompose(h0)
    spec1 = spectral_decompose(h1)
    state0 = gibbs(h0, beta, spec0)
    state1 = gibbs(h1, beta, spec1)
    joint = build_joint(state0, conditional_probs(channel, spec0, spec1, validation_tol))

    mean_work = joint.average(lambda e0, e1: e1 - e0)
    delta_F = state1.free_energy - state0.free_energy
    log_average = joint_log_average(joint, lambda e0, e1: -beta * (e1 - e0))

    stats = WorkStatistics(
        beta=float(beta),
        mean_work=mean_work,
        delta_F=delta_F,
        jarzynski_average=_exp_checked(log_average, "<exp(-beta w)>"),
        jarzynski_rhs=_exp_checked(-beta * delta_F, "exp(-beta dF)"),
        second_law_gap=mean_work - delta_F,
        channel_report=channel_report,
    )
    if not channel_report.is_unital:
        logger.debug(f"work statistics on non-unital channel (unital defect {channel_report.unital_defect:.3e})")
    return stats


# =========================
# Tasaki-Crooks
# =========================

def _match_bins(
    forward: DeltaHistogram,
    backward: DeltaHistogram,
    tol: float
) -> List[Tuple[Optional[int], Optional[int]]]:
    """
    Pair forward bin D with backward bin -D.

    Both center lists ascend, so the negated backward list is walked in
    reverse alongside the forward one.
    """
    fwd = forward.centers
    neg_bwd = -backward.centers[::-1]
    n_bwd = backward.centers.size
    pairs = []
    i = k = 0
    while i < fwd.size or k < neg_bwd.size:
        if k >= neg_bwd.size or (i < fwd.size and fwd[i] < neg_bwd[k] - tol):
            pairs.append((i, None))
            i += 1
        elif i >= fwd.size or neg_bwd[k] < fwd[i] - tol:
            pairs.append((None, n_bwd - 1 - k))
            k += 1
        else:
            pairs.append((i, n_bwd - 1 - k))
            i += 1
            k += 1
    return pairs


def _crooks_histograms(
    channel: KrausChannel,
    observable_in: HermitianOperator,
    observable_out: HermitianOperator,
    param: float,
    validation_tol: float,
    cluster_tol: float
):
    require_bistochastic(channel, validation_tol)
    _require_square(channel, "Tasaki-Crooks relation")
    _check_dims(channel, observable_in, observable_out)

    spec_in = spectral_decompose(observable_in)
    spec_out = spectral_decompose(observable_out)
    state_in = gibbs(observable_in, param, spec_in)
    state_out = gibbs(observable_out, param, spec_out)

    forward_joint = build_joint(state_in, conditional_probs(channel, spec_in, spec_out, validation_tol))
    backward_joint = build_joint(state_out, conditional_probs(adjoint(channel), spec_out, spec_in, validation_tol))
    # backward process runs B -> A, so a - b is its output minus input
    forward = delta_histogram(forward_joint, DeltaSign.OUTPUT_MINUS_INPUT, cluster_tol)
    backward = delta_histogram(backward_joint, DeltaSign.OUTPUT_MINUS_INPUT, cluster_tol)
    return forward, backward, state_in, state_out


def crooks_check(
    channel: KrausChannel,
    observable_in: HermitianOperator,
    observable_out: HermitianOperator,
    alpha: float,
    tol: float = DEFAULT_RELATION_TOL,
    validation_tol: float = DEFAULT_VALIDATION_TOL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL
) -> CrooksReport:
    """
    Detailed balance between the forward process (Phi from gibbs(A, alpha))
    and the backward process (Phi^dagger from gibbs(B, alpha)).

    Residual per bin D: |e^{-alpha D} Z_A P_fwd(D) - Z_B P_bwd(-D)|.
    A bin present on one side only contributes its own term.

    Raises:
        ContractError: channel is not bistochastic
    """
    forward, backward, state_in, state_out = _crooks_histograms(
        channel, observable_in, observable_out, alpha, validation_tol, cluster_tol
    )
    return detailed_balance(
        forward, backward, alpha, state_in.log_partition, state_out.log_partition, tol, cluster_tol
    )


def detailed_balance(
    forward: DeltaHistogram,
    backward: DeltaHistogram,
    alpha: float,
    log_partition_in: float,
    log_partition_out: float,
    tol: float = DEFAULT_RELATION_TOL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL
) -> CrooksReport:
    """
    Compare a forward and a backward difference histogram bin by bin.

    Holds when every residual is within tol and the bins without a mirrored
    partner carry at most NONZERO_PROBABILITY in total.
    """
    deltas, residuals = [], []
    unmatched, unmatched_mass = 0, 0.0
    for i, k in _match_bins(forward, backward, cluster_tol):
        delta = forward.centers[i] if i is not None else -backward.centers[k]
        fwd_term = 0.0
        bwd_term = 0.0
        if i is not None:
            fwd_term = np.exp(-alpha * delta + log_partition_in) * forward.probabilities[i]
        if k is not None:
            bwd_term = np.exp(log_partition_out) * backward.probabilities[k]
        if i is None or k is None:
            unmatched += 1
            unmatched_mass += float(forward.probabilities[i] if i is not None else backward.probabilities[k])
        deltas.append(float(delta))
        residuals.append(float(abs(fwd_term - bwd_term)))

    residual_array = np.array(residuals)
    max_residual = float(residual_array.max()) if residual_array.size else 0.0
    unmatched_ok = unmatched_mass <= NONZERO_PROBABILITY
    if not unmatched_ok:
        logger.warning(f"{unmatched} unmatched Crooks bins carry mass {unmatched_mass:.3e}")
    return CrooksReport(
        forward=forward,
        backward=backward,
        deltas=np.array(deltas),
        per_bin_residuals=residual_array,
        max_residual=max_residual,
        unmatched_count=unmatched,
        unmatched_mass=unmatched_mass,
        holds=bool(max_residual <= tol and unmatched_ok),
        tolerance=tol,
        log_partition_in=log_partition_in,
        log_partition_out=log_partition_out,
    )


def mixed_state_crooks(
    channel: KrausChannel,
    observable_in: HermitianOperator,
    observable_out: HermitianOperator,
    tol: float = DEFAULT_RELATION_TOL
) -> CrooksReport:
    """Completely mixed inputs: P_fwd(D) = P_bwd(-D) bin by bin."""
    return crooks_check(channel, observable_in, observable_out, 0.0, tol)


def crooks_work_form(
    channel: KrausChannel,
    h0: HermitianOperator,
    h1: HermitianOperator,
    beta: float,
    tol: float = DEFAULT_RATIO_TOL,
    validation_tol: float = DEFAULT_VALIDATION_TOL,
    cluster_tol: float = DEFAULT_CLUSTER_TOL
) -> CrooksWorkTable:
    """
    Work form P_fwd(w)/P_bwd(-w) = e^{beta (w - Delta F)}.

    Only bins where both probabilities exceed 1e-12 get a ratio; the rest
    are counted in excluded_bins. The expected value is formed from
    ln Z1 - ln Z0, so beta = 0 is allowed (Delta F is then reported as None).
    """
    forward, backward, state0, state1 = _crooks_histograms(
        channel, h0, h1, beta, validation_tol, cluster_tol
    )
    rows = []
    excluded = 0
    for i, k in _match_bins(forward, backward, cluster_tol):
        if i is None or k is None:
            excluded += 1
            continue
        p_fwd = float(forward.probabilities[i])
        p_bwd = float(backward.probabilities[k])
        if p_fwd <= NONZERO_PROBABILITY or p_bwd <= NONZERO_PROBABILITY:
            excluded += 1
            continue
        work = float(forward.centers[i])
        expected = float(np.exp(beta * work + state1.log_partition - state0.log_partition))
        ratio = p_fwd / p_bwd
        rows.append(CrooksWorkRow(
            work=work,
            p_forward=p_fwd,
            p_backward=p_bwd,
            ratio=ratio,
            expected=expected,
            relative_error=abs(ratio - expected) / expected,
        ))

    max_error = max((row.relative_error for row in rows), default=0.0)
    delta_F = None
    if beta != 0:
        delta_F = state1.free_energy - state0.free_energy
    return CrooksWorkTable(
        beta=float(beta),
        delta_F=delta_F,
        rows=tuple(rows),
        excluded_bins=excluded,
        max_relative_error=max_error,
        holds=max_error <= tol,
        tolerance=tol,
    )


# =========================
# Heat exchange
# =========================

def heat_exchange_check(
    channel: KrausChannel,
    observable_a: HermitianOperator,
    observable_b: HermitianOperator,
    alpha: float,
    beta: float,
    tol: float = DEFAULT_RELATION_TOL,
    validation_tol: float = DEFAULT_VALIDATION_TOL
) -> HeatExchangeReport:
    """
    Heat exchange between two systems prepared at gibbs(A, alpha) (x) gibbs(B, beta).

    Both readouts use the product eigenbasis of alpha A (x) I + I (x) beta B.
    identity_average = <exp(alpha(a - a') + beta(b - b'))> is 1 for unital
    channels; delta_S = <alpha(a' - a) + beta(b' - b)> (primed minus unprimed).

    Raises:
        ShapeError: channel does not act on H_A (x) H_B
    """
    d = observable_a.dim * observable_b.dim
    if channel.dim_in != d or channel.dim_out != d:
        raise ShapeError(
            f"heat-exchange channel must act on the {d}-dimensional composite space, "
            f"got {channel.dim_in} -> {channel.dim_out}",
            error_code="SHAPE_NOT_COMPOSITE",
        )
    channel_report = require_tp(channel, validation_tol)

    spec_a = spectral_decompose(observable_a)
    spec_b = spectral_decompose(observable_b)
    state_a = gibbs(observable_a, alpha, spec_a)
    state_b = gibbs(observable_b, beta, spec_b)
    product = product_spectrum(spec_a, spec_b, alpha, beta)

    i_labels, j_labels = product.labels[:, 0], product.labels[:, 1]
    log_probs = state_a.log_probabilities[i_labels] + state_b.log_probabilities[j_labels]
    probs = state_a.probabilities[i_labels] * state_b.probabilities[j_labels]
    conditional = conditional_probs(channel, product.spectrum, product.spectrum, validation_tol)
    joint = joint_from_probabilities(probs, conditional, log_probs)

    log_average = joint_log_average(joint, lambda c, c_out: c - c_out)
    delta_S = joint.average(lambda c, c_out: c_out - c)
    mean_delta_a = float(np.sum(joint.joint * (product.values_a[None, :] - product.values_a[:, None])))
    mean_delta_b = float(np.sum(joint.joint * (product.values_b[None, :] - product.values_b[:, None])))

    gap = _relative_gap(log_average, 0.0)
    report = HeatExchangeReport(
        identity_average=_exp_checked(log_average, "heat-exchange average"),
        log_identity_average=float(log_average),
        delta_S=delta_S,
        mean_delta_a=mean_delta_a,
        mean_delta_b=mean_delta_b,
        holds=gap <= tol,
        tolerance=tol,
        channel_report=channel_report,
    )
    if channel_report.is_unital and not report.holds:
        logger.warning(f"heat-exchange identity fails on a unital channel: gap {gap:.3e} > {tol:.1e}")
    return report


def heat_exchange_general(
    channel: KrausChannel,
    observable_a: HermitianOperator,
    observable_b: HermitianOperator,
    observable_out: HermitianOperator,
    alpha: float,
    beta: float,
    tol: float = DEFAULT_RELATION_TOL
) -> JarzynskiReport:
    """
    Heat relation with an arbitrary output observable C on a space of any size:

        <exp(alpha a + beta b - c)> = (d_A d_B / d_C) Tr e^{-C} / (Tr e^{-alpha A} Tr e^{-beta B})

    evaluated as the generalized Jarzynski relation of the composite
    generator alpha A (x) I + I (x) beta B with unit parameters.
    """
    composite = (
        alpha * tensor_product(observable_a.matrix, np.eye(observable_b.dim))
        + beta * tensor_product(np.eye(observable_a.dim), observable_b.matrix)
    )
    return jarzynski_check(channel, HermitianOperator(composite), observable_out, 1.0, 1.0, tol)


def entropy_production(report: HeatExchangeReport, tol: float = SECOND_LAW_TOL) -> float:
    """
    Delta S of a heat-exchange report, checked against exp(-Delta S) <= 1.

    Raises:
        ContractError: the channel was not unital, or the inequality fails
    """
    if not report.channel_report.is_unital:
        raise ContractError(
            "entropy production bound needs a unital channel",
            error_code="CHANNEL_NOT_UNITAL",
            context=report.channel_report.defects(),
        )
    if np.exp(-report.delta_S) > 1.0 + tol:
        raise ContractError(
            f"entropy production {report.delta_S:.6g} violates exp(-dS) <= 1",
            error_code="ENTROPY_BOUND_VIOLATED",
            context={"delta_S": report.delta_S},
        )
    return report.delta_S


# =========================
# Necessity probe
# =========================

def necessity_probe(
    dims: Sequence[int],
    instances: int,
    rng: SeedLike = None,
    threshold: float = 1e-6,
    param_range: Tuple[float, float] = (-2.0, 2.0),
    env: int = 2,
    min_unital_defect: float = 1e-3
) -> NecessityProbe:
    """
    Run the generalized Jarzynski check on random non-unital channels and
    count how often the relative gap exceeds threshold.
    """
    rng = as_generator(rng)
    gaps = []
    for _ in range(instances):
        d = int(rng.choice(dims))
        channel = random_non_unital_channel(d, d, env, rng, min_unital_defect)
        a = random_hermitian(d, rng)
        b = random_hermitian(d, rng)
        alpha, beta = rng.uniform(*param_range, size=2)
        gaps.append(jarzynski_check(channel, a, b, float(alpha), float(beta)).relative_gap)
    violations = sum(gap > threshold for gap in gaps)
    logger.info(f"necessity probe: {violations}/{instances} non-unital channels violate the relation")
    return NecessityProbe(instances=instances, violations=violations, threshold=threshold, gaps=tuple(gaps))
