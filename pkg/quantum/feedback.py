#!/usr/bin/env python3
"""
Quantum measurement and the four-stage feedback protocol.

Stages of one realization:
    (i)   read out the input observable A on gibbs(A, alpha): label i
    (ii)  evolve through the first channel Phi and measure {N_mu}: outcome mu
    (iii) the controller registers nu (nu = mu without errors, else with
          probability r(nu|mu)) and applies Psi_nu
    (iv)  read out the registered observable B_nu: label j

The exact joint table p(a_i, mu, nu, b_j) is indexed [i, mu, nu, j]; the
error-free protocol is the same enumeration with r = identity. Efficacies
are computed twice, once from the joint table and once from their closed
trace forms, and both are reported.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from contracts import ContractError, DomainError, ShapeError, StructuralError
from utils.seeding import SeedLike, as_generator

from .channels import (
    DEFAULT_VALIDATION_TOL,
    KrausChannel,
    apply_operator,
    cptp_stinespring,
    haar_unitary_matrix,
    mixture_of_unitaries,
    random_isometry,
    require_tp,
    validate,
)
from .linalg_core import (
    ComplexMatrix,
    DensityMatrix,
    HermitianOperator,
    as_complex_matrix,
    random_hermitian,
    spectral_decompose,
    unitarity_defect,
)
from .twopoint import gibbs

logger = logging.getLogger(__name__)

MEASUREMENT_TOL = 1e-9
ERROR_ROW_TOL = 1e-12
NORMALIZATION_TOL = 1e-10
MIN_OUTCOME_PROBABILITY = 1e-15


# =========================
# Measurements
# =========================

def _operator_sums(operators: np.ndarray) -> Tuple[float, float]:
    d = operators.shape[1]
    complete = np.einsum("kji,kjl->il", operators.conj(), operators)
    dual = np.einsum("kij,klj->il", operators, operators.conj())
    return (
        float(np.max(np.abs(complete - np.eye(d)))),
        float(np.max(np.abs(dual - np.eye(d)))),
    )


@dataclass(frozen=True, eq=False)
class Measurement:
    """
    Measurement operators {N_mu}; the outcome count may exceed the dimension.

    Construction rejects sets whose completeness defect max|sum N^dagger N - I|
    exceeds MEASUREMENT_TOL.
    """

    operators: Tuple[ComplexMatrix, ...]

    def __post_init__(self):
        ops = tuple(as_complex_matrix(op, f"measurement operator {k}") for k, op in enumerate(self.operators))
        if not ops:
            raise StructuralError("measurement needs at least one operator", error_code="EMPTY_MEASUREMENT")
        d = ops[0].shape[0]
        for k, op in enumerate(ops):
            if op.shape != (d, d):
                raise StructuralError(
                    f"measurement operator {k} has shape {op.shape}, expected {(d, d)}",
                    error_code="MEASUREMENT_SHAPE",
                    context={"index": k},
                )
        completeness, _ = _operator_sums(np.stack(ops))
        if completeness > MEASUREMENT_TOL:
            raise StructuralError(
                f"measurement is incomplete (defect {completeness:.3e})",
                error_code="MEASUREMENT_INCOMPLETE",
                context={"completeness_defect": completeness},
            )
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.operators)


@dataclass(frozen=True)
class MeasurementFlags:
    complete: bool
    pclr_satisfied: bool
    completeness_defect: float
    pclr_defect: float


def validate_measurement(measurement: Measurement, tol: float = MEASUREMENT_TOL) -> MeasurementFlags:
    """Completeness (sum N^dagger N = I) and its dual sum N N^dagger = I."""
    if not tol > 0:
        raise DomainError(f"measurement tolerance must be positive, got {tol!r}", error_code="BAD_TOLERANCE")
    completeness, dual = _operator_sums(np.stack(measurement.operators))
    return MeasurementFlags(
        complete=completeness <= tol,
        pclr_satisfied=dual <= tol,
        completeness_defect=completeness,
        pclr_defect=dual,
    )


def post_measurement_state(
    measurement: Measurement,
    rho: DensityMatrix,
    outcome: int
) -> Tuple[float, DensityMatrix]:
    """
    Outcome probability Tr(N^dagger N rho) and the normalized post-measurement state.

    Raises:
        DomainError: the outcome has zero probability
    """
    if rho.dim != measurement.dim:
        raise ShapeError(
            f"state dim {rho.dim} != measurement dim {measurement.dim}",
            error_code="SHAPE_MISMATCH",
        )
    n_op = measurement.operators[outcome]
    unnormalized = n_op @ rho.matrix @ n_op.conj().T
    probability = float(np.real(np.trace(unnormalized)))
    if probability <= MIN_OUTCOME_PROBABILITY:
        raise DomainError(
            f"outcome {outcome} has probability {probability:.3e}",
            error_code="ZERO_PROBABILITY_OUTCOME",
            context={"outcome": outcome, "probability": probability},
        )
    return probability, DensityMatrix(unnormalized / probability)


def projective_measurement(basis) -> Measurement:
    """Rank-one projectors onto the columns of a unitary."""
    basis = as_complex_matrix(basis, "measurement basis")
    defect = unitarity_defect(basis)
    if basis.shape[0] != basis.shape[1] or defect > MEASUREMENT_TOL:
        raise DomainError(
            f"measurement basis is not orthonormal (defect {defect:.3e})",
            error_code="BASIS_NOT_ORTHONORMAL",
        )
    return Measurement(tuple(np.outer(basis[:, k], basis[:, k].conj()) for k in range(basis.shape[1])))


def unitary_mixture_measurement(weights: Sequence[float], unitaries: Sequence[np.ndarray]) -> Measurement:
    """N_k = sqrt(w_k) U_k; complete and satisfying the dual relation."""
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(unitaries):
        raise StructuralError(
            f"{len(weights)} weights for {len(unitaries)} unitaries",
            error_code="LENGTH_MISMATCH",
        )
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > ERROR_ROW_TOL:
        raise DomainError("unitary-mixture weights must be a probability vector", error_code="BAD_WEIGHTS")
    return Measurement(tuple(np.sqrt(w) * np.asarray(u, dtype=np.complex128) for w, u in zip(weights, unitaries)))


def random_measurement(dim: int, n_outcomes: int, rng: SeedLike = None, pclr: bool = False) -> Measurement:
    """
    Random complete measurement.

    With pclr=True the operators are weighted Haar unitaries; otherwise they
    are the d x d blocks of a random (n_outcomes * d) x d isometry.
    """
    rng = as_generator(rng)
    if pclr:
        weights = rng.dirichlet(np.ones(n_outcomes))
        return unitary_mixture_measurement(weights, [haar_unitary_matrix(dim, rng) for _ in range(n_outcomes)])
    v = random_isometry(n_outcomes * dim, dim, rng)
    return Measurement(tuple(v[k * dim:(k + 1) * dim, :] for k in range(n_outcomes)))


# =========================
# Classical errors
# =========================

@dataclass(frozen=True, eq=False)
class ErrorModel:
    """r(nu|mu) indexed [mu, nu]: row-stochastic over the actual outcome mu."""

    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.size == 0:
            raise ShapeError(
                f"error model must be a square matrix, got shape {matrix.shape}",
                error_code="ERROR_MODEL_SHAPE",
            )
        if np.any(matrix < 0.0) or np.any(matrix > 1.0):
            raise DomainError("error model entries must lie in [0, 1]", error_code="ERROR_MODEL_RANGE")
        for row, total in enumerate(matrix.sum(axis=1)):
            if abs(total - 1.0) > ERROR_ROW_TOL:
                raise DomainError(
                    f"error model row {row} sums to {total!r}, expected 1",
                    error_code="ERROR_MODEL_ROW_SUM",
                    context={"row": row, "sum": float(total)},
                )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def n_outcomes(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, n_outcomes: int) -> "ErrorModel":
        return cls(np.eye(n_outcomes))


def random_error_model(n_outcomes: int, rng: SeedLike = None) -> ErrorModel:
    """Each row drawn uniformly from the probability simplex."""
    rng = as_generator(rng)
    return ErrorModel(rng.dirichlet(np.ones(n_outcomes), size=n_outcomes))


# =========================
# Protocol
# =========================

@dataclass(frozen=True, eq=False)
class FeedbackProtocol:
    """
    First channel, measurement, per-outcome channels and observables.

    Every space has the same dimension. Lists are indexed by outcome.
    """

    first_channel: KrausChannel
    measurement: Measurement
    feedback_channels: Tuple[KrausChannel, ...]
    observables_out: Tuple[HermitianOperator, ...]
    observable_in: HermitianOperator
    param: float
    error_model: Optional[ErrorModel] = None

    def __post_init__(self):
        channels = tuple(self.feedback_channels)
        observables = tuple(self.observables_out)
        m = self.measurement.n_outcomes
        if len(channels) != m or len(observables) != m:
            raise StructuralError(
                f"{m} outcomes but {len(channels)} feedback channels and {len(observables)} observables",
                error_code="PROTOCOL_LENGTH_MISMATCH",
                context={"outcomes": m, "channels": len(channels), "observables": len(observables)},
            )
        if self.error_model is not None and self.error_model.n_outcomes != m:
            raise StructuralError(
                f"error model covers {self.error_model.n_outcomes} outcomes, measurement has {m}",
                error_code="PROTOCOL_LENGTH_MISMATCH",
            )

        d = self.observable_in.dim
        dims = {
            "first channel in": self.first_channel.dim_in,
            "first channel out": self.first_channel.dim_out,
            "measurement": self.measurement.dim,
        }
        for k, (channel, observable) in enumerate(zip(channels, observables)):
            dims[f"feedback channel {k} in"] = channel.dim_in
            dims[f"feedback channel {k} out"] = channel.dim_out
            dims[f"observable {k}"] = observable.dim
        mismatched = {name: value for name, value in dims.items() if value != d}
        if mismatched:
            raise StructuralError(
                f"all protocol spaces must have dimension {d}; mismatched: {mismatched}",
                error_code="PROTOCOL_DIM_MISMATCH",
                context={"dim": d, "mismatched": mismatched},
            )
        object.__setattr__(self, "feedback_channels", channels)
        object.__setattr__(self, "observables_out", observables)
        object.__setattr__(self, "param", float(self.param))

    @property
    def dim(self) -> int:
        return self.observable_in.dim

    @property
    def n_outcomes(self) -> int:
        return self.measurement.n_outcomes

    @property
    def error_free(self) -> bool:
        return self.error_model is None

    def error_matrix(self) -> np.ndarray:
        if self.error_model is None:
            return np.eye(self.n_outcomes)
        return self.error_model.matrix


@dataclass(frozen=True)
class MutualInformation:
    """Pointwise table indexed [mu, nu] (NaN off the support) and its average."""

    pointwise: np.ndarray
    average: float


def mutual_information(pair_joint) -> MutualInformation:
    """
    I_{nu mu} = ln(p(mu, nu) / (p(mu) p(nu))) on the support; <I> with 0 ln 0 = 0.

    Args:
        pair_joint: joint probabilities indexed [mu, nu]
    """
    pair_joint = np.asarray(pair_joint, dtype=float)
    if pair_joint.ndim != 2:
        raise ShapeError(f"joint over (mu, nu) must be 2-D, got {pair_joint.shape}", error_code="SHAPE_MISMATCH")
    if np.any(pair_joint < -ERROR_ROW_TOL) or abs(pair_joint.sum() - 1.0) > NORMALIZATION_TOL:
        raise DomainError("joint over (mu, nu) is not a probability table", error_code="BAD_JOINT")

    p_mu = pair_joint.sum(axis=1)
    p_nu = pair_joint.sum(axis=0)
    support = pair_joint > 0
    pointwise = np.full(pair_joint.shape, np.nan)
    marginals = np.outer(p_mu, p_nu)
    pointwise[support] = np.log(pair_joint[support] / marginals[support])
    average = float(np.sum(pair_joint[support] * pointwise[support]))
    return MutualInformation(pointwise=pointwise, average=average)


@dataclass(frozen=True)
class ProtocolResult:
    """
    Exact statistics of a feedback protocol.

    holds / holds_mi are None when the hypotheses of the corresponding
    relation are not met for this protocol.
    """

    joint: np.ndarray
    error_free: bool
    input_probs: np.ndarray
    outcome_probs: np.ndarray
    registered_probs: np.ndarray
    pair_probs: np.ndarray
    generalized_average: float
    gamma: float
    gamma_tilde: float
    mutual_info: MutualInformation
    mi_equality_value: float
    normalization_defect: float
    first_stage_unital: bool
    feedback_unital: bool
    measurement_flags: MeasurementFlags
    tolerance: float
    holds: Optional[bool] = None
    holds_mi: Optional[bool] = None

    @property
    def mutual_info_average(self) -> float:
        return self.mutual_info.average

    @property
    def efficacy(self) -> float:
        """gamma without errors, gamma-tilde with them."""
        return self.gamma if self.error_free else self.gamma_tilde

    @property
    def efficacy_gap(self) -> float:
        return abs(self.generalized_average - self.efficacy)

    @property
    def normalized(self) -> bool:
        return self.normalization_defect <= NORMALIZATION_TOL

    def outcome_table(self) -> np.ndarray:
        """p(a_i, mu, b_j) indexed [i, mu, j] when error-free, else the full table."""
        if not self.error_free:
            return self.joint
        m = self.joint.shape[1]
        return np.stack([self.joint[:, mu, mu, :] for mu in range(m)], axis=1)


def within_tolerance(value: float, target: float, tol: float) -> bool:
    """Absolute agreement: |value - target| <= tol."""
    return bool(abs(value - target) <= tol)


def run_protocol(protocol: FeedbackProtocol, tol: float = DEFAULT_VALIDATION_TOL) -> ProtocolResult:
    """
    Enumerate every (i, mu, nu, j) of the protocol.

    Raises:
        ContractError: the first channel or a feedback channel is not trace-preserving
    """
    first_report = require_tp(protocol.first_channel, tol, "first channel")
    feedback_unital = True
    for k, channel in enumerate(protocol.feedback_channels):
        feedback_unital &= require_tp(channel, tol, f"feedback channel {k}").is_unital
    flags = validate_measurement(protocol.measurement, MEASUREMENT_TOL)

    d, m, alpha = protocol.dim, protocol.n_outcomes, protocol.param
    r = protocol.error_matrix()
    spec_in = spectral_decompose(protocol.observable_in)
    state_in = gibbs(protocol.observable_in, alpha, spec_in)
    out_specs = [spectral_decompose(b) for b in protocol.observables_out]
    out_states = [gibbs(b, alpha, spec) for b, spec in zip(protocol.observables_out, out_specs)]

    # q[i, mu, nu, j] = <b_j^nu| Psi_nu(N_mu Phi(|a_i><a_i|) N_mu^dagger) |b_j^nu>
    q = np.empty((d, m, m, d))
    for i in range(d):
        evolved = apply_operator(protocol.first_channel, spec_in.projector(i))
        for mu, n_op in enumerate(protocol.measurement.operators):
            measured = n_op @ evolved @ n_op.conj().T
            for nu, psi in enumerate(protocol.feedback_channels):
                q[i, mu, nu] = np.real(out_specs[nu].diagonal_of(apply_operator(psi, measured)))
    q = np.clip(q, 0.0, None)
    joint = state_in.probabilities[:, None, None, None] * r[None, :, :, None] * q

    first_output = apply_operator(protocol.first_channel, state_in.density.matrix)
    outcome_probs = np.array([
        float(np.real(np.trace(n_op.conj().T @ n_op @ first_output)))
        for n_op in protocol.measurement.operators
    ])
    pair_probs = outcome_probs[:, None] * r
    registered_probs = pair_probs.sum(axis=0)
    mi = mutual_information(pair_probs / pair_probs.sum())

    # exponent ln p_i + ln Z_A + alpha a_i - ln Z_nu - alpha b_j^nu, exact in log form
    out_values = np.stack([spec.eigenvalues for spec in out_specs])
    out_log_z = np.array([state.log_partition for state in out_states])
    exponent = (
        (state_in.log_probabilities + state_in.log_partition + alpha * spec_in.eigenvalues)[:, None, None, None]
        - (out_log_z[:, None] + alpha * out_values)[None, None, :, :]
    )
    weights = r[None, :, :, None] * q
    generalized_average = _log_weighted_sum(exponent, weights)

    supported = pair_probs > 0
    info = np.zeros_like(r)
    info[supported] = np.log(r[supported] / registered_probs[np.nonzero(supported)[1]])
    mi_weights = np.where(supported[None, :, :, None], weights, 0.0)
    mi_equality_value = _log_weighted_sum(exponent - info[None, :, :, None], mi_weights)

    traces = _efficacy_traces(protocol, out_states)
    result = ProtocolResult(
        joint=joint,
        error_free=protocol.error_free,
        input_probs=state_in.probabilities,
        outcome_probs=outcome_probs,
        registered_probs=registered_probs,
        pair_probs=pair_probs,
        generalized_average=generalized_average,
        gamma=_efficacy(np.eye(m), traces),
        gamma_tilde=_efficacy(r, traces),
        mutual_info=mi,
        mi_equality_value=mi_equality_value,
        normalization_defect=float(abs(joint.sum() - 1.0)),
        first_stage_unital=first_report.is_unital,
        feedback_unital=feedback_unital,
        measurement_flags=flags,
        tolerance=tol,
    )
    if result.normalization_defect > NORMALIZATION_TOL:
        logger.warning(f"protocol joint table sums to 1 - {result.normalization_defect:.3e}")
    return result


def _log_weighted_sum(exponent: np.ndarray, weights: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        value = logsumexp(np.where(weights > 0, exponent, 0.0), b=weights)
    return float(np.exp(value))


def _efficacy_traces(protocol: FeedbackProtocol, out_states) -> np.ndarray:
    """T[mu, nu] = Tr(rho_B^nu Psi_nu(N_mu N_mu^dagger))."""
    m = protocol.n_outcomes
    traces = np.empty((m, m))
    for mu, n_op in enumerate(protocol.measurement.operators):
        nn = n_op @ n_op.conj().T
        for nu, psi in enumerate(protocol.feedback_channels):
            traces[mu, nu] = float(np.real(np.trace(out_states[nu].density.matrix @ apply_operator(psi, nn))))
    return traces


def _efficacy(error_matrix: np.ndarray, traces: np.ndarray) -> float:
    # same enumeration order for gamma (r = I) and gamma-tilde
    total = 0.0
    for mu in range(traces.shape[0]):
        for nu in range(traces.shape[1]):
            total += error_matrix[mu, nu] * traces[mu, nu]
    return total


def jsu_check(protocol: FeedbackProtocol, tol: float = DEFAULT_VALIDATION_TOL) -> ProtocolResult:
    """
    Error-free feedback relation: generalized average = gamma.

    Raises:
        ContractError: protocol has an error model, or the first channel is not unital
    """
    if not protocol.error_free:
        raise ContractError(
            "protocol carries an error model; use jsu_error_check",
            error_code="UNEXPECTED_ERROR_MODEL",
        )
    result = run_protocol(protocol, tol)
    if not result.first_stage_unital:
        raise ContractError(
            "feedback relation needs a unital first channel",
            error_code="CHANNEL_NOT_UNITAL",
            context=validate(protocol.first_channel, tol).defects(),
        )
    holds = result.normalized and within_tolerance(result.generalized_average, result.gamma, tol)
    return replace(result, holds=holds)


def jsu_error_check(protocol: FeedbackProtocol, tol: float = DEFAULT_VALIDATION_TOL) -> ProtocolResult:
    """
    Feedback relations with classical measurement errors.

    holds: generalized average = gamma-tilde (needs a unital first channel).
    holds_mi: mutual-information equality = 1 (additionally needs unital
    feedback channels and a measurement with sum N N^dagger = I).
    Flags whose hypotheses fail stay None; both are False when the joint
    table is not normalized within NORMALIZATION_TOL.
    """
    if protocol.error_free:
        raise ContractError("protocol has no error model; use jsu_check", error_code="MISSING_ERROR_MODEL")
    result = run_protocol(protocol, tol)
    holds = holds_mi = None
    if result.first_stage_unital:
        holds = result.normalized and within_tolerance(result.generalized_average, result.gamma_tilde, tol)
        if result.feedback_unital and result.measurement_flags.pclr_satisfied:
            holds_mi = result.normalized and within_tolerance(result.mi_equality_value, 1.0, tol)
    return replace(result, holds=holds, holds_mi=holds_mi)


# =========================
# Thermodynamic form
# =========================

@dataclass(frozen=True)
class WorkFormFeedback:
    """Work/free-energy rewrite of the feedback relations at inverse temperature beta."""

    beta: float
    average: float
    abstract_average: float
    efficacy: float
    mi_equality_value: float
    holds: Optional[bool]
    holds_mi: Optional[bool]


def work_form_feedback(
    protocol: FeedbackProtocol,
    beta: Optional[float] = None,
    tol: float = DEFAULT_VALIDATION_TOL
) -> WorkFormFeedback:
    """
    <exp(-beta w + beta (F_nu - F_0))> with w = e_j^nu - e_i^0, against gamma
    (or gamma-tilde), and <exp(-beta w + beta dF_nu - I)> against 1.

    Args:
        protocol: protocol with Hamiltonians H_0, H_nu; its param is replaced by beta if given
        beta: inverse temperature

    Raises:
        DomainError: beta = 0
    """
    if beta is not None:
        protocol = replace(protocol, param=beta)
    beta = protocol.param
    if beta == 0:
        raise DomainError("free energies are undefined at beta = 0", error_code="ZERO_BETA")

    result = run_protocol(protocol, tol)
    state0 = gibbs(protocol.observable_in, beta)
    free_energies = np.array([gibbs(h, beta).free_energy for h in protocol.observables_out])
    e0 = spectral_decompose(protocol.observable_in).eigenvalues
    e_out = np.stack([spectral_decompose(h).eigenvalues for h in protocol.observables_out])

    work = e_out[None, None, :, :] - e0[:, None, None, None]
    exponent = -beta * work + beta * (free_energies - state0.free_energy)[None, None, :, None]
    weights = result.joint
    average = _log_weighted_sum(exponent, weights)

    r = protocol.error_matrix()
    supported = result.pair_probs > 0
    info = np.zeros_like(r)
    info[supported] = np.log(r[supported] / result.registered_probs[np.nonzero(supported)[1]])
    mi_weights = np.where(supported[None, :, :, None], weights, 0.0)
    mi_value = _log_weighted_sum(exponent - info[None, :, :, None], mi_weights)

    holds = holds_mi = None
    if result.first_stage_unital:
        holds = result.normalized and within_tolerance(average, result.efficacy, tol)
        if result.feedback_unital and result.measurement_flags.pclr_satisfied:
            holds_mi = result.normalized and within_tolerance(mi_value, 1.0, tol)
    return WorkFormFeedback(
        beta=beta,
        average=average,
        abstract_average=result.generalized_average,
        efficacy=result.efficacy,
        mi_equality_value=mi_value,
        holds=holds,
        holds_mi=holds_mi,
    )


# =========================
# Random instances
# =========================

def random_protocol(
    dim: int,
    n_outcomes: int,
    rng: SeedLike = None,
    unital_feedback: bool = False,
    pclr: bool = False,
    with_errors: bool = False,
    param_range: Tuple[float, float] = (-2.0, 2.0),
    n_unitaries: int = 3,
    env: int = 2
) -> FeedbackProtocol:
    """
    Random protocol with a unital first channel (mixture of Haar unitaries).

    Feedback channels are mixtures of unitaries when unital_feedback is set,
    otherwise random Stinespring channels.
    """
    rng = as_generator(rng)
    first = mixture_of_unitaries(dim, n_unitaries, rng)
    measurement = random_measurement(dim, n_outcomes, rng, pclr=pclr)
    if unital_feedback:
        feedback = tuple(mixture_of_unitaries(dim, n_unitaries, rng) for _ in range(n_outcomes))
    else:
        feedback = tuple(cptp_stinespring(dim, dim, env, rng) for _ in range(n_outcomes))
    observables = tuple(random_hermitian(dim, rng) for _ in range(n_outcomes))
    observable_in = random_hermitian(dim, rng)
    param = float(rng.uniform(*param_range))
    error_model = random_error_model(n_outcomes, rng) if with_errors else None
    return FeedbackProtocol(
        first_channel=first,
        measurement=measurement,
        feedback_channels=feedback,
        observables_out=observables,
        observable_in=observable_in,
        param=param,
        error_model=error_model,
    )
