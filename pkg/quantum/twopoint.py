#!/usr/bin/env python3
"""
Two-point measurement statistics.

Project onto an input eigenbasis, evolve through a channel, project onto an
output eigenbasis. The joint distribution over eigen-labels (i, j) is

    p(a_i, b_j) = p(a_i) p(b_j | a_i),   p(b_j | a_i) = <b_j|Phi(|a_i><a_i|)|b_j>

and every average in the fluctuation relations is an exact double sum over
it. Input states must be diagonal in the input eigenbasis.

Joint tables are indexed [i, j] (input label first). Conditional matrices
are indexed [j, i] (output label first), so columns are conditioned on the
input label.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp, softmax

from contracts import ContractError, DomainError, NumericRangeError, ShapeError

from .channels import DEFAULT_VALIDATION_TOL, KrausChannel, require_tp
from .linalg_core import (
    DensityMatrix,
    HermitianOperator,
    Spectrum,
    completely_mixed,
    spectral_decompose,
    tensor_product,
)
from utils.seeding import SeedLike, as_generator

logger = logging.getLogger(__name__)

DEFAULT_CLUSTER_TOL = 1e-8
COMMUTATION_TOL = 1e-10

PairFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


# =========================
# Gibbs states
# =========================

@dataclass(frozen=True, eq=False)
class GibbsState:
    """
    e^{-param * A} / Z together with the decomposition it was built on.

    Probabilities are per eigen-label of `spectrum`; log_probabilities are
    kept exactly so that averages stay finite when the weights underflow.
    """

    generator: HermitianOperator
    param: float
    spectrum: Spectrum
    probabilities: np.ndarray
    log_probabilities: np.ndarray
    log_partition: float
    density: DensityMatrix

    @property
    def dim(self) -> int:
        return self.generator.dim

    @property
    def partition_function(self) -> float:
        return float(np.exp(self.log_partition))

    @property
    def free_energy(self) -> Optional[float]:
        """-ln(Z)/param; None at param = 0."""
        if self.param == 0:
            return None
        return -self.log_partition / self.param


def gibbs(generator: HermitianOperator, param: float, spectrum: Optional[Spectrum] = None) -> GibbsState:
    """
    Exponential-family state of a generator.

    The partition function is accumulated in log form after shifting by the
    largest exponent, so only non-finite exponents are a range error.

    Args:
        generator: Hermitian A (or Hamiltonian H)
        param: alpha (or inverse temperature beta); 0 gives I/d
        spectrum: precomputed decomposition of the generator

    Raises:
        DomainError: param is not finite
        NumericRangeError: param * eigenvalue overflows
    """
    param = float(param)
    if not np.isfinite(param):
        raise DomainError(f"Gibbs parameter must be finite, got {param!r}", error_code="PARAMETER_NOT_FINITE")

    spectrum = spectrum if spectrum is not None else spectral_decompose(generator)
    with np.errstate(over="ignore", invalid="ignore"):
        exponents = -param * spectrum.eigenvalues
    if not np.all(np.isfinite(exponents)):
        worst = float(spectrum.eigenvalues[np.argmax(~np.isfinite(exponents))])
        raise NumericRangeError(
            f"exp(-{param!r} * {worst!r}) overflows; shift the generator by its minimum eigenvalue "
            f"or reduce the parameter",
            error_code="GIBBS_OVERFLOW",
            context={"param": param, "eigenvalue": worst},
        )

    log_partition = float(logsumexp(exponents))
    log_probabilities = exponents - log_partition
    probabilities = softmax(exponents)
    if param == 0:
        density = completely_mixed(spectrum.dim)
    else:
        density = DensityMatrix.from_probabilities(probabilities, spectrum)

    for array in (probabilities, log_probabilities):
        array.setflags(write=False)
    logger.debug(f"gibbs d={spectrum.dim} param={param}: lnZ={log_partition:.6g}")
    return GibbsState(
        generator=generator,
        param=param,
        spectrum=spectrum,
        probabilities=probabilities,
        log_probabilities=log_probabilities,
        log_partition=log_partition,
        density=density,
    )


# =========================
# Conditional and joint distributions
# =========================

@dataclass(frozen=True, eq=False)
class ConditionalMatrix:
    """p(b_j | a_i), indexed [j, i]."""

    probabilities: np.ndarray
    input_spectrum: Spectrum
    output_spectrum: Spectrum

    @property
    def shape(self) -> Tuple[int, int]:
        return self.probabilities.shape

    def column_sums(self) -> np.ndarray:
        return self.probabilities.sum(axis=0)

    def row_sums(self) -> np.ndarray:
        return self.probabilities.sum(axis=1)

    def column_defect(self) -> float:
        """max |sum_j p(b_j|a_i) - 1|."""
        return float(np.max(np.abs(self.column_sums() - 1.0)))


def conditional_probs(
    channel: KrausChannel,
    in_spec: Spectrum,
    out_spec: Spectrum,
    tol: float = DEFAULT_VALIDATION_TOL
) -> ConditionalMatrix:
    """
    Transition probabilities between eigen-labels.

    p(b_j|a_i) = sum_mu |<b_j|K_mu|a_i>|^2, which equals
    <b_j|Phi(|a_i><a_i|)|b_j> and is non-negative by construction.

    Raises:
        ContractError: channel is not trace-preserving
        ShapeError: spectra do not match the channel dimensions
    """
    require_tp(channel, tol)
    if in_spec.dim != channel.dim_in or out_spec.dim != channel.dim_out:
        raise ShapeError(
            f"spectra dims ({in_spec.dim}, {out_spec.dim}) do not match channel "
            f"({channel.dim_in} -> {channel.dim_out})",
            error_code="SHAPE_MISMATCH",
        )
    amplitudes = np.einsum(
        "bj,kbc,ci->kji",
        out_spec.eigenvectors.conj(),
        np.stack(channel.kraus_ops),
        in_spec.eigenvectors,
    )
    probabilities = np.sum(np.abs(amplitudes) ** 2, axis=0)
    probabilities.setflags(write=False)
    return ConditionalMatrix(probabilities=probabilities, input_spectrum=in_spec, output_spectrum=out_spec)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """
    p(a_i, b_j) indexed [i, j].

    `conditional` is None for empirical (sampled) distributions.
    """

    input_probs: np.ndarray
    input_log_probs: np.ndarray
    conditional: Optional[ConditionalMatrix]
    joint: np.ndarray
    input_eigenvalues: np.ndarray
    output_eigenvalues: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.joint.shape

    @property
    def total_mass(self) -> float:
        return float(self.joint.sum())

    def pair_values(self, f: PairFunction) -> np.ndarray:
        """f evaluated on every (a_i, b_j), broadcast to the table shape."""
        values = f(self.input_eigenvalues[:, None], self.output_eigenvalues[None, :])
        return np.broadcast_to(np.asarray(values, dtype=float), self.joint.shape)

    def average(self, f: PairFunction) -> float:
        """sum_ij p(a_i, b_j) f(a_i, b_j)."""
        return float(np.sum(self.joint * self.pair_values(f)))

    def output_marginal(self) -> np.ndarray:
        return self.joint.sum(axis=0)


def input_probabilities(
    state: Union[GibbsState, DensityMatrix],
    in_spec: Spectrum
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Label probabilities of an input state diagonal in in_spec.

    Returns:
        (probabilities, log probabilities)

    Raises:
        ContractError: the state does not commute with the input eigenprojectors
    """
    if isinstance(state, GibbsState) and state.spectrum is in_spec:
        return state.probabilities, state.log_probabilities

    rho = state.density if isinstance(state, GibbsState) else state
    if rho.dim != in_spec.dim:
        raise ShapeError(
            f"state dim {rho.dim} != input spectrum dim {in_spec.dim}",
            error_code="SHAPE_MISMATCH",
        )
    v = in_spec.eigenvectors
    rotated = v.conj().T @ rho.matrix @ v
    off_diagonal = float(np.max(np.abs(rotated - np.diag(np.diag(rotated))))) if rho.dim > 1 else 0.0
    if off_diagonal > COMMUTATION_TOL:
        raise ContractError(
            f"input state is not diagonal in the input eigenbasis (off-diagonal {off_diagonal:.3e}); "
            f"the two-point joint distribution needs rho = sum_i p(a_i)|a_i><a_i|",
            error_code="INPUT_NOT_DIAGONAL",
            context={"off_diagonal": off_diagonal},
        )
    probabilities = np.clip(np.real(np.diag(rotated)), 0.0, None)
    with np.errstate(divide="ignore"):
        log_probabilities = np.log(probabilities)
    return probabilities, log_probabilities


def joint_from_probabilities(
    probabilities: np.ndarray,
    conditional: ConditionalMatrix,
    log_probabilities: Optional[np.ndarray] = None
) -> JointDistribution:
    """Bayes rule p(a_i, b_j) = p(a_i) p(b_j|a_i)."""
    probabilities = np.asarray(probabilities, dtype=float)
    if probabilities.shape != (conditional.shape[1],):
        raise ShapeError(
            f"{probabilities.size} input probabilities for {conditional.shape[1]} input labels",
            error_code="SHAPE_MISMATCH",
        )
    if log_probabilities is None:
        with np.errstate(divide="ignore"):
            log_probabilities = np.log(probabilities)
    joint = probabilities[:, None] * conditional.probabilities.T
    return JointDistribution(
        input_probs=probabilities,
        input_log_probs=np.asarray(log_probabilities, dtype=float),
        conditional=conditional,
        joint=joint,
        input_eigenvalues=conditional.input_spectrum.eigenvalues,
        output_eigenvalues=conditional.output_spectrum.eigenvalues,
    )


def build_joint(state: Union[GibbsState, DensityMatrix], conditional: ConditionalMatrix) -> JointDistribution:
    probabilities, log_probabilities = input_probabilities(state, conditional.input_spectrum)
    return joint_from_probabilities(probabilities, conditional, log_probabilities)


def joint_average(
    state: Union[GibbsState, DensityMatrix],
    conditional: ConditionalMatrix,
    f: PairFunction
) -> Tuple[float, JointDistribution]:
    """
    Average of f(a, b) over the two-point joint distribution.

    f receives numpy arrays (a as a column, b as a row) and must broadcast.

    Returns:
        (sum_ij p(a_i, b_j) f(a_i, b_j), the joint distribution)
    """
    joint = build_joint(state, conditional)
    return joint.average(f), joint


def joint_log_average(joint: JointDistribution, exponent: PairFunction) -> float:
    """
    ln sum_ij p(a_i, b_j) exp(exponent(a_i, b_j)), evaluated with log-sum-exp.

    Uses the exact input log-probabilities when the conditional matrix is
    available, so huge exponents paired with underflowing weights cancel.
    """
    values = joint.pair_values(exponent)
    with np.errstate(divide="ignore"):
        if joint.conditional is not None:
            weights = np.clip(joint.conditional.probabilities.T, 0.0, None)
            log_terms = joint.input_log_probs[:, None] + values
        else:
            weights = np.clip(joint.joint, 0.0, None)
            log_terms = values
        log_terms = np.where(weights > 0, log_terms, 0.0)
        result = logsumexp(log_terms, b=weights)
    return float(result)


# =========================
# Difference histograms
# =========================

class DeltaSign(str, Enum):
    """Which difference a histogram bins, in joint-label terms"""
    OUTPUT_MINUS_INPUT = "b_minus_a"
    INPUT_MINUS_OUTPUT = "a_minus_b"


@dataclass(frozen=True, eq=False)
class DeltaHistogram:
    """Clustered distribution of eigenvalue differences; centers ascend."""

    centers: np.ndarray
    probabilities: np.ndarray
    cluster_tolerance: float

    @property
    def bins(self) -> List[Tuple[float, float]]:
        return [(float(c), float(p)) for c, p in zip(self.centers, self.probabilities)]

    @property
    def total_mass(self) -> float:
        return float(self.probabilities.sum())

    def __len__(self) -> int:
        return self.centers.size

    def find(self, delta: float, tol: Optional[float] = None) -> Optional[int]:
        """Index of the bin whose center is within tol of delta."""
        tol = self.cluster_tolerance if tol is None else tol
        if self.centers.size == 0:
            return None
        index = int(np.argmin(np.abs(self.centers - delta)))
        return index if abs(self.centers[index] - delta) <= tol else None

    def probability_at(self, delta: float, tol: Optional[float] = None) -> float:
        index = self.find(delta, tol)
        return 0.0 if index is None else float(self.probabilities[index])


def cluster_values(
    values: np.ndarray,
    masses: np.ndarray,
    cluster_tolerance: float = DEFAULT_CLUSTER_TOL
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Single-linkage clustering of sorted values.

    A new cluster starts whenever the next value exceeds the previous one by
    more than cluster_tolerance. Centers are mass-weighted (plain means for
    zero-mass clusters); zero-mass clusters are kept.
    """
    values = np.asarray(values, dtype=float).ravel()
    masses = np.asarray(masses, dtype=float).ravel()
    if values.size == 0:
        return np.empty(0), np.empty(0)

    order = np.argsort(values, kind="stable")
    values, masses = values[order], masses[order]
    breaks = np.flatnonzero(np.diff(values) > cluster_tolerance) + 1
    centers, totals = [], []
    for group_values, group_masses in zip(np.split(values, breaks), np.split(masses, breaks)):
        total = float(group_masses.sum())
        if total > 0:
            centers.append(float(np.dot(group_values, group_masses) / total))
        else:
            centers.append(float(group_values.mean()))
        totals.append(total)
    return np.array(centers), np.array(totals)


def delta_histogram(
    joint: JointDistribution,
    sign: DeltaSign = DeltaSign.OUTPUT_MINUS_INPUT,
    cluster_tolerance: float = DEFAULT_CLUSTER_TOL
) -> DeltaHistogram:
    """
    Histogram of all d_in * d_out eigenvalue differences weighted by joint mass.

    Args:
        joint: two-point joint distribution
        sign: b_minus_a (output - input) or a_minus_b
        cluster_tolerance: absolute clustering width
    """
    sign = DeltaSign(sign)
    a = joint.input_eigenvalues[:, None]
    b = joint.output_eigenvalues[None, :]
    deltas = (b - a) if sign == DeltaSign.OUTPUT_MINUS_INPUT else (a - b)
    centers, probabilities = cluster_values(deltas, joint.joint, cluster_tolerance)
    for array in (centers, probabilities):
        array.setflags(write=False)
    return DeltaHistogram(centers=centers, probabilities=probabilities, cluster_tolerance=cluster_tolerance)


# =========================
# Monte-Carlo trajectories
# =========================

def sample_trajectories(
    state: Union[GibbsState, DensityMatrix],
    channel: KrausChannel,
    in_spec: Spectrum,
    out_spec: Spectrum,
    n: int,
    rng: SeedLike = None
) -> JointDistribution:
    """
    Empirical joint distribution of n two-point trajectories.

    Input labels are drawn from the input probabilities, then output labels
    from p(.|a_i). Deterministic per seed.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"sample count must be a positive integer, got {n!r}", error_code="BAD_SAMPLE_COUNT")
    n = int(n)
    rng = as_generator(rng)
    conditional = conditional_probs(channel, in_spec, out_spec)
    probabilities, _ = input_probabilities(state, in_spec)

    input_counts = rng.multinomial(n, probabilities / probabilities.sum())
    counts = np.zeros((in_spec.dim, out_spec.dim), dtype=np.int64)
    for i in np.flatnonzero(input_counts):
        column = np.clip(conditional.probabilities[:, i], 0.0, None)
        counts[i] = rng.multinomial(input_counts[i], column / column.sum())

    empirical_inputs = input_counts / n
    with np.errstate(divide="ignore"):
        log_inputs = np.log(empirical_inputs)
    logger.debug(f"sampled {n} trajectories over {counts.shape} labels")
    return JointDistribution(
        input_probs=empirical_inputs,
        input_log_probs=log_inputs,
        conditional=None,
        joint=counts / n,
        input_eigenvalues=in_spec.eigenvalues,
        output_eigenvalues=out_spec.eigenvalues,
    )


# =========================
# Product spectra
# =========================

@dataclass(frozen=True, eq=False)
class ProductSpectrum:
    """
    Eigenbasis |a_i> (x) |b_j> of weight_a*A (x) I + I (x) weight_b*B, sorted.

    labels[k] = (i, j) of composite index k; values_a / values_b carry the
    per-system eigenvalues so energy changes stay defined under degeneracy.
    """

    spectrum: Spectrum
    labels: np.ndarray
    values_a: np.ndarray
    values_b: np.ndarray


def product_spectrum(
    spec_a: Spectrum,
    spec_b: Spectrum,
    weight_a: float = 1.0,
    weight_b: float = 1.0
) -> ProductSpectrum:
    vectors = tensor_product(spec_a.eigenvectors, spec_b.eigenvectors)
    ii, jj = np.meshgrid(np.arange(spec_a.dim), np.arange(spec_b.dim), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    values_a = spec_a.eigenvalues[ii]
    values_b = spec_b.eigenvalues[jj]
    composite = weight_a * values_a + weight_b * values_b

    order = np.argsort(composite, kind="stable")
    return ProductSpectrum(
        spectrum=Spectrum(eigenvalues=composite[order], eigenvectors=vectors[:, order]),
        labels=np.stack([ii[order], jj[order]], axis=1),
        values_a=values_a[order],
        values_b=values_b[order],
    )
