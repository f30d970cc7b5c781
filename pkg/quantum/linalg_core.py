#!/usr/bin/env python3
"""
Dense complex-matrix foundation.

Hermitian operators, spectra, density matrices and the handful of matrix
operations every other module is built on: spectral decomposition, operator
functions, Kronecker products and the Hilbert-Schmidt inner product.

All values are immutable: arrays held by the dataclasses below are private
copies with the write flag cleared.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import numpy.typing as npt
import scipy.linalg

from contracts import ConvergenceError, DomainError, NumericRangeError, ShapeError, SizeError
from utils.environment_config import get_or_create_env_config
from utils.seeding import SeedLike, as_generator

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]

# =========================
# Tolerances
# =========================
HERMITIAN_TOL = 1e-12
EIGEN_RESIDUAL_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def as_complex_matrix(data, name: str = "matrix") -> ComplexMatrix:
    """
    Validate and freeze a 2-D complex matrix.

    Raises:
        ShapeError: not two-dimensional or empty
        DomainError: NaN or infinite entries
    """
    array = np.array(data, dtype=np.complex128)
    if array.ndim != 2 or array.shape[0] < 1 or array.shape[1] < 1:
        raise ShapeError(
            f"{name} must be a non-empty 2-D matrix, got shape {array.shape}",
            error_code="SHAPE_NOT_MATRIX",
            context={"shape": list(array.shape)},
        )
    if not np.all(np.isfinite(array)):
        raise DomainError(
            f"{name} has non-finite entries",
            error_code="NON_FINITE_ENTRIES",
        )
    array.setflags(write=False)
    return array


def hermitian_defect(matrix: np.ndarray) -> float:
    """Largest entrywise modulus of M - M^dagger."""
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def unitarity_defect(matrix: np.ndarray) -> float:
    """Largest entrywise modulus of U^dagger U - I."""
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[1]))))


def _hermitize(matrix: np.ndarray, name: str) -> np.ndarray:
    # tolerance scales with the entry magnitude for large generators
    defect = hermitian_defect(matrix)
    scale = max(1.0, float(np.max(np.abs(matrix))))
    if defect > HERMITIAN_TOL * scale:
        raise DomainError(
            f"{name} is not Hermitian (defect {defect:.3e})",
            error_code="NOT_HERMITIAN",
            context={"defect": defect},
        )
    return (matrix + matrix.conj().T) / 2


# =========================
# Value types
# =========================

@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Self-adjoint operator; symmetrized at construction."""

    matrix: ComplexMatrix

    def __post_init__(self):
        matrix = as_complex_matrix(self.matrix, "Hermitian operator")
        if matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(
                f"Hermitian operator must be square, got {matrix.shape}",
                error_code="SHAPE_NOT_SQUARE",
            )
        object.__setattr__(self, "matrix", _frozen(_hermitize(matrix, "operator")))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_diagonal(cls, values) -> "HermitianOperator":
        return cls(np.diag(np.asarray(values, dtype=float)))

    def shifted(self, c: float) -> "HermitianOperator":
        """A - c*I."""
        return HermitianOperator(self.matrix - c * np.eye(self.dim))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Eigen-decomposition of a Hermitian operator.

    Eigenvalues ascend and repeat per multiplicity; eigenvectors are the
    columns of `eigenvectors`. Inside a degenerate block the basis is an
    arbitrary orthonormal choice.
    """

    eigenvalues: np.ndarray
    eigenvectors: ComplexMatrix

    def __post_init__(self):
        values = np.asarray(self.eigenvalues, dtype=float)
        vectors = as_complex_matrix(self.eigenvectors, "eigenvectors")
        if values.ndim != 1 or vectors.shape != (values.size, values.size):
            raise ShapeError(
                f"spectrum shapes disagree: {values.shape} eigenvalues, {vectors.shape} vectors",
                error_code="SPECTRUM_SHAPE",
            )
        if values.size > 1 and np.any(np.diff(values) < 0):
            raise DomainError("eigenvalues must be ascending", error_code="SPECTRUM_ORDER")
        object.__setattr__(self, "eigenvalues", _frozen(values))
        object.__setattr__(self, "eigenvectors", vectors)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def vector(self, index: int) -> np.ndarray:
        return self.eigenvectors[:, index]

    def projector(self, index: int) -> ComplexMatrix:
        v = self.eigenvectors[:, index]
        return np.outer(v, v.conj())

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def orthonormality_defect(self) -> float:
        return unitarity_defect(self.eigenvectors)

    def diagonal_of(self, operator: np.ndarray) -> np.ndarray:
        """<v_i|X|v_i> for every eigenvector."""
        v = self.eigenvectors
        return np.einsum("ki,kl,li->i", v.conj(), operator, v)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator."""

    matrix: ComplexMatrix

    def __post_init__(self):
        matrix = as_complex_matrix(self.matrix, "density matrix")
        if matrix.shape[0] != matrix.shape[1]:
            raise ShapeError(
                f"density matrix must be square, got {matrix.shape}",
                error_code="SHAPE_NOT_SQUARE",
            )
        matrix = _hermitize(matrix, "density matrix")
        trace = float(np.real(np.trace(matrix)))
        if abs(trace - 1.0) > TRACE_TOL:
            raise DomainError(
                f"density matrix trace is {trace!r}, expected 1",
                error_code="DENSITY_TRACE",
                context={"trace": trace},
            )
        smallest = float(scipy.linalg.eigvalsh(matrix)[0])
        if smallest < -POSITIVITY_TOL:
            raise DomainError(
                f"density matrix has negative eigenvalue {smallest:.3e}",
                error_code="DENSITY_NOT_POSITIVE",
                context={"min_eigenvalue": smallest},
            )
        object.__setattr__(self, "matrix", _frozen(matrix))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_probabilities(cls, probabilities, spectrum: Spectrum) -> "DensityMatrix":
        """sum_i p_i |v_i><v_i| over the spectrum's eigenbasis."""
        v = spectrum.eigenvectors
        return cls((v * np.asarray(probabilities, dtype=float)) @ v.conj().T)


# =========================
# Operations
# =========================

def spectral_decompose(
    operator: HermitianOperator,
    residual_tol: float = EIGEN_RESIDUAL_TOL
) -> Spectrum:
    """
    Hermitian eigen-decomposition with ascending eigenvalues.

    Args:
        operator: Hermitian operator to decompose
        residual_tol: bound on reconstruction and orthonormality residuals,
            relative to max(1, largest entry)

    Returns:
        Spectrum of the operator

    Raises:
        ConvergenceError: LAPACK failure or residual above tolerance
    """
    matrix = operator.matrix
    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(
            f"eigen-solver did not converge: {exc}",
            error_code="EIGH_FAILED",
            context={"dim": operator.dim},
        ) from exc

    scale = max(1.0, float(np.max(np.abs(matrix))))
    residual = float(np.max(np.abs((eigenvectors * eigenvalues) @ eigenvectors.conj().T - matrix))) / scale
    ortho = unitarity_defect(eigenvectors)
    logger.debug(f"eigh d={operator.dim}: residual {residual:.2e}, orthonormality {ortho:.2e}")
    if residual > residual_tol or ortho > residual_tol:
        raise ConvergenceError(
            f"eigen-decomposition residual {residual:.3e} (orthonormality {ortho:.3e}) "
            f"exceeds {residual_tol:.1e}",
            error_code="EIGH_RESIDUAL",
            context={"residual": residual, "orthonormality_defect": ortho},
        )
    return Spectrum(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def operator_function(
    operator: HermitianOperator,
    f: Callable[[float], float],
    spectrum: Optional[Spectrum] = None
) -> HermitianOperator:
    """
    Apply a real function through the spectral decomposition: sum_i f(a_i)|a_i><a_i|.

    Args:
        operator: Hermitian operator A
        f: real function, evaluated once per eigenvalue
        spectrum: precomputed decomposition of A (decomposed here if omitted)

    Raises:
        NumericRangeError: f overflows or is not finite at some eigenvalue
    """
    spectrum = spectrum if spectrum is not None else spectral_decompose(operator)
    values = np.empty(spectrum.dim)
    with np.errstate(over="raise", invalid="raise"):
        for index, eigenvalue in enumerate(spectrum.eigenvalues):
            try:
                values[index] = float(f(float(eigenvalue)))
            except (OverflowError, FloatingPointError) as exc:
                raise NumericRangeError(
                    f"operator function overflows at eigenvalue {eigenvalue!r}",
                    error_code="OPERATOR_FUNCTION_OVERFLOW",
                    context={"eigenvalue": float(eigenvalue)},
                ) from exc
            if not np.isfinite(values[index]):
                raise NumericRangeError(
                    f"operator function is not finite at eigenvalue {eigenvalue!r}",
                    error_code="OPERATOR_FUNCTION_OVERFLOW",
                    context={"eigenvalue": float(eigenvalue)},
                )
    v = spectrum.eigenvectors
    return HermitianOperator((v * values) @ v.conj().T)


def tensor_product(x, y, max_dim: Optional[int] = None) -> ComplexMatrix:
    """
    Kronecker product, composite index = i_A * d_B + i_B.

    Raises:
        SizeError: composite dimension above max_dim (default from FLUCTLAB_MAX_DIM)
    """
    x = as_complex_matrix(x, "left factor")
    y = as_complex_matrix(y, "right factor")
    limit = max_dim if max_dim is not None else get_or_create_env_config().max_composite_dim
    rows, cols = x.shape[0] * y.shape[0], x.shape[1] * y.shape[1]
    if max(rows, cols) > limit:
        raise SizeError(
            f"composite dimension {rows}x{cols} exceeds configured maximum {limit}",
            error_code="COMPOSITE_TOO_LARGE",
            context={"rows": rows, "cols": cols, "max_dim": limit},
        )
    return _frozen(np.kron(x, y))


def hs_inner(x, y) -> complex:
    """Hilbert-Schmidt inner product Tr(X^dagger Y)."""
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if x.shape != y.shape:
        raise ShapeError(
            f"Hilbert-Schmidt operands differ in shape: {x.shape} vs {y.shape}",
            error_code="SHAPE_MISMATCH",
            context={"left": list(x.shape), "right": list(y.shape)},
        )
    return complex(np.vdot(x, y))


def expectation_value(observable: HermitianOperator, rho: DensityMatrix) -> float:
    """Tr(X rho), real for Hermitian X."""
    if observable.dim != rho.dim:
        raise ShapeError(
            f"observable dim {observable.dim} != state dim {rho.dim}",
            error_code="SHAPE_MISMATCH",
        )
    return float(np.real(np.trace(observable.matrix @ rho.matrix)))


def completely_mixed(dim: int) -> DensityMatrix:
    """I/d."""
    return DensityMatrix(np.eye(dim) / dim)


def random_hermitian(dim: int, rng: SeedLike = None, scale: float = 1.0) -> HermitianOperator:
    """(G + G^dagger)/2 for a complex Gaussian G, times scale."""
    rng = as_generator(rng)
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    return HermitianOperator(scale * (g + g.conj().T) / 2)


def random_density_matrix(dim: int, rng: SeedLike = None, rank: Optional[int] = None) -> DensityMatrix:
    """Ginibre-random state G G^dagger / Tr(G G^dagger)."""
    rng = as_generator(rng)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.real(np.trace(rho)))
