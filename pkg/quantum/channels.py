#!/usr/bin/env python3
"""
Kraus-operator channel algebra.

A channel is stored in operator-sum form Phi(X) = sum_mu K_mu X K_mu^dagger,
so complete positivity holds by construction. Trace preservation and
(generalized) unitality are checked, never assumed:

    TP:      sum K^dagger K = I_in
    unital:  sum K K^dagger = (d_in / d_out) I_out

Rectangular channels (d_in != d_out) are supported throughout.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from contracts import ContractError, DomainError, ShapeError, SizeError, StructuralError
from utils.environment_config import get_or_create_env_config
from utils.seeding import SeedLike, as_generator

from .linalg_core import (
    ComplexMatrix,
    DensityMatrix,
    as_complex_matrix,
    tensor_product,
    unitarity_defect,
)

logger = logging.getLogger(__name__)

DEFAULT_VALIDATION_TOL = 1e-9
UNITARY_INPUT_TOL = 1e-10


# =========================
# Types
# =========================

@dataclass(frozen=True, eq=False)
class KrausChannel:
    """
    Completely positive map in operator-sum form.

    Every Kraus operator is dim_out x dim_in. Dimensions are inferred from
    the first operator when not given.
    """

    kraus_ops: Tuple[ComplexMatrix, ...]
    dim_in: Optional[int] = None
    dim_out: Optional[int] = None
    _stack: Optional[np.ndarray] = field(init=False, repr=False, default=None)

    def __post_init__(self):
        ops = tuple(as_complex_matrix(op, f"Kraus operator {index}") for index, op in enumerate(self.kraus_ops))
        if not ops:
            raise StructuralError("Kraus list must be non-empty", error_code="EMPTY_KRAUS_LIST")

        dim_out = ops[0].shape[0] if self.dim_out is None else int(self.dim_out)
        dim_in = ops[0].shape[1] if self.dim_in is None else int(self.dim_in)
        for index, op in enumerate(ops):
            if op.shape != (dim_out, dim_in):
                raise StructuralError(
                    f"Kraus operator {index} has shape {op.shape}, expected {(dim_out, dim_in)}",
                    error_code="KRAUS_SHAPE",
                    context={"index": index, "shape": list(op.shape), "expected": [dim_out, dim_in]},
                )

        stack = np.stack(ops)
        stack.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "dim_in", dim_in)
        object.__setattr__(self, "dim_out", dim_out)
        object.__setattr__(self, "_stack", stack)

    @property
    def n_ops(self) -> int:
        return len(self.kraus_ops)

    @property
    def is_square(self) -> bool:
        return self.dim_in == self.dim_out

    def __repr__(self) -> str:
        return f"KrausChannel(dim_in={self.dim_in}, dim_out={self.dim_out}, n_ops={self.n_ops})"


@dataclass(frozen=True)
class ChannelReport:
    """Trace-preservation and unitality defects of a channel."""

    tp_defect: float
    unital_defect: float
    is_tp: bool
    is_unital: bool
    tolerance: float

    @property
    def is_bistochastic(self) -> bool:
        return self.is_tp and self.is_unital

    def defects(self) -> Dict[str, float]:
        return {"tp_defect": self.tp_defect, "unital_defect": self.unital_defect}


# =========================
# Algebra
# =========================

def validate(channel: KrausChannel, tol: float = DEFAULT_VALIDATION_TOL) -> ChannelReport:
    """
    Measure how far a channel is from trace-preserving and unital.

    Defects are the largest entrywise modulus of sum K^dagger K - I_in and
    sum K K^dagger - (d_in/d_out) I_out.
    """
    if not tol > 0:
        raise DomainError(f"validation tolerance must be positive, got {tol!r}", error_code="BAD_TOLERANCE")

    ops = channel._stack
    tp_sum = np.einsum("kji,kjl->il", ops.conj(), ops)
    unital_sum = np.einsum("kij,klj->il", ops, ops.conj())

    tp_defect = float(np.max(np.abs(tp_sum - np.eye(channel.dim_in))))
    ratio = channel.dim_in / channel.dim_out
    unital_defect = float(np.max(np.abs(unital_sum - ratio * np.eye(channel.dim_out))))

    return ChannelReport(
        tp_defect=tp_defect,
        unital_defect=unital_defect,
        is_tp=tp_defect <= tol,
        is_unital=unital_defect <= tol,
        tolerance=tol,
    )


def require_tp(channel: KrausChannel, tol: float = DEFAULT_VALIDATION_TOL, role: str = "channel") -> ChannelReport:
    """Validate and raise ContractError unless trace-preserving."""
    report = validate(channel, tol)
    if not report.is_tp:
        raise ContractError(
            f"{role} is not trace-preserving (tp_defect {report.tp_defect:.3e} > {tol:.1e})",
            error_code="CHANNEL_NOT_TP",
            context=report.defects(),
        )
    return report


def require_bistochastic(channel: KrausChannel, tol: float = DEFAULT_VALIDATION_TOL, role: str = "channel") -> ChannelReport:
    """Validate and raise ContractError unless trace-preserving and unital."""
    report = require_tp(channel, tol, role)
    if not report.is_unital:
        raise ContractError(
            f"{role} is not unital (unital_defect {report.unital_defect:.3e} > {tol:.1e})",
            error_code="CHANNEL_NOT_UNITAL",
            context=report.defects(),
        )
    return report


def adjoint(channel: KrausChannel) -> KrausChannel:
    """Hilbert-Schmidt dual: Kraus list {K^dagger}, dimensions swapped."""
    return KrausChannel(
        tuple(op.conj().T for op in channel.kraus_ops),
        dim_in=channel.dim_out,
        dim_out=channel.dim_in,
    )


def apply_operator(channel: KrausChannel, x) -> ComplexMatrix:
    """sum K X K^dagger for any dim_in x dim_in operator X."""
    x = as_complex_matrix(x, "channel input")
    if x.shape != (channel.dim_in, channel.dim_in):
        raise ShapeError(
            f"channel expects {channel.dim_in}x{channel.dim_in} input, got {x.shape}",
            error_code="SHAPE_MISMATCH",
            context={"expected": channel.dim_in, "shape": list(x.shape)},
        )
    ops = channel._stack
    out = np.einsum("kij,jl,kml->im", ops, x, ops.conj())
    out.setflags(write=False)
    return out


def apply(channel: KrausChannel, rho: DensityMatrix, tol: float = DEFAULT_VALIDATION_TOL) -> DensityMatrix:
    """
    Evolve a density matrix.

    Raises:
        ShapeError: rho.dim != dim_in
        ContractError: channel is not trace-preserving
    """
    if rho.dim != channel.dim_in:
        raise ShapeError(
            f"state dim {rho.dim} != channel dim_in {channel.dim_in}",
            error_code="SHAPE_MISMATCH",
        )
    require_tp(channel, tol)
    return DensityMatrix(apply_operator(channel, rho.matrix))


def compose(outer: KrausChannel, inner: KrausChannel) -> KrausChannel:
    """outer after inner; Kraus list of all pairwise products L K."""
    if inner.dim_out != outer.dim_in:
        raise ShapeError(
            f"cannot compose: inner dim_out {inner.dim_out} != outer dim_in {outer.dim_in}",
            error_code="SHAPE_MISMATCH",
        )
    products = tuple(l_op @ k_op for l_op in outer.kraus_ops for k_op in inner.kraus_ops)
    return KrausChannel(products, dim_in=inner.dim_in, dim_out=outer.dim_out)


def tensor(first: KrausChannel, second: KrausChannel, max_dim: Optional[int] = None) -> KrausChannel:
    """Channel on the composite space with Kraus list {K (x) L}."""
    ops = tuple(
        tensor_product(k_op, l_op, max_dim=max_dim)
        for k_op in first.kraus_ops
        for l_op in second.kraus_ops
    )
    return KrausChannel(
        ops,
        dim_in=first.dim_in * second.dim_in,
        dim_out=first.dim_out * second.dim_out,
    )


# =========================
# Standard channels
# =========================

def _check_probability(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise DomainError(
            f"{name} must lie in [0, 1], got {value!r}",
            error_code="PARAMETER_OUT_OF_RANGE",
            context={"parameter": name, "value": value},
        )
    return value


def _check_dimension(value: int, name: str) -> int:
    if int(value) != value or value < 1:
        raise DomainError(
            f"{name} must be a positive integer, got {value!r}",
            error_code="PARAMETER_OUT_OF_RANGE",
            context={"parameter": name, "value": value},
        )
    return int(value)


def identity_channel(d: int) -> KrausChannel:
    d = _check_dimension(d, "d")
    return KrausChannel((np.eye(d, dtype=np.complex128),))


def unitary_channel(unitary) -> KrausChannel:
    """Single-Kraus channel X -> U X U^dagger."""
    u = as_complex_matrix(unitary, "unitary")
    if u.shape[0] != u.shape[1]:
        raise ShapeError(f"unitary must be square, got {u.shape}", error_code="SHAPE_NOT_SQUARE")
    defect = unitarity_defect(u)
    if defect > UNITARY_INPUT_TOL:
        raise DomainError(
            f"matrix is not unitary (defect {defect:.3e})",
            error_code="NOT_UNITARY",
            context={"defect": defect},
        )
    return KrausChannel((u,))


def weyl_operators(d: int) -> List[ComplexMatrix]:
    """Generalized Paulis X^a Z^b, a-major, starting from the identity."""
    shift = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return [
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
        for a in range(d)
        for b in range(d)
    ]


def depolarizing(p: float, d: int = 2) -> KrausChannel:
    """
    (1 - p) rho + p I/d, through the Weyl twirl.

    For d = 2 this is the usual I, X, Z, XZ Kraus set with weights
    sqrt(1 - 3p/4) and sqrt(p)/2.
    """
    p = _check_probability(p, "p")
    d = _check_dimension(d, "d")
    weyl = weyl_operators(d)
    ops = [np.sqrt(1.0 - p + p / d**2) * weyl[0]]
    ops.extend(np.sqrt(p) / d * w for w in weyl[1:])
    return KrausChannel(tuple(ops))


def phase_damping(lam: float) -> KrausChannel:
    """Qubit dephasing; coherences shrink by sqrt(1 - lam)."""
    lam = _check_probability(lam, "lambda")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - lam)]], dtype=np.complex128)
    k1 = np.array([[0.0, 0.0], [0.0, np.sqrt(lam)]], dtype=np.complex128)
    return KrausChannel((k0, k1))


def amplitude_damping(gamma: float) -> KrausChannel:
    """Qubit decay |1> -> |0> with probability gamma. Not unital for gamma > 0."""
    gamma = _check_probability(gamma, "gamma")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=np.complex128)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=np.complex128)
    return KrausChannel((k0, k1))


def swap_unitary(d: int) -> ComplexMatrix:
    """Permutation |i j> -> |j i> on C^d (x) C^d."""
    d = _check_dimension(d, "d")
    limit = get_or_create_env_config().max_composite_dim
    if d * d > limit:
        raise SizeError(
            f"swap on {d}x{d} exceeds configured maximum {limit}",
            error_code="COMPOSITE_TOO_LARGE",
            context={"dim": d * d, "max_dim": limit},
        )
    u = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            u[j * d + i, i * d + j] = 1.0
    return u


def swap(d: int) -> KrausChannel:
    return KrausChannel((swap_unitary(d),))


def mub_isometry(d_in: int, d_out: int) -> KrausChannel:
    """
    Isometry whose image of every standard input vector is unbiased in the
    standard output basis: the first d_in columns of the d_out-point DFT.
    """
    d_in = _check_dimension(d_in, "d_in")
    d_out = _check_dimension(d_out, "d_out")
    if d_in > d_out:
        raise DomainError(
            f"mub_isometry needs d_in <= d_out, got {d_in} > {d_out}",
            error_code="PARAMETER_OUT_OF_RANGE",
            context={"d_in": d_in, "d_out": d_out},
        )
    rows, cols = np.meshgrid(np.arange(d_out), np.arange(d_in), indexing="ij")
    v = np.exp(2j * np.pi * rows * cols / d_out) / np.sqrt(d_out)
    return KrausChannel((v,))


STANDARD_CHANNELS: Dict[str, Callable[..., KrausChannel]] = {
    "identity": identity_channel,
    "unitary": unitary_channel,
    "depolarizing": depolarizing,
    "phase_damping": phase_damping,
    "amplitude_damping": amplitude_damping,
    "swap": swap,
    "mub_isometry": mub_isometry,
}


def standard_channel(kind: str, **params) -> KrausChannel:
    """
    Build a channel from the standard set by name.

    Args:
        kind: one of STANDARD_CHANNELS
        **params: keyword arguments of the builder (d, unitary, p, lam, gamma, d_in, d_out)
    """
    builder = STANDARD_CHANNELS.get(kind)
    if builder is None:
        raise DomainError(
            f"unknown standard channel '{kind}'",
            error_code="UNKNOWN_CHANNEL_KIND",
            context={"kind": kind, "known": sorted(STANDARD_CHANNELS)},
        )
    try:
        return builder(**params)
    except TypeError as exc:
        raise DomainError(
            f"bad parameters for channel '{kind}': {exc}",
            error_code="BAD_CHANNEL_PARAMETERS",
            context={"kind": kind, "params": sorted(params)},
        ) from exc


# =========================
# Random channels
# =========================

def haar_unitary_matrix(d: int, rng: SeedLike = None) -> ComplexMatrix:
    """Haar-distributed unitary: QR of a Ginibre matrix with phase-fixed R diagonal."""
    rng = as_generator(rng)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = scipy.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_isometry(rows: int, cols: int, rng: SeedLike = None) -> ComplexMatrix:
    """rows x cols matrix with orthonormal columns (rows >= cols)."""
    rng = as_generator(rng)
    z = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)
    q, r = scipy.linalg.qr(z, mode="economic")
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def haar_unitary(d: int, rng: SeedLike = None) -> KrausChannel:
    d = _check_dimension(d, "d")
    return KrausChannel((haar_unitary_matrix(d, rng),))


def mixture_of_unitaries(d: int, n: int, rng: SeedLike = None) -> KrausChannel:
    """Convex mixture of n Haar unitaries with uniform-simplex weights; bistochastic."""
    d = _check_dimension(d, "d")
    n = _check_dimension(n, "n")
    rng = as_generator(rng)
    weights = rng.dirichlet(np.ones(n))
    ops = tuple(np.sqrt(w) * haar_unitary_matrix(d, rng) for w in weights)
    return KrausChannel(ops)


def cptp_stinespring(d_in: int, d_out: int, env: int, rng: SeedLike = None) -> KrausChannel:
    """
    Random trace-preserving channel from a Stinespring isometry.

    The (d_out * env) x d_in isometry is cut into env blocks of d_out rows;
    each block is one Kraus operator.
    """
    d_in = _check_dimension(d_in, "d_in")
    d_out = _check_dimension(d_out, "d_out")
    env = _check_dimension(env, "env")
    if d_out * env < d_in:
        raise DomainError(
            f"Stinespring dilation needs d_out * env >= d_in, got {d_out} * {env} < {d_in}",
            error_code="PARAMETER_OUT_OF_RANGE",
            context={"d_in": d_in, "d_out": d_out, "env": env},
        )
    v = random_isometry(d_out * env, d_in, rng)
    ops = tuple(v[k * d_out:(k + 1) * d_out, :] for k in range(env))
    return KrausChannel(ops, dim_in=d_in, dim_out=d_out)


RANDOM_CHANNELS: Dict[str, Callable[..., KrausChannel]] = {
    "haar_unitary": haar_unitary,
    "mixture_of_unitaries": mixture_of_unitaries,
    "cptp_stinespring": cptp_stinespring,
}


def random_channel(kind: str, rng: SeedLike = None, **params) -> KrausChannel:
    """
    Draw a random channel; the same seed gives a bit-identical Kraus list.

    Args:
        kind: haar_unitary (d), mixture_of_unitaries (d, n) or cptp_stinespring (d_in, d_out, env)
        rng: seed or numpy Generator
    """
    builder = RANDOM_CHANNELS.get(kind)
    if builder is None:
        raise DomainError(
            f"unknown random channel '{kind}'",
            error_code="UNKNOWN_CHANNEL_KIND",
            context={"kind": kind, "known": sorted(RANDOM_CHANNELS)},
        )
    try:
        return builder(rng=rng, **params)
    except TypeError as exc:
        raise DomainError(
            f"bad parameters for random channel '{kind}': {exc}",
            error_code="BAD_CHANNEL_PARAMETERS",
            context={"kind": kind, "params": sorted(params)},
        ) from exc


def random_non_unital_channel(
    d_in: int,
    d_out: int,
    env: int,
    rng: SeedLike = None,
    min_unital_defect: float = 1e-3,
    max_attempts: int = 100
) -> KrausChannel:
    """Stinespring channel whose unital defect is at least min_unital_defect."""
    rng = as_generator(rng)
    for _ in range(max_attempts):
        channel = cptp_stinespring(d_in, d_out, env, rng)
        if validate(channel).unital_defect >= min_unital_defect:
            return channel
    raise DomainError(
        f"no channel with unital defect >= {min_unital_defect} in {max_attempts} draws",
        error_code="SAMPLER_EXHAUSTED",
        context={"d_in": d_in, "d_out": d_out, "env": env},
    )
