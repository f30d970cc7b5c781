import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from contracts import ContractError, DomainError, ShapeError, StructuralError
from quantum.channels import (
    KrausChannel,
    adjoint,
    amplitude_damping,
    apply,
    apply_operator,
    compose,
    cptp_stinespring,
    depolarizing,
    haar_unitary_matrix,
    identity_channel,
    mixture_of_unitaries,
    mub_isometry,
    phase_damping,
    random_channel,
    random_non_unital_channel,
    require_bistochastic,
    standard_channel,
    swap,
    tensor,
    unitary_channel,
    validate,
)
from quantum.linalg_core import DensityMatrix, random_density_matrix


# =========================
# Construction
# =========================

def test_empty_kraus_list_is_structural_error():
    with pytest.raises(StructuralError) as exc:
        KrausChannel(())
    assert exc.value.error_code == "EMPTY_KRAUS_LIST"


def test_inconsistent_kraus_shapes():
    with pytest.raises(StructuralError) as exc:
        KrausChannel((np.eye(2), np.eye(3)))
    assert exc.value.context["index"] == 1


def test_dimensions_inferred_from_first_operator():
    channel = KrausChannel((np.ones((3, 2)) / np.sqrt(3.0),))
    assert (channel.dim_in, channel.dim_out) == (2, 3)
    assert not channel.is_square


# =========================
# Validation
# =========================

@pytest.mark.parametrize("channel, is_unital", [
    (identity_channel(3), True),
    (depolarizing(0.3), True),
    (depolarizing(0.7, d=3), True),
    (phase_damping(0.4), True),
    (amplitude_damping(0.0), True),
    (amplitude_damping(0.5), False),
    (swap(2), True),
])
def test_standard_channels_are_trace_preserving(channel, is_unital):
    report = validate(channel)
    assert report.is_tp
    assert report.tp_defect < 1e-12
    assert report.is_unital == is_unital


def test_amplitude_damping_unital_defect_equals_gamma():
    report = validate(amplitude_damping(0.5))
    assert report.unital_defect == pytest.approx(0.5, abs=1e-12)


def test_mub_isometry_is_unbiased():
    channel = mub_isometry(2, 4)
    assert validate(channel).is_tp
    assert_allclose(np.abs(channel.kraus_ops[0]) ** 2, np.full((4, 2), 0.25), atol=1e-14)


def test_mub_isometry_rejects_shrinking():
    with pytest.raises(DomainError):
        mub_isometry(3, 2)


def test_depolarizing_full_strength_outputs_completely_mixed(rng):
    channel = depolarizing(1.0, d=3)
    rho = random_density_matrix(3, rng)
    assert_allclose(apply(channel, rho).matrix, np.eye(3) / 3, atol=1e-12)


def test_depolarizing_rejects_out_of_range():
    with pytest.raises(DomainError) as exc:
        depolarizing(1.5)
    assert exc.value.context["parameter"] == "p"


def test_validate_rejects_non_positive_tolerance():
    with pytest.raises(DomainError):
        validate(identity_channel(2), tol=0.0)


def test_require_bistochastic_reports_role():
    with pytest.raises(ContractError) as exc:
        require_bistochastic(amplitude_damping(0.2), role="feedback channel 0")
    assert exc.value.error_code == "CHANNEL_NOT_UNITAL"
    assert "feedback channel 0" in exc.value.message


def test_apply_rejects_non_tp_channel():
    channel = KrausChannel((0.5 * np.eye(2),))
    with pytest.raises(ContractError) as exc:
        apply(channel, DensityMatrix(np.eye(2) / 2))
    assert exc.value.error_code == "CHANNEL_NOT_TP"


def test_apply_shape_mismatch():
    with pytest.raises(ShapeError):
        apply(identity_channel(3), DensityMatrix(np.eye(2) / 2))


# =========================
# Algebra
# =========================

def test_adjoint_of_bistochastic_is_bistochastic(rng):
    channel = mixture_of_unitaries(3, 4, rng)
    report = validate(adjoint(channel))
    assert report.is_tp and report.is_unital


def test_adjoint_of_non_unital_is_not_tp():
    assert not validate(adjoint(amplitude_damping(0.5))).is_tp


def test_adjoint_satisfies_hilbert_schmidt_duality(rng):
    channel = cptp_stinespring(2, 3, 2, rng)
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    y = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    lhs = np.trace(y.conj().T @ apply_operator(channel, x))
    rhs = np.trace(apply_operator(adjoint(channel), y).conj().T @ x)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_compose_of_unital_channels_is_unital(rng):
    composed = compose(mixture_of_unitaries(2, 3, rng), depolarizing(0.4))
    assert validate(composed).is_bistochastic
    assert composed.n_ops == 3 * 4


def test_compose_dimension_mismatch():
    with pytest.raises(ShapeError):
        compose(identity_channel(2), identity_channel(3))


def test_tensor_of_channels_acts_on_products(rng):
    first, second = depolarizing(0.2), phase_damping(0.3)
    rho_a = random_density_matrix(2, rng)
    rho_b = random_density_matrix(2, rng)
    joint = apply(tensor(first, second), DensityMatrix(np.kron(rho_a.matrix, rho_b.matrix)))
    expected = np.kron(apply(first, rho_a).matrix, apply(second, rho_b).matrix)
    assert_allclose(joint.matrix, expected, atol=1e-12)


def test_swap_exchanges_subsystems(rng):
    rho_a = random_density_matrix(2, rng)
    rho_b = random_density_matrix(2, rng)
    out = apply(swap(2), DensityMatrix(np.kron(rho_a.matrix, rho_b.matrix)))
    assert_allclose(out.matrix, np.kron(rho_b.matrix, rho_a.matrix), atol=1e-12)


# =========================
# Registries and random channels
# =========================

def test_standard_channel_by_name():
    channel = standard_channel("amplitude_damping", gamma=1.0)
    assert_allclose(channel.kraus_ops[1], [[0, 1], [0, 0]])


def test_unknown_channel_kind():
    with pytest.raises(DomainError) as exc:
        standard_channel("teleport")
    assert exc.value.error_code == "UNKNOWN_CHANNEL_KIND"


def test_bad_channel_parameters():
    with pytest.raises(DomainError) as exc:
        standard_channel("phase_damping", gamma=0.2)
    assert exc.value.error_code == "BAD_CHANNEL_PARAMETERS"


def test_unitary_channel_rejects_non_unitary():
    with pytest.raises(DomainError) as exc:
        unitary_channel(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert exc.value.error_code == "NOT_UNITARY"


def test_random_channel_same_seed_same_kraus_list():
    first = random_channel("cptp_stinespring", 17, d_in=2, d_out=3, env=2)
    second = random_channel("cptp_stinespring", 17, d_in=2, d_out=3, env=2)
    for a, b in zip(first.kraus_ops, second.kraus_ops):
        assert np.array_equal(a, b)


def test_haar_unitary_is_unitary(rng):
    u = haar_unitary_matrix(4, rng)
    assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)


def test_random_non_unital_channel_has_defect(rng):
    channel = random_non_unital_channel(3, 3, 2, rng, min_unital_defect=1e-2)
    report = validate(channel)
    assert report.is_tp
    assert report.unital_defect >= 1e-2


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 4), n=st.integers(1, 4))
def test_mixtures_of_unitaries_are_bistochastic(seed, d, n):
    assert validate(mixture_of_unitaries(d, n, np.random.default_rng(seed))).is_bistochastic


def test_tp_channels_preserve_trace_and_positivity(rng):
    channel = cptp_stinespring(3, 3, 2, rng)
    for _ in range(50):
        out = apply(channel, random_density_matrix(3, rng))
        assert np.real(np.trace(out.matrix)) == pytest.approx(1.0, abs=1e-9)
        assert np.linalg.eigvalsh(out.matrix)[0] >= -1e-9
