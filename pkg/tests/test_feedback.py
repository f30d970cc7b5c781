from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from contracts import ContractError, DomainError, ShapeError, StructuralError
from quantum.channels import KrausChannel, amplitude_damping, depolarizing, identity_channel, unitary_channel
from quantum.feedback import (
    ErrorModel,
    FeedbackProtocol,
    Measurement,
    jsu_check,
    jsu_error_check,
    mutual_information,
    post_measurement_state,
    projective_measurement,
    random_protocol,
    unitary_mixture_measurement,
    validate_measurement,
    within_tolerance,
    work_form_feedback,
)
from quantum.linalg_core import DensityMatrix, completely_mixed

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])


@pytest.fixture
def bit_flip_protocol(two_level):
    """Dephase, read the bit, flip it back to 0 when it reads 1."""
    return FeedbackProtocol(
        first_channel=depolarizing(0.5),
        measurement=projective_measurement(np.eye(2)),
        feedback_channels=(identity_channel(2), unitary_channel(PAULI_X)),
        observables_out=(two_level, two_level),
        observable_in=two_level,
        param=0.5,
    )


def _random_sizes(rng):
    return int(rng.integers(2, 4)), int(rng.integers(2, 4))


# =========================
# Measurements
# =========================

def test_incomplete_measurement_is_rejected():
    with pytest.raises(StructuralError) as exc:
        Measurement((0.5 * np.eye(2),))
    assert exc.value.error_code == "MEASUREMENT_INCOMPLETE"


def test_projective_measurement_satisfies_dual_relation():
    flags = validate_measurement(projective_measurement(np.eye(3)))
    assert flags.complete
    assert flags.pclr_satisfied


def test_general_measurement_may_break_dual_relation():
    # N_0 = |0><0|, N_1 = |0><1| is complete but sum N N^dagger = 2|0><0|
    measurement = Measurement((np.diag([1.0, 0.0]), np.array([[0.0, 1.0], [0.0, 0.0]])))
    flags = validate_measurement(measurement)
    assert flags.complete
    assert not flags.pclr_satisfied
    assert flags.pclr_defect == pytest.approx(1.0)


def test_unitary_mixture_measurement_rejects_bad_weights():
    with pytest.raises(DomainError):
        unitary_mixture_measurement([0.7, 0.7], [np.eye(2), PAULI_X])


def test_post_measurement_state():
    probability, state = post_measurement_state(projective_measurement(np.eye(2)), completely_mixed(2), 1)
    assert probability == pytest.approx(0.5)
    assert_allclose(state.matrix, np.diag([0.0, 1.0]), atol=1e-15)


def test_post_measurement_state_zero_probability():
    rho = DensityMatrix(np.diag([1.0, 0.0]))
    with pytest.raises(DomainError) as exc:
        post_measurement_state(projective_measurement(np.eye(2)), rho, 1)
    assert exc.value.error_code == "ZERO_PROBABILITY_OUTCOME"


# =========================
# Error models and protocol structure
# =========================

def test_error_model_row_must_sum_to_one():
    with pytest.raises(DomainError) as exc:
        ErrorModel([[0.9, 0.0], [0.0, 1.0]])
    assert exc.value.error_code == "ERROR_MODEL_ROW_SUM"
    assert exc.value.context["row"] == 0


def test_error_model_must_be_square():
    with pytest.raises(ShapeError):
        ErrorModel([[1.0, 0.0]])


def test_protocol_length_mismatch(two_level):
    with pytest.raises(StructuralError) as exc:
        FeedbackProtocol(
            first_channel=identity_channel(2),
            measurement=projective_measurement(np.eye(2)),
            feedback_channels=(identity_channel(2),),
            observables_out=(two_level, two_level),
            observable_in=two_level,
            param=1.0,
        )
    assert exc.value.error_code == "PROTOCOL_LENGTH_MISMATCH"


def test_protocol_dimension_mismatch(two_level):
    with pytest.raises(StructuralError) as exc:
        FeedbackProtocol(
            first_channel=depolarizing(0.1, d=3),
            measurement=projective_measurement(np.eye(2)),
            feedback_channels=(identity_channel(2), identity_channel(2)),
            observables_out=(two_level, two_level),
            observable_in=two_level,
            param=1.0,
        )
    assert "first channel in" in exc.value.context["mismatched"]


def test_mutual_information_of_independent_and_correlated_tables():
    assert mutual_information(np.full((2, 2), 0.25)).average == pytest.approx(0.0, abs=1e-15)
    correlated = mutual_information(np.diag([0.5, 0.5]))
    assert correlated.average == pytest.approx(np.log(2.0))
    assert np.isnan(correlated.pointwise[0, 1])


# =========================
# Error-free relation
# =========================

def test_bit_flip_protocol(bit_flip_protocol):
    result = jsu_check(bit_flip_protocol)
    assert result.holds
    assert result.normalization_defect < 1e-12
    assert result.outcome_probs.sum() == pytest.approx(1.0)
    assert result.gamma == pytest.approx(result.generalized_average, rel=1e-12)


def test_feedback_relation_on_random_protocols(rng):
    for _ in range(100):
        dim, outcomes = _random_sizes(rng)
        result = jsu_check(random_protocol(dim, outcomes, rng))
        assert result.holds
        assert abs(result.generalized_average - result.gamma) <= 1e-9 * max(1.0, result.gamma)


def test_trivial_feedback_has_unit_efficacy(two_level):
    protocol = FeedbackProtocol(
        first_channel=depolarizing(0.3),
        measurement=projective_measurement(np.eye(2)),
        feedback_channels=(identity_channel(2), identity_channel(2)),
        observables_out=(two_level, two_level),
        observable_in=two_level,
        param=1.1,
    )
    result = jsu_check(protocol)
    assert result.gamma == pytest.approx(1.0, abs=1e-12)
    assert result.generalized_average == pytest.approx(1.0, abs=1e-12)


def test_feedback_relation_needs_unital_first_channel(bit_flip_protocol):
    protocol = replace(bit_flip_protocol, first_channel=amplitude_damping(0.4))
    with pytest.raises(ContractError) as exc:
        jsu_check(protocol)
    assert exc.value.error_code == "CHANNEL_NOT_UNITAL"


def test_error_free_check_refuses_error_model(bit_flip_protocol):
    with pytest.raises(ContractError) as exc:
        jsu_check(replace(bit_flip_protocol, error_model=ErrorModel.identity(2)))
    assert exc.value.error_code == "UNEXPECTED_ERROR_MODEL"


def test_unnormalized_joint_fails_feedback_relation(bit_flip_protocol):
    # TP and unital within 1e-9, joint table short by 8e-10
    leaky = KrausChannel((np.sqrt(1.0 - 8e-10) * np.eye(2),))
    result = jsu_check(replace(bit_flip_protocol, first_channel=leaky))
    assert result.first_stage_unital
    assert result.normalization_defect == pytest.approx(8e-10, rel=1e-3)
    assert not result.normalized
    assert result.holds is False


def test_tolerance_is_absolute():
    assert within_tolerance(1.0 + 5e-10, 1.0, 1e-9)
    assert not within_tolerance(100.0 + 5e-9, 100.0, 1e-9)
    assert not within_tolerance(1e6 * (1.0 + 1e-12), 1e6, 1e-9)


# =========================
# Relations with measurement errors
# =========================

def test_error_relations_on_random_protocols(rng):
    for _ in range(100):
        dim, outcomes = _random_sizes(rng)
        protocol = random_protocol(dim, outcomes, rng, unital_feedback=True, pclr=True, with_errors=True)
        result = jsu_error_check(protocol)
        assert result.holds
        assert result.holds_mi
        assert result.mi_equality_value == pytest.approx(1.0, rel=1e-9)


def test_mutual_information_relation_not_asserted_without_dual_relation(rng):
    protocol = random_protocol(2, 3, rng, unital_feedback=True, pclr=False, with_errors=True)
    result = jsu_error_check(protocol)
    assert result.holds
    assert result.holds_mi is None


def test_identity_error_matrix_reduces_to_error_free(rng):
    protocol = random_protocol(3, 2, rng)
    error_free = jsu_check(protocol)
    noisy = jsu_error_check(replace(protocol, error_model=ErrorModel.identity(2)))
    assert noisy.gamma_tilde == pytest.approx(error_free.gamma, rel=1e-12)
    assert noisy.generalized_average == pytest.approx(error_free.generalized_average, rel=1e-12)


def test_error_check_needs_error_model(bit_flip_protocol):
    with pytest.raises(ContractError) as exc:
        jsu_error_check(bit_flip_protocol)
    assert exc.value.error_code == "MISSING_ERROR_MODEL"


def test_error_relation_flags_stay_open_for_non_unital_first_channel(bit_flip_protocol):
    protocol = replace(
        bit_flip_protocol,
        first_channel=amplitude_damping(0.4),
        error_model=ErrorModel([[0.9, 0.1], [0.2, 0.8]]),
    )
    result = jsu_error_check(protocol)
    assert result.holds is None
    assert result.holds_mi is None


# =========================
# Thermodynamic form
# =========================

def test_work_form_matches_efficacy(rng):
    protocol = random_protocol(2, 2, rng)
    work_form = work_form_feedback(protocol, beta=1.3)
    assert work_form.holds
    assert work_form.average == pytest.approx(work_form.efficacy, rel=1e-9)


def test_work_form_rejects_zero_beta(bit_flip_protocol):
    with pytest.raises(DomainError) as exc:
        work_form_feedback(bit_flip_protocol, beta=0.0)
    assert exc.value.error_code == "ZERO_BETA"


def test_work_form_with_shared_hamiltonian_equals_abstract_form(bit_flip_protocol):
    work_form = work_form_feedback(bit_flip_protocol)
    assert work_form.average == pytest.approx(work_form.abstract_average, rel=1e-12)
