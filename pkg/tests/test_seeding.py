import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from utils.seeding import as_generator, derive_trial_seed, trial_generator


def test_derived_seed_is_stable():
    assert derive_trial_seed(42, 0) == derive_trial_seed(42, 0)
    assert derive_trial_seed(42, 0) != derive_trial_seed(42, 1)
    assert derive_trial_seed(42, 0) != derive_trial_seed(43, 0)


@given(master=st.integers(0, 2**64 - 1), trial=st.integers(0, 10**6))
def test_derived_seed_fits_in_64_bits(master, trial):
    assert 0 <= derive_trial_seed(master, trial) < 2**64


@pytest.mark.parametrize("master, trial", [(-1, 0), (2**64, 0), (0, -1)])
def test_derived_seed_range_errors(master, trial):
    with pytest.raises(ValueError):
        derive_trial_seed(master, trial)


def test_trial_generators_repeat():
    first = trial_generator(7, 3).standard_normal(5)
    second = trial_generator(7, 3).standard_normal(5)
    assert np.array_equal(first, second)


def test_as_generator_passes_generators_through():
    rng = np.random.default_rng(1)
    assert as_generator(rng) is rng
    assert as_generator(5).integers(1000) == np.random.default_rng(5).integers(1000)
