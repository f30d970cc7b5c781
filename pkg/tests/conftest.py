"""Shared fixtures for the fluctlab test suite."""

from pathlib import Path

import numpy as np
import pytest

from quantum.linalg_core import HermitianOperator
from utils.environment_config import reset_env_config

FIXTURES = Path(__file__).parent / "fixtures"

# beta * epsilon for the amplitude-damping counterexample
LN3 = float(np.log(3.0))


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    """Isolate every test from FLUCTLAB_* variables and the config singleton."""
    for name in ("FLUCTLAB_SEED", "FLUCTLAB_MAX_DIM", "FLUCTLAB_JOBS", "FLUCTLAB_OUTPUT_DIR", "FLUCTLAB_LOG_DIR"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("FLUCTLAB_OUTPUT_DIR", str(tmp_path / "runs"))
    reset_env_config()
    yield
    reset_env_config()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def two_level():
    """H = diag(0, 1)."""
    return HermitianOperator.from_diagonal([0.0, 1.0])
