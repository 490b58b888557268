import numpy as np
import pytest

from app.services.ensemble import InstanceSpec, generate_instance
from app.services.gf2_core import BitMatrix


@pytest.fixture
def worked_b_m() -> BitMatrix:
    """Five measured weight-3 rows over six variables"""
    return BitMatrix.from_strings(["101001", "010101", "011100", "011010", "110001"])


@pytest.fixture
def worked_b_mp() -> BitMatrix:
    """worked_b_m after echelon form and backfill"""
    return BitMatrix.from_strings(["111110", "011110", "001111", "000110", "000010"])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def make_instance():
    def _make(L: int = 8, alpha_max: float = 1.5, seed: int = 0):
        return generate_instance(InstanceSpec(L=L, alpha_max=alpha_max, seed=seed))

    return _make
