"""
Shared fixtures: caption parameters (t1 = 1, delta = 0.8, N = 5) and seeded RNG
"""

import numpy as np
import pytest

from src.services.model_service import Hamiltonian, ModelParams, SiteLayout, build_hamiltonian


@pytest.fixture
def caption():
    """ModelParams factory for the caption values at a chosen t2."""
    def make(t2: float, cells: int = 5) -> ModelParams:
        return ModelParams(t1=1.0, t2=t2, delta=0.8, cells_per_chain=cells)
    return make


@pytest.fixture
def caption_h(caption):
    def make(t2: float, defects=()) -> Hamiltonian:
        return build_hamiltonian(caption(t2), defects)
    return make


@pytest.fixture
def layout():
    return SiteLayout(5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def zero_hamiltonian():
    """Stationary dynamics on the 21-site layout."""
    matrix = np.zeros((21, 21), dtype=complex)
    return Hamiltonian(matrix=matrix, layout=SiteLayout(5), params=ModelParams(1.0, 1.0, 0.0, 5))
