import numpy as np
import pytest

from vibtomo.states import VibronicDensity


def random_vibronic(rng: np.random.Generator, n_max: int) -> VibronicDensity:
    """Random full-rank composite density (Ginibre construction)."""
    g = rng.normal(size=(2 * n_max, 2 * n_max)) + 1j * rng.normal(size=(2 * n_max, 2 * n_max))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return VibronicDensity.from_full_matrix(rho)


def random_unit_pair(rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    return psi / np.linalg.norm(psi)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260810)
