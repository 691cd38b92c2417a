"""Pytest configuration and fixtures for krdecay tests."""

import json
from pathlib import Path

import numpy as np
import pytest

import krdecay


TEST_VECTORS_PATH = Path(__file__).parent.parent / "test-vectors"


@pytest.fixture
def test_vectors_path() -> Path:
    """Return the path to the test vectors directory."""
    return TEST_VECTORS_PATH


def load_test_vector(category: str, name: str) -> dict:
    """Load a test vector JSON file."""
    file_path = TEST_VECTORS_PATH / category / f"{name}.json"
    with open(file_path) as f:
        return json.load(f)


def vector_path(category: str, name: str) -> Path:
    """Path of a non-JSON test vector (model files, tables)."""
    return TEST_VECTORS_PATH / category / name


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    """Random complex Hermitian matrix with entries of order ``scale``."""
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (x + x.conj().T)


def coupled_model(
    rng: np.random.Generator,
    php: np.ndarray,
    reservoir: np.ndarray,
    coupling: float,
) -> krdecay.FiniteLevelModel:
    """Subspace block ``php`` coupled to reservoir levels with random couplings of size ``coupling``."""
    n = php.shape[0]
    k = len(reservoir)
    h = np.zeros((n + k, n + k), dtype=np.complex128)
    h[:n, :n] = php
    h[n:, n:] = np.diag(reservoir)
    c = coupling * (rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k)))
    h[:n, n:] = c
    h[n:, :n] = c.conj().T
    return krdecay.FiniteLevelModel(h, tuple(range(n)))


def quasi_continuum(levels: int, e1: float, width: float, band: tuple) -> krdecay.FiniteLevelModel:
    """One level at ``e1`` coupled uniformly to ``levels`` equally spaced levels.

    The coupling is chosen so that the golden-rule width 2π|g|²/δ equals ``width``.
    """
    lo, hi = band
    omega = np.linspace(lo, hi, levels)
    spacing = omega[1] - omega[0]
    g = np.sqrt(width * spacing / (2.0 * np.pi))
    h = np.zeros((levels + 1, levels + 1), dtype=np.complex128)
    h[0, 0] = e1
    h[1:, 1:] = np.diag(omega)
    h[0, 1:] = g
    h[1:, 0] = g
    return krdecay.FiniteLevelModel(h, (0,))


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator shared by the random-model suites."""
    return np.random.default_rng(20240917)


@pytest.fixture
def bw_fig1_vector() -> dict:
    """Load the bw-fig1 test vector."""
    return load_test_vector("valid", "bw-fig1")


@pytest.fixture
def onset_linear_vector() -> dict:
    """Load the onset-linear test vector."""
    return load_test_vector("valid", "onset-linear")


@pytest.fixture
def bw_wide_vector() -> dict:
    """Load the bw-wide test vector."""
    return load_test_vector("edge", "bw-wide")


@pytest.fixture
def bw_at_threshold_vector() -> dict:
    """Load the bw-at-threshold test vector."""
    return load_test_vector("edge", "bw-at-threshold")


@pytest.fixture
def fig1_density(bw_fig1_vector) -> krdecay.TruncatedBreitWigner:
    """The E0/γ0 = 25 density of the figure presets."""
    return krdecay.TruncatedBreitWigner(**bw_fig1_vector["density"])


@pytest.fixture
def onset_density(onset_linear_vector) -> krdecay.TruncatedBreitWigner:
    """Breit–Wigner density vanishing linearly at the threshold."""
    return krdecay.TruncatedBreitWigner(**onset_linear_vector["density"])


@pytest.fixture(scope="session")
def fig1_t_as() -> float:
    """t_as of the figure density, computed once per session."""
    return krdecay.transition_time(krdecay.TruncatedBreitWigner(25.0, 1.0, 0.0)).t_as


@pytest.fixture
def loy_model_path() -> Path:
    return vector_path("valid", "loy-two-level.model")


@pytest.fixture
def zero_coupling_model_path() -> Path:
    return vector_path("valid", "zero-coupling.model")


@pytest.fixture
def friedrichs_model_path() -> Path:
    return vector_path("valid", "friedrichs-flat.model")


@pytest.fixture
def point_masses_path() -> Path:
    return vector_path("valid", "point-masses.txt")
