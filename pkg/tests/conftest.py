"""Pytest configuration and shared fixtures for test suite.

This module provides shared fixtures and configuration for all tests.
Fixtures include:
- Hilbert spaces, rates and the DFS basis
- Gate configurations
- Seeded random generators
- Temporary output directories and a clean ZENO_* environment
- Oracles: closed-form decays, an independent V-system master equation
"""

import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Generator

import numpy as np
import pytest
from scipy.linalg import expm

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from zeno.zeno_modules.data_types import SpaceConfig, SystemParams, VSystemParams  # noqa: E402
from zeno.zeno_modules.dynamics import make_trajectory_rng  # noqa: E402
from zeno.zeno_modules.gates import CnotConfig  # noqa: E402
from zeno.zeno_modules.hilbert import StateVector  # noqa: E402
from zeno.zeno_modules.model import dfs_basis, v_system_hamiltonian, v_system_jump_channel  # noqa: E402


# ============================================================================
# Pytest Configuration
# ============================================================================


def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line("markers", "integration: mark test as integration test")
    config.addinivalue_line("markers", "unit: mark test as unit test")
    config.addinivalue_line("markers", "slow: mark test as slow running")


# ============================================================================
# Environment Fixtures
# ============================================================================


@pytest.fixture
def temp_dir() -> Generator[str, None, None]:
    """Provide a temporary directory that's cleaned up after the test."""
    temp_path = tempfile.mkdtemp()
    yield temp_path
    if os.path.exists(temp_path):
        shutil.rmtree(temp_path)


@pytest.fixture(autouse=True)
def clean_zeno_env(monkeypatch):
    """Remove ZENO_* variables so settings only see what a test sets."""
    for key in list(os.environ):
        if key.upper().startswith("ZENO_"):
            monkeypatch.delenv(key, raising=False)


# ============================================================================
# Model Fixtures
# ============================================================================


@pytest.fixture
def space() -> SpaceConfig:
    return SpaceConfig(n_max=2)


@pytest.fixture
def space3() -> SpaceConfig:
    return SpaceConfig(n_max=3)


@pytest.fixture
def params() -> SystemParams:
    """kappa = g = 1, no spontaneous emission."""
    return SystemParams(g=1.0, kappa=1.0, gamma_cav=0.0)


@pytest.fixture
def dfs(space):
    return dfs_basis(space)


@pytest.fixture
def cnot_cfg(params, space) -> CnotConfig:
    return CnotConfig(omega=0.01, params=params, space=space)


@pytest.fixture
def rng() -> np.random.Generator:
    return make_trajectory_rng(1234, 0)


@pytest.fixture
def v_params() -> VSystemParams:
    """A V system with fast relaxation, used for ensemble checks."""
    return VSystemParams(omega_w=0.3, omega_s=1.0, gamma_s=1.0)


# ============================================================================
# Oracles
# ============================================================================


def single_photon_p0(kappa: float, t: float) -> float:
    """P0 of |1,0,0>: the photon leaves at population rate 2 kappa."""
    return float(np.exp(-2.0 * kappa * t))


def random_state(dim: int, generator: np.random.Generator, space=None) -> StateVector:
    amplitudes = generator.normal(size=dim) + 1j * generator.normal(size=dim)
    return StateVector(amplitudes / np.linalg.norm(amplitudes), space)


def v_system_master_equation_state(p: VSystemParams, t: float) -> np.ndarray:
    """Density matrix at time t from |g><g|, column-stacked Liouvillian propagation."""
    h = v_system_hamiltonian(p).hermitian_part().entries
    c = v_system_jump_channel(p).operator.entries
    eye = np.eye(3)
    cdc = c.conj().T @ c
    # vec(A X B) = (B^T kron A) vec(X) for column stacking
    liouvillian = (
        -1j * (np.kron(eye, h) - np.kron(h.T, eye))
        + np.kron(c.conj(), c)
        - 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye))
    )
    rho0 = np.zeros((3, 3), dtype=complex)
    rho0[0, 0] = 1.0
    vec = expm(liouvillian * t) @ rho0.reshape(-1, order="F")
    return vec.reshape(3, 3, order="F")
