"""Hamiltonians, decoherence-free subspace and jump channels.

This module builds the operators of two Lambda atoms (levels 0, 1, 2) in a
leaky cavity resonant with the 1-2 transition:

- conditional_hamiltonian: non-Hermitian no-emission generator
- laser_hamiltonian: individual driving of the 0-2 and 1-2 transitions
- dfs_basis / trapped_state: the five decoherence-free states
- effective_hamiltonian: Zeno projection P_DFS H P_DFS
- jump_channels: collapse operators whose -(i/2) sum c^dagger c reproduces
  the anti-Hermitian part of the conditional Hamiltonian
- v_system_*: the three-level V configuration with a macroscopic dark period

Decay-rate convention: kappa and gamma_cav multiply -i b^dagger b and
-i |2><2| directly (amplitude rates). Populations therefore decay at 2*kappa
and 2*gamma_cav; the jump operators carry sqrt(2 * rate).
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import null_space

from .data_types import (
    InvalidInputError,
    LaserPulse,
    PropagationConfig,
    SpaceConfig,
    SystemParams,
    VSystemParams,
)
from .hilbert import (
    JumpChannel,
    Operator,
    StateVector,
    annihilation_operator,
    atomic_transition,
    excited_population_operator,
    ket,
    level_transition,
    lowering_operator,
    photon_number_operator,
    superposition,
    zero_operator,
)
from . import dynamics

logger = logging.getLogger(__name__)

DFS_NAMES = ("000", "001", "010", "011", "0a")

# V system basis ordering
V_GROUND, V_METASTABLE, V_FAST = 0, 1, 2
V_LEVEL_NAMES = ("g", "m", "s")


class EffectiveHamiltonian(BaseModel):
    """P H P written in an orthonormal basis and embedded in the full space."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    reduced: Operator
    embedded: Operator
    basis: Tuple[StateVector, ...]


# ============================================================================
# Cavity-atom Hamiltonians
# ============================================================================


def conditional_hamiltonian(params: SystemParams, space: SpaceConfig) -> Operator:
    """No-emission generator of the two in-cavity atoms and the cavity mode.

    H = i g sum_i (b |2>_i<1| - h.c.) - i gamma_cav sum_i |2>_i<2| - i kappa b^dagger b
    """
    b = annihilation_operator(space)
    coupling = zero_operator(space)
    for i in (1, 2):
        coupling = coupling + b @ atomic_transition(i, 2, 1, space)
    hermitian = 1j * params.g * (coupling - coupling.dagger())
    decay = params.gamma_cav * excited_population_operator(space) + params.kappa * photon_number_operator(space)
    return hermitian - 1j * decay


def laser_hamiltonian(pulse: LaserPulse, space: SpaceConfig) -> Operator:
    """(1/2) sum_i sum_j (omega_j^(i) |j>_i<2| + h.c.); identity on the cavity."""
    h = zero_operator(space)
    for i in (1, 2):
        for j in (0, 1):
            rabi = pulse.rabi(j, i)
            if rabi == 0:
                continue
            term = rabi * atomic_transition(i, j, 2, space)
            h = h + 0.5 * (term + term.dagger())
    return h


# ============================================================================
# Decoherence-free subspace
# ============================================================================


def trapped_state(space: SpaceConfig) -> StateVector:
    """|0, a> with a = (|1>_1|2>_2 - |2>_1|1>_2) / sqrt(2)."""
    return superposition([ket(0, 1, 2, space), ket(0, 2, 1, space)], [1 / np.sqrt(2), -1 / np.sqrt(2)])


def dfs_basis(space: SpaceConfig) -> List[StateVector]:
    """The five decoherence-free states for gamma_cav = 0.

    Order: |0,0,0>, |0,0,1>, |0,1,0>, |0,1,1>, |0,a>. Each has no photon and is
    annihilated by J_-.
    """
    ground = [ket(0, j1, j2, space) for j1 in (0, 1) for j2 in (0, 1)]
    return ground + [trapped_state(space)]


def dfs_kernel_basis(space: SpaceConfig) -> np.ndarray:
    """Numerical joint kernel of the photon number and J_-.

    Returns:
        Matrix whose orthonormal columns span the kernel
    """
    constraints = np.vstack([photon_number_operator(space).entries, lowering_operator(space).entries])
    kernel = null_space(constraints)
    logger.debug(f"DFS kernel dimension {kernel.shape[1]} for n_max={space.n_max}")
    return kernel


def is_decoherence_free(
    psi: StateVector,
    params: SystemParams,
    horizon: float = 100.0,
    tol: float = 1e-10,
    cfg: PropagationConfig = PropagationConfig(),
) -> bool:
    """Dynamic criterion: the no-emission probability stays above 1 - tol.

    P0 is non-increasing, so checking it at the horizon covers [0, horizon].

    Raises:
        InvalidInputError: If psi is not normalized
    """
    if psi.space is None:
        raise InvalidInputError("State is not attached to a cavity space")
    if abs(psi.squared_norm() - 1.0) > 1e-10:
        raise InvalidInputError(f"State must be normalized, squared norm is {psi.squared_norm():.12f}")
    h = conditional_hamiltonian(params, psi.space)
    p0 = dynamics.no_emission_probability(dynamics.propagate(h, psi, horizon, cfg))
    logger.debug(f"P0({horizon}) = {p0:.15f}")
    return p0 >= 1.0 - tol


def effective_hamiltonian(h_total: Operator, dfs: Sequence[StateVector]) -> EffectiveHamiltonian:
    """Zeno projection of h_total onto the span of the orthonormal dfs states."""
    columns = np.column_stack([s.amplitudes for s in dfs])
    reduced = columns.conj().T @ h_total.entries @ columns
    embedded = columns @ reduced @ columns.conj().T
    return EffectiveHamiltonian(
        reduced=Operator(reduced),
        embedded=h_total.with_entries(embedded),
        basis=tuple(dfs),
    )


# ============================================================================
# Jump channels
# ============================================================================


def jump_channels(params: SystemParams, space: SpaceConfig, branching: float = 1.0) -> List[JumpChannel]:
    """Collapse operators consistent with the conditional Hamiltonian.

    Args:
        params: System rates
        space: Cavity truncation
        branching: Fraction of spontaneous decay from |2> ending in |1>

    Returns:
        Cavity channel sqrt(2 kappa) b, then atomic channels with non-zero rate
    """
    if not 0.0 <= branching <= 1.0:
        raise InvalidInputError(f"Branching ratio must lie in [0, 1], got {branching}")
    channels = [JumpChannel(operator=np.sqrt(2 * params.kappa) * annihilation_operator(space), label="cavity")]
    for i in (1, 2):
        for level, weight in ((1, branching), (0, 1.0 - branching)):
            rate = weight * params.gamma_cav
            if rate == 0:
                continue
            operator = np.sqrt(2 * rate) * atomic_transition(i, level, 2, space)
            channels.append(JumpChannel(operator=operator, label=f"atom{i}:2->{level}"))
    return channels


def channel_decay_operator(channels: Sequence[JumpChannel]) -> Operator:
    """-(i/2) sum_c c^dagger c."""
    total = None
    for channel in channels:
        term = channel.operator.dagger() @ channel.operator
        total = term if total is None else total + term
    return -0.5j * total


# ============================================================================
# V system
# ============================================================================


def v_system_hamiltonian(p: VSystemParams) -> Operator:
    """(1/2)(omega_w |g><m| + omega_s |g><s| + h.c.) - i gamma_s |s><s| on {g, m, s}."""
    weak = p.omega_w * level_transition(V_GROUND, V_METASTABLE)
    strong = p.omega_s * level_transition(V_GROUND, V_FAST)
    drive = 0.5 * (weak + strong)
    drive = drive + drive.conj().T
    return Operator(drive - 1j * p.gamma_s * level_transition(V_FAST, V_FAST))


def v_system_state(name: str) -> StateVector:
    """Basis state 'g', 'm' or 's' of the V system."""
    if name not in V_LEVEL_NAMES:
        raise InvalidInputError(f"Unknown V-system level '{name}', expected one of {V_LEVEL_NAMES}")
    amplitudes = np.zeros(3, dtype=complex)
    amplitudes[V_LEVEL_NAMES.index(name)] = 1.0
    return StateVector(amplitudes)


def v_system_jump_channel(p: VSystemParams) -> JumpChannel:
    """sqrt(2 gamma_s) |g><s|: the fast level decays back to the ground state."""
    return JumpChannel(
        operator=Operator(np.sqrt(2 * p.gamma_s) * level_transition(V_GROUND, V_FAST)),
        label="fast",
    )


def v_system_steady_state(p: VSystemParams) -> np.ndarray:
    """Lindblad steady state of the V system (3 x 3 density matrix).

    Uses the row-major vectorisation vec(A rho B) = (A kron B^T) vec(rho).
    """
    h = v_system_hamiltonian(p).hermitian_part().entries
    c = v_system_jump_channel(p).operator.entries
    eye = np.eye(3)
    cdc = c.conj().T @ c
    liouvillian = (
        -1j * (np.kron(h, eye) - np.kron(eye, h.T))
        + np.kron(c, c.conj())
        - 0.5 * (np.kron(cdc, eye) + np.kron(eye, cdc.T))
    )
    kernel = null_space(liouvillian)
    if kernel.shape[1] != 1:
        raise InvalidInputError(f"V system steady state is not unique (kernel dimension {kernel.shape[1]})")
    rho = kernel[:, 0].reshape(3, 3)
    rho = rho / np.trace(rho)
    return (rho + rho.conj().T) / 2
