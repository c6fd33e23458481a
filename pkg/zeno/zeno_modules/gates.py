"""Dissipation-protected CNOT gate.

A single laser pulse of length T = sqrt(2) pi / |omega| drives both atoms
while the cavity keeps the system inside the decoherence-free subspace. To
lowest order in the scale-separation ratios the dynamics reduce to a Rabi
rotation on the chain |010> - |0a> - |011>, which swaps |010> and |011>
and leaves |000>, |001> unchanged.

Example:
    cfg = CnotConfig(omega=0.01)
    outcome = apply_cnot(named_initial_state("010", cfg.space), cfg)
    print(outcome.p0, outcome.fidelity)
"""

import logging
import math
import re
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.linalg import expm

from .data_types import (
    InvalidInputError,
    LaserPulse,
    PropagationConfig,
    RegimeFlag,
    SeparationReport,
    SpaceConfig,
    SystemParams,
)
from .dynamics import conditional_state, no_emission_probability, propagate
from .hilbert import Operator, StateVector, identity, inner_product, photon_number_operator, projector_from_states, superposition
from .model import DFS_NAMES, conditional_hamiltonian, dfs_basis, effective_hamiltonian, laser_hamiltonian

logger = logging.getLogger(__name__)

# Tolerance for "supported in the DFS"
DFS_SUPPORT_TOL = 1e-8


class CnotConfig(BaseModel):
    """Gate settings.

    Attributes:
        omega: Overall complex Rabi scale
        params: Atom-cavity rates
        space: Cavity truncation
        propagation: Time-evolution backend
        split: Share of sqrt(2) omega carried by atom 1 on its 1-2 transition
        threshold: Regime ratio above which a separation flag is raised
    """
    model_config = ConfigDict(frozen=True)

    omega: complex
    params: SystemParams = SystemParams()
    space: SpaceConfig = SpaceConfig()
    propagation: PropagationConfig = PropagationConfig()
    split: float = 0.5
    threshold: float = Field(default=0.1, gt=0)

    @field_validator("omega")
    @classmethod
    def validate_omega(cls, v: complex) -> complex:
        if v == 0 or not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"Rabi scale must be finite and non-zero, got {v}")
        return v


class GateOutcome(BaseModel):
    """Result of one gate pulse, conditioned on no photon emission."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    final_state: StateVector
    p0: float = Field(ge=0.0, le=1.0)
    fidelity: float = Field(ge=0.0, le=1.0)
    duration: float = Field(gt=0.0)
    separation: SeparationReport
    warnings: List[str] = Field(default_factory=list)


class ComparisonReport(BaseModel):
    """Distance between full conditional and effective evolution over the pulse."""
    model_config = ConfigDict(frozen=True)

    times: List[float]
    distances: List[float]

    @property
    def final_distance(self) -> float:
        return self.distances[-1]

    @property
    def max_distance(self) -> float:
        return max(self.distances)


# ============================================================================
# Pulse
# ============================================================================


def pulse_duration(omega: complex) -> float:
    """T = sqrt(2) pi / |omega|."""
    if omega == 0:
        raise InvalidInputError("Rabi scale must be non-zero")
    return math.sqrt(2) * math.pi / abs(omega)


def cnot_rabi_assignment(omega: complex, split: float = 0.5) -> LaserPulse:
    """Rabi frequencies of the CNOT pulse.

    Atom 1 is driven only on 1-2 with split * sqrt(2) omega, atom 2 on 1-2 with
    -(1 - split) * sqrt(2) omega and on 0-2 with sqrt(2) omega. The default
    split gives the symmetric +/- omega / sqrt(2).

    Raises:
        InvalidInputError: If omega is zero
    """
    if omega == 0:
        raise InvalidInputError("Rabi scale must be non-zero")
    omega = complex(omega)
    scale = math.sqrt(2) * omega
    return LaserPulse(
        omega=((0j, scale), (split * scale, -(1.0 - split) * scale)),
        duration=pulse_duration(omega),
    )


def cnot_hamiltonian(cfg: CnotConfig) -> Operator:
    """Conditional Hamiltonian plus the CNOT laser pulse."""
    pulse = cnot_rabi_assignment(cfg.omega, cfg.split)
    return conditional_hamiltonian(cfg.params, cfg.space) + laser_hamiltonian(pulse, cfg.space)


def emission_horizon(cfg: CnotConfig, factor: float = 50.0) -> float:
    """factor * (g / |omega|)^2."""
    return factor * (cfg.params.g / abs(cfg.omega)) ** 2


# ============================================================================
# Ideal gate
# ============================================================================


def ideal_cnot_unitary(dfs: Sequence[StateVector]) -> Operator:
    """Target gate on the full space: the effective evolution at T on the DFS, identity elsewhere.

    The DFS action is computed from the effective Hamiltonian of a unit pulse,
    giving the |010> <-> |011> swap, identity on |000>, |001> and |0a> -> -|0a>.
    """
    space = dfs[0].space
    pulse = cnot_rabi_assignment(1.0)
    h = conditional_hamiltonian(SystemParams(), space) + laser_hamiltonian(pulse, space)
    reduced = effective_hamiltonian(h, dfs).reduced.entries
    gate = expm(-1j * pulse.duration * reduced)
    columns = np.column_stack([s.amplitudes for s in dfs])
    outside = np.eye(columns.shape[0]) - columns @ columns.conj().T
    return Operator(columns @ gate @ columns.conj().T + outside, space)


def fidelity(target: StateVector, final: StateVector) -> float:
    """|<target|final>|^2, clamped to [0, 1]."""
    return min(abs(inner_product(target, final)) ** 2, 1.0)


# ============================================================================
# Regime and gate evolution
# ============================================================================


def validate_separation(cfg: CnotConfig) -> SeparationReport:
    """Ratios gamma_cav/|omega|, |omega|/kappa and |omega| kappa / g^2 with threshold flags."""
    magnitude = abs(cfg.omega)
    p = cfg.params
    ratios = {
        RegimeFlag.SPONTANEOUS: p.gamma_cav / magnitude,
        RegimeFlag.CAVITY_DECAY: magnitude / p.kappa if p.kappa > 0 else math.inf,
        RegimeFlag.CAVITY_COUPLING: magnitude * p.kappa / p.g**2,
    }
    flags = [flag for flag, ratio in ratios.items() if ratio > cfg.threshold]
    return SeparationReport(ratios=ratios, threshold=cfg.threshold, flags=flags)


def _check_gate_input(psi0: StateVector, dfs: Sequence[StateVector]) -> None:
    if abs(psi0.squared_norm() - 1.0) > 1e-10:
        raise InvalidInputError(f"Gate input must be normalized, squared norm is {psi0.squared_norm():.12f}")
    projector = projector_from_states(dfs)
    outside = (identity(projector.space) - projector).apply(psi0).norm()
    if outside > DFS_SUPPORT_TOL:
        raise InvalidInputError(f"Gate input has weight {outside:.3e} outside the DFS")


def apply_cnot(psi0: StateVector, cfg: CnotConfig) -> GateOutcome:
    """Run the pulse on psi0 and score the conditional final state against the ideal gate.

    Raises:
        InvalidInputError: If psi0 is not normalized or leaves the DFS
    """
    dfs = dfs_basis(cfg.space)
    _check_gate_input(psi0, dfs)
    duration = pulse_duration(cfg.omega)
    psi_t = propagate(cnot_hamiltonian(cfg), psi0, duration, cfg.propagation)
    p0 = no_emission_probability(psi_t)
    final = conditional_state(psi_t)
    target = ideal_cnot_unitary(dfs).apply(psi0)

    separation = validate_separation(cfg)
    warnings = [
        f"Regime ratio {flag.value} = {separation.ratios[flag]:.3g} exceeds {cfg.threshold}" for flag in separation.flags
    ]
    for warning in warnings:
        logger.warning(warning)
    outcome = GateOutcome(
        final_state=final,
        p0=p0,
        fidelity=fidelity(target, final),
        duration=duration,
        separation=separation,
        warnings=warnings,
    )
    logger.debug(f"CNOT omega={cfg.omega}: P0={outcome.p0:.12f}, fidelity={outcome.fidelity:.12f}")
    return outcome


def effective_vs_full_comparison(psi0: StateVector, cfg: CnotConfig, n_samples: int = 64) -> ComparisonReport:
    """Norm distance between the renormalized full evolution and the effective one."""
    dfs = dfs_basis(cfg.space)
    _check_gate_input(psi0, dfs)
    h_full = cnot_hamiltonian(cfg)
    h_eff = effective_hamiltonian(h_full, dfs).embedded
    times = np.linspace(0.0, pulse_duration(cfg.omega), n_samples + 1)
    distances = []
    for t in times:
        full = conditional_state(propagate(h_full, psi0, t, cfg.propagation))
        effective = propagate(h_eff, psi0, t, cfg.propagation)
        distances.append((full - effective).norm())
    logger.debug(f"Effective vs full at omega={cfg.omega}: final distance {distances[-1]:.3e}")
    return ComparisonReport(times=times.tolist(), distances=distances)


def leakage_profile(
    psi0: StateVector, cfg: CnotConfig, n_samples: int = 64
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Population outside the DFS and mean photon number of the conditional state during the pulse."""
    dfs = dfs_basis(cfg.space)
    _check_gate_input(psi0, dfs)
    h = cnot_hamiltonian(cfg)
    complement = identity(cfg.space) - projector_from_states(dfs)
    photons = photon_number_operator(cfg.space)
    times = np.linspace(0.0, pulse_duration(cfg.omega), n_samples + 1)
    outside, photon_number = [], []
    for t in times:
        psi = conditional_state(propagate(h, psi0, t, cfg.propagation))
        outside.append(complement.apply(psi).squared_norm())
        photon_number.append(inner_product(psi, photons.apply(psi)).real)
    return times, np.array(outside), np.array(photon_number)


def optimal_rabi_frequency(omegas: Sequence[float], p0s: Sequence[float]) -> Tuple[float, bool]:
    """Rabi scale of maximal P0 on a sweep and whether it lies strictly inside the grid.

    An interior maximum is refined by a parabola through the three points
    around it in log(omega).
    """
    if len(omegas) != len(p0s) or not omegas:
        raise InvalidInputError("Need matching, non-empty omega and P0 sequences")
    order = np.argsort(omegas)
    x = np.log(np.asarray(omegas, dtype=float)[order])
    y = np.asarray(p0s, dtype=float)[order]
    k = int(np.argmax(y))
    if k == 0 or k == len(x) - 1:
        return float(np.exp(x[k])), False
    a, b, _ = np.polyfit(x[k - 1 : k + 2], y[k - 1 : k + 2], 2)
    peak = -b / (2 * a) if a < 0 else x[k]
    return float(np.exp(np.clip(peak, x[k - 1], x[k + 1]))), True


_NAME_PATTERN = re.compile(r"([+-]?)\s*(000|001|010|011|0a)")


def named_initial_state(name: str, space: SpaceConfig = SpaceConfig()) -> StateVector:
    """DFS state by name: '000', '001', '010', '011', '0a' or an equal-weight sum like '010+011'.

    Raises:
        InvalidInputError: On unknown names
    """
    cleaned = name.replace(" ", "")
    terms = _NAME_PATTERN.findall(cleaned)
    if not terms or "".join(sign + label for sign, label in terms).lstrip("+") != cleaned.lstrip("+"):
        raise InvalidInputError(f"Unknown initial state '{name}', expected labels from {DFS_NAMES} joined by + or -")
    basis = dict(zip(DFS_NAMES, dfs_basis(space)))
    states = [basis[label] for _, label in terms]
    signs = [-1.0 if sign == "-" else 1.0 for sign, _ in terms]
    psi = superposition(states, signs)
    return conditional_state(psi)


def dfs_amplitudes(psi: StateVector, space: Optional[SpaceConfig] = None) -> dict:
    """Overlaps <d|psi> with the named DFS basis states."""
    basis = dfs_basis(space or psi.space)
    return {name: inner_product(d, psi) for name, d in zip(DFS_NAMES, basis)}
