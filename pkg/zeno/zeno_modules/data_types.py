"""Data types, enums and error classes shared by the zeno modules.

Conventions used throughout: hbar = 1, rates and Rabi frequencies in units
of the atom-cavity coupling g, times in units of 1/g.

Decay rates follow the conditional Hamiltonian literally: the anti-Hermitian
terms carry kappa and gamma_cav as *amplitude* rates, so a photon decays
in population at 2*kappa and an excited atom at 2*gamma_cav.
"""

import math
from enum import Enum
from typing import Optional, Tuple, List

from pydantic import BaseModel, ConfigDict, Field, field_validator


# ============================================================================
# Errors
# ============================================================================


class InvalidInputError(ValueError):
    """Raised for out-of-range labels, mismatched dimensions or bad states."""


class UndefinedStateError(InvalidInputError):
    """Raised when a conditional state cannot be normalized (zero vector)."""


class IntegratorInconsistencyError(RuntimeError):
    """Raised when a conditionally evolved state gains norm beyond tolerance."""


class PropagationError(RuntimeError):
    """Raised when the adaptive stepper fails to reach the requested time.

    Attributes:
        t_reached: Last time the stepper reached
        error_estimate: Norm distance to the exact exponential at t_reached
        solver_message: Message reported by the stepper
    """

    def __init__(self, message: str, t_reached: float, error_estimate: float, solver_message: str):
        super().__init__(message)
        self.t_reached = t_reached
        self.error_estimate = error_estimate
        self.solver_message = solver_message


# ============================================================================
# Enums
# ============================================================================


class PropagationMethod(str, Enum):
    """Backends available for conditional time evolution."""
    EXACT = "exact"  # scaling-and-squaring matrix exponential
    ADAPTIVE = "adaptive"  # embedded Runge-Kutta stepper (DOP853)


class RegimeFlag(str, Enum):
    """Frequency-scale separation ratios that can be flagged."""
    SPONTANEOUS = "gamma_cav/omega"
    CAVITY_DECAY = "omega/kappa"
    CAVITY_COUPLING = "omega*kappa/g^2"


# ============================================================================
# Hilbert space labels
# ============================================================================


class SpaceConfig(BaseModel):
    """Photon truncation of the cavity mode; two three-level atoms."""
    model_config = ConfigDict(frozen=True)

    n_max: int = Field(default=2, ge=1, description="Maximum cavity photon number")

    @property
    def dim(self) -> int:
        """Dimension of the composite space, (n_max + 1) * 9."""
        return (self.n_max + 1) * 9


class BasisLabel(BaseModel):
    """Product basis label |n, j1, j2>."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=0)
    j1: int = Field(ge=0, le=2)
    j2: int = Field(ge=0, le=2)

    def __str__(self) -> str:
        return f"|{self.n},{self.j1},{self.j2}>"


# ============================================================================
# Physical parameters
# ============================================================================


class SystemParams(BaseModel):
    """Atom-cavity rates entering the conditional Hamiltonian.

    Attributes:
        g: Atom-cavity coupling (1 by convention)
        kappa: Cavity field decay rate (amplitude rate)
        gamma_cav: In-cavity spontaneous emission rate (amplitude rate)
    """
    model_config = ConfigDict(frozen=True)

    g: float = Field(default=1.0, gt=0)
    kappa: float = Field(default=1.0, ge=0)
    gamma_cav: float = Field(default=0.0, ge=0)


class LaserPulse(BaseModel):
    """Complex Rabi frequencies omega[j][i - 1] of the j-2 transition of atom i.

    Attributes:
        omega: 2x2 nested tuple, outer index j in {0, 1}, inner index atom i - 1
        duration: Pulse length (>= 0)
    """
    model_config = ConfigDict(frozen=True)

    omega: Tuple[Tuple[complex, complex], Tuple[complex, complex]] = (
        (0j, 0j),
        (0j, 0j),
    )
    duration: float = Field(default=0.0, ge=0)

    @field_validator("omega")
    @classmethod
    def validate_finite(cls, v):
        """Reject NaN or infinite Rabi frequencies."""
        for row in v:
            for value in row:
                if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                    raise ValueError(f"Rabi frequencies must be finite, got {value}")
        return v

    def rabi(self, j: int, i: int) -> complex:
        """Rabi frequency of the j-2 transition of atom i (i in {1, 2})."""
        return self.omega[j][i - 1]


class VSystemParams(BaseModel):
    """Three-level V system driven on a weak (g-m) and strong (g-s) transition.

    Attributes:
        omega_w: Weak Rabi frequency (ground <-> metastable)
        omega_s: Strong Rabi frequency (ground <-> fast level)
        gamma_s: Amplitude decay rate of the fast level
    """
    model_config = ConfigDict(frozen=True)

    omega_w: complex = 0j
    omega_s: complex = 1 + 0j
    gamma_s: float = Field(default=10.0, ge=0)

    def dark_period_regime(self, threshold: float = 0.1) -> bool:
        """True when |omega_w| << |omega_s| << gamma_s, each ratio at most threshold."""
        if self.gamma_s <= 0:
            return False
        return abs(self.omega_w) <= threshold * abs(self.omega_s) and abs(self.omega_s) <= threshold * self.gamma_s


class PropagationConfig(BaseModel):
    """Settings for conditional time evolution."""
    model_config = ConfigDict(frozen=True)

    method: PropagationMethod = PropagationMethod.EXACT
    dt_initial: float = Field(default=0.01, gt=0)
    rel_tol: float = Field(default=1e-10, gt=0)
    abs_tol: float = Field(default=1e-12, gt=0)


# ============================================================================
# Results
# ============================================================================


class EmissionRecord(BaseModel):
    """First photon emission of one trajectory.

    time and channel are None when no photon was emitted within the horizon.
    """
    model_config = ConfigDict(frozen=True)

    trajectory_id: int = 0
    time: Optional[float] = None
    channel: Optional[int] = None
    t_max: float

    @property
    def emitted(self) -> bool:
        return self.time is not None


class SeparationReport(BaseModel):
    """Regime ratios of the frequency-scale separation condition."""
    model_config = ConfigDict(frozen=True)

    ratios: dict[RegimeFlag, float]
    threshold: float
    flags: List[RegimeFlag] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.flags


class MeanEmissionTime(BaseModel):
    """Deterministic mean first-emission time with its error estimate."""
    model_config = ConfigDict(frozen=True)

    value: float
    error: float
    t_max: float
    p0_at_horizon: float
    lower_bound: bool = False


__all__ = [
    "InvalidInputError",
    "UndefinedStateError",
    "IntegratorInconsistencyError",
    "PropagationError",
    "PropagationMethod",
    "RegimeFlag",
    "SpaceConfig",
    "BasisLabel",
    "SystemParams",
    "LaserPulse",
    "VSystemParams",
    "PropagationConfig",
    "EmissionRecord",
    "SeparationReport",
    "MeanEmissionTime",
]
