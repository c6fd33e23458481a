"""zeno core modules for states, models, dynamics and gates."""

__version__ = "0.1.0"

from . import data_types
from . import hilbert
from . import dynamics
from . import model
from . import gates
from . import utils

from .data_types import (
    InvalidInputError,
    UndefinedStateError,
    IntegratorInconsistencyError,
    PropagationError,
    PropagationMethod,
    SpaceConfig,
    BasisLabel,
    SystemParams,
    LaserPulse,
    VSystemParams,
    PropagationConfig,
    EmissionRecord,
)

from .hilbert import (
    StateVector,
    Operator,
    basis_index,
    basis_state,
    ket,
    projector_from_states,
)

from .model import (
    conditional_hamiltonian,
    laser_hamiltonian,
    dfs_basis,
    effective_hamiltonian,
    jump_channels,
)

from .dynamics import (
    propagate,
    no_emission_probability,
    emission_intensity,
    conditional_state,
    sample_first_emission_time,
    mean_first_emission_time,
    run_trajectory,
    non_dfs_decay_rates,
)

from .gates import (
    CnotConfig,
    GateOutcome,
    cnot_rabi_assignment,
    ideal_cnot_unitary,
    apply_cnot,
    validate_separation,
    effective_vs_full_comparison,
)

__all__ = [
    # Version
    "__version__",
    # Modules
    "data_types",
    "hilbert",
    "dynamics",
    "model",
    "gates",
    "utils",
    # Data types
    "InvalidInputError",
    "UndefinedStateError",
    "IntegratorInconsistencyError",
    "PropagationError",
    "PropagationMethod",
    "SpaceConfig",
    "BasisLabel",
    "SystemParams",
    "LaserPulse",
    "VSystemParams",
    "PropagationConfig",
    "EmissionRecord",
    # Hilbert space
    "StateVector",
    "Operator",
    "basis_index",
    "basis_state",
    "ket",
    "projector_from_states",
    # Model
    "conditional_hamiltonian",
    "laser_hamiltonian",
    "dfs_basis",
    "effective_hamiltonian",
    "jump_channels",
    # Dynamics
    "propagate",
    "no_emission_probability",
    "emission_intensity",
    "conditional_state",
    "sample_first_emission_time",
    "mean_first_emission_time",
    "run_trajectory",
    "non_dfs_decay_rates",
    # Gates
    "CnotConfig",
    "GateOutcome",
    "cnot_rabi_assignment",
    "ideal_cnot_unitary",
    "apply_cnot",
    "validate_separation",
    "effective_vs_full_comparison",
]
