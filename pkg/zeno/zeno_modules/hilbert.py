"""States and operators of one truncated cavity mode and two three-level atoms.

Basis ordering is row-major over (n, j1, j2) with the photon number slowest:

    index = n * 9 + j1 * 3 + j2

so the zero-photon block (which contains every decoherence-free state) is the
leading 9 x 9 sub-matrix of every operator. All matrices are dense; the full
space has at most a few dozen dimensions.

Example:
    from zeno.zeno_modules.hilbert import basis_state, annihilation_operator

    space = SpaceConfig(n_max=2)
    b = annihilation_operator(space)
    psi = b.apply(basis_state(BasisLabel(n=2, j1=0, j2=0), space))
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .data_types import BasisLabel, InvalidInputError, SpaceConfig

logger = logging.getLogger(__name__)

N_LEVELS = 3
ATOM_BLOCK = N_LEVELS * N_LEVELS

# Orthonormality tolerance for projector construction
ORTHONORMAL_TOL = 1e-10

Scalar = Union[int, float, complex]


# ============================================================================
# State and operator containers
# ============================================================================


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over the product basis.

    space is None for stand-alone model spaces (the three-level V system);
    the dimension is then taken from the amplitudes.
    """

    amplitudes: np.ndarray
    space: Optional[SpaceConfig] = None

    # numpy scalars defer to __rmul__
    __array_ufunc__ = None

    def __post_init__(self):
        amplitudes = _frozen(self.amplitudes)
        if amplitudes.ndim != 1:
            raise InvalidInputError(f"State amplitudes must be 1-D, got shape {amplitudes.shape}")
        if self.space is not None and amplitudes.shape[0] != self.space.dim:
            raise InvalidInputError(
                f"State has {amplitudes.shape[0]} amplitudes, space dimension is {self.space.dim}"
            )
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def squared_norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def amplitude(self, label: BasisLabel) -> complex:
        """Amplitude on a single basis label."""
        return complex(self.amplitudes[basis_index(label, self._require_space())])

    def with_amplitudes(self, amplitudes: np.ndarray) -> "StateVector":
        return StateVector(amplitudes, self.space)

    def _require_space(self) -> SpaceConfig:
        if self.space is None:
            raise InvalidInputError("State is not attached to a cavity space")
        return self.space

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same_dim(self.dim, other.dim)
        return self.with_amplitudes(self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_same_dim(self.dim, other.dim)
        return self.with_amplitudes(self.amplitudes - other.amplitudes)

    def __mul__(self, scalar: Scalar) -> "StateVector":
        return self.with_amplitudes(scalar * self.amplitudes)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Scalar) -> "StateVector":
        return self.with_amplitudes(self.amplitudes / scalar)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix acting on a StateVector space."""

    entries: np.ndarray
    space: Optional[SpaceConfig] = None

    __array_ufunc__ = None

    def __post_init__(self):
        entries = _frozen(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidInputError(f"Operator must be square, got shape {entries.shape}")
        if self.space is not None and entries.shape[0] != self.space.dim:
            raise InvalidInputError(
                f"Operator dimension {entries.shape[0]} does not match space dimension {self.space.dim}"
            )
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def with_entries(self, entries: np.ndarray) -> "Operator":
        return Operator(entries, self.space)

    def apply(self, psi: StateVector) -> StateVector:
        _check_same_dim(self.dim, psi.dim)
        return StateVector(self.entries @ psi.amplitudes, psi.space)

    def dagger(self) -> "Operator":
        return self.with_entries(self.entries.conj().T)

    def hermitian_part(self) -> "Operator":
        """(O + O^dagger) / 2."""
        return self.with_entries((self.entries + self.entries.conj().T) / 2)

    def anti_hermitian_part(self) -> "Operator":
        """(O - O^dagger) / 2."""
        return self.with_entries((self.entries - self.entries.conj().T) / 2)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return self.apply(other)
        _check_same_dim(self.dim, other.dim)
        return self.with_entries(self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_dim(self.dim, other.dim)
        return self.with_entries(self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_dim(self.dim, other.dim)
        return self.with_entries(self.entries - other.entries)

    def __mul__(self, scalar: Scalar) -> "Operator":
        return self.with_entries(scalar * self.entries)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return self.with_entries(-self.entries)


class JumpChannel(BaseModel):
    """Collapse operator with its rate folded in, c = sqrt(2 * rate) * transition."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    operator: Operator
    label: str = Field(min_length=1)
    rate_absorbed: bool = True


def _check_same_dim(a: int, b: int) -> None:
    if a != b:
        raise InvalidInputError(f"Dimension mismatch: {a} vs {b}")


# ============================================================================
# Basis indexing
# ============================================================================


def basis_index(label: BasisLabel, space: SpaceConfig) -> int:
    """Flat index of |n, j1, j2> in the row-major (n, j1, j2) ordering.

    Raises:
        InvalidInputError: If the photon number exceeds n_max
    """
    if label.n > space.n_max:
        raise InvalidInputError(f"Photon number {label.n} exceeds n_max={space.n_max}")
    return label.n * ATOM_BLOCK + label.j1 * N_LEVELS + label.j2


def basis_label(index: int, space: SpaceConfig) -> BasisLabel:
    """Inverse of basis_index."""
    if not 0 <= index < space.dim:
        raise InvalidInputError(f"Index {index} outside [0, {space.dim})")
    n, rest = divmod(index, ATOM_BLOCK)
    j1, j2 = divmod(rest, N_LEVELS)
    return BasisLabel(n=n, j1=j1, j2=j2)


def make_label(n: int, j1: int, j2: int) -> BasisLabel:
    """Build a BasisLabel, turning pydantic range errors into input errors."""
    if n < 0 or not (0 <= j1 < N_LEVELS and 0 <= j2 < N_LEVELS):
        raise InvalidInputError(f"Invalid basis label ({n}, {j1}, {j2})")
    return BasisLabel(n=n, j1=j1, j2=j2)


def basis_state(label: BasisLabel, space: SpaceConfig) -> StateVector:
    amplitudes = np.zeros(space.dim, dtype=complex)
    amplitudes[basis_index(label, space)] = 1.0
    return StateVector(amplitudes, space)


def ket(n: int, j1: int, j2: int, space: SpaceConfig) -> StateVector:
    """Shorthand for basis_state(|n, j1, j2>)."""
    return basis_state(make_label(n, j1, j2), space)


def superposition(states: Sequence[StateVector], coefficients: Sequence[Scalar]) -> StateVector:
    if len(states) != len(coefficients) or not states:
        raise InvalidInputError("Need one coefficient per state and at least one state")
    amplitudes = sum(c * s.amplitudes for s, c in zip(states, coefficients))
    return StateVector(amplitudes, states[0].space)


# ============================================================================
# Operator assembly
# ============================================================================


def _lift(cavity: np.ndarray, atom1: np.ndarray, atom2: np.ndarray) -> np.ndarray:
    return np.kron(cavity, np.kron(atom1, atom2))


def identity(space: SpaceConfig) -> Operator:
    return Operator(np.eye(space.dim, dtype=complex), space)


def zero_operator(space: SpaceConfig) -> Operator:
    return Operator(np.zeros((space.dim, space.dim), dtype=complex), space)


def annihilation_operator(space: SpaceConfig) -> Operator:
    """Cavity photon annihilation b, b|n phi> = sqrt(n) |n-1 phi>."""
    cavity = np.diag(np.sqrt(np.arange(1, space.n_max + 1)), k=1).astype(complex)
    return Operator(_lift(cavity, np.eye(N_LEVELS), np.eye(N_LEVELS)), space)


def photon_number_operator(space: SpaceConfig) -> Operator:
    b = annihilation_operator(space)
    return b.dagger() @ b


def level_transition(j: int, k: int, n_levels: int = N_LEVELS) -> np.ndarray:
    """|j><k| on a single n-level system."""
    if not (0 <= j < n_levels and 0 <= k < n_levels):
        raise InvalidInputError(f"Levels ({j}, {k}) outside [0, {n_levels})")
    matrix = np.zeros((n_levels, n_levels), dtype=complex)
    matrix[j, k] = 1.0
    return matrix


def atomic_transition(i: int, j: int, k: int, space: SpaceConfig) -> Operator:
    """|j>_i<k| on atom i, identity on the other atom and the cavity.

    Raises:
        InvalidInputError: If i is not 1 or 2, or a level is outside {0, 1, 2}
    """
    if i not in (1, 2):
        raise InvalidInputError(f"Atom index must be 1 or 2, got {i}")
    sigma = level_transition(j, k)
    cavity = np.eye(space.n_max + 1)
    if i == 1:
        entries = _lift(cavity, sigma, np.eye(N_LEVELS))
    else:
        entries = _lift(cavity, np.eye(N_LEVELS), sigma)
    return Operator(entries, space)


def lowering_operator(space: SpaceConfig) -> Operator:
    """Collective J_- = sum_i |1>_i<2|."""
    return atomic_transition(1, 1, 2, space) + atomic_transition(2, 1, 2, space)


def excited_population_operator(space: SpaceConfig) -> Operator:
    """sum_i |2>_i<2|."""
    return atomic_transition(1, 2, 2, space) + atomic_transition(2, 2, 2, space)


# ============================================================================
# Inner products and projectors
# ============================================================================


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument.

    Raises:
        InvalidInputError: On dimension mismatch
    """
    _check_same_dim(a.dim, b.dim)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation(op: Operator, psi: StateVector) -> complex:
    """<psi|O|psi> (not divided by the norm)."""
    return inner_product(psi, op.apply(psi))


def projector_from_states(states: Sequence[StateVector], tol: float = ORTHONORMAL_TOL) -> Operator:
    """Orthogonal projector onto the span of orthonormal states.

    Raises:
        InvalidInputError: If the states are empty or not orthonormal within tol
    """
    if not states:
        raise InvalidInputError("Need at least one state to build a projector")
    columns = np.column_stack([s.amplitudes for s in states])
    gram = columns.conj().T @ columns
    deviation = float(np.max(np.abs(gram - np.eye(len(states)))))
    if deviation > tol:
        raise InvalidInputError(
            f"States are not orthonormal: max |<a|b> - delta_ab| = {deviation:.3e} > {tol:.1e}"
        )
    logger.debug(f"Projector of rank {len(states)} (orthonormality deviation {deviation:.2e})")
    return Operator(columns @ columns.conj().T, states[0].space)
