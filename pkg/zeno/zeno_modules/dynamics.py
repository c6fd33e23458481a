"""Conditional (no-emission) time evolution and quantum-jump statistics.

The conditional state |psi0(t)> = exp(-i H t)|psi> has a squared norm equal to
the probability P0(t) that no photon has been emitted up to t. This module
provides:

- propagate: exact dense exponential or adaptive DOP853 stepping
- no_emission_probability / emission_intensity / conditional_state
- NoEmissionClock: cached checkpoint grid of the conditional state, used for
  waiting-time sampling, deterministic quadrature of the mean emission time
  and trajectory segments
- sample_first_emission_time / sample_emission_times: waiting-time unraveling
- mean_first_emission_time: integral of P0 over [0, infinity)
- run_trajectory / run_trajectories: jump trajectories with resets c psi / |c psi|
- non_dfs_decay_rates: decay spectrum of the complement of the DFS

Every trajectory owns a counter-based Philox generator derived from
(seed, trajectory_id), so ensembles replay bit-identically whatever the number
of worker threads.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import simpson, solve_ivp
from scipy.linalg import eig, expm, null_space, solve
from scipy.optimize import brentq

from .data_types import (
    EmissionRecord,
    IntegratorInconsistencyError,
    InvalidInputError,
    MeanEmissionTime,
    PropagationConfig,
    PropagationError,
    PropagationMethod,
    SystemParams,
    UndefinedStateError,
)
from .hilbert import JumpChannel, Operator, StateVector
from .utils import ordered_map

logger = logging.getLogger(__name__)

# Squared norms above 1 + NORM_TOL signal an integrator problem
NORM_TOL = 1e-8
# Modal weights below MODE_WEIGHT_RTOL (relative), or below the round-off of
# the eigenvector solve, are ignored when looking for the slowest decay
MODE_WEIGHT_RTOL = 1e-8
MODE_ROUNDOFF_FACTOR = 100.0
# Rates below this count as dark (non-decaying)
DARK_RATE_TOL = 1e-12
# P0 left at the horizon above this makes a mean a lower bound
LOWER_BOUND_P0 = 1e-3


# ============================================================================
# Propagation
# ============================================================================


def propagator(h: Operator, t: float) -> np.ndarray:
    """exp(-i H t) as a dense matrix."""
    return expm(-1j * t * h.entries)


def propagate(h: Operator, psi0: StateVector, t: float, cfg: PropagationConfig = PropagationConfig()) -> StateVector:
    """Unnormalized conditional state exp(-i H t) psi0.

    Raises:
        InvalidInputError: If t < 0 or dimensions differ
        PropagationError: If the adaptive stepper fails
    """
    if t < 0:
        raise InvalidInputError(f"Propagation time must be >= 0, got {t}")
    if h.dim != psi0.dim:
        raise InvalidInputError(f"Dimension mismatch: operator {h.dim} vs state {psi0.dim}")
    if t == 0:
        return psi0

    if cfg.method == PropagationMethod.EXACT:
        return psi0.with_amplitudes(propagator(h, t) @ psi0.amplitudes)

    matrix = -1j * h.entries
    solution = solve_ivp(
        lambda _, y: matrix @ y,
        (0.0, t),
        psi0.amplitudes,
        method="DOP853",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        first_step=min(cfg.dt_initial, t),
    )
    if not solution.success:
        t_reached = float(solution.t[-1])
        reference = propagator(h, t_reached) @ psi0.amplitudes
        error = float(np.linalg.norm(solution.y[:, -1] - reference))
        raise PropagationError(
            f"Adaptive stepper stopped at t={t_reached} of {t} (error estimate {error:.3e}): {solution.message}",
            t_reached=t_reached,
            error_estimate=error,
            solver_message=solution.message,
        )
    logger.debug(f"DOP853 reached t={t} in {solution.nfev} evaluations")
    return psi0.with_amplitudes(solution.y[:, -1])


def no_emission_probability(psi_t: StateVector, tol: float = NORM_TOL) -> float:
    """Squared norm of the conditional state, clamped to [0, 1].

    Raises:
        IntegratorInconsistencyError: If the squared norm exceeds 1 + tol
    """
    p0 = psi_t.squared_norm()
    if p0 > 1.0 + tol:
        raise IntegratorInconsistencyError(f"Squared norm {p0!r} exceeds 1 + {tol}")
    return min(max(p0, 0.0), 1.0)


def emission_intensity(h: Operator, psi: StateVector) -> float:
    """Emission probability density i <psi|H - H^dagger|psi> (>= 0)."""
    difference = h.entries - h.entries.conj().T
    value = (1j * np.vdot(psi.amplitudes, difference @ psi.amplitudes)).real
    return float(max(value, 0.0))


def conditional_state(psi_t: StateVector) -> StateVector:
    """The conditional state normalized to unity.

    Raises:
        UndefinedStateError: If psi_t is the zero vector
    """
    norm = psi_t.norm()
    if norm == 0.0:
        raise UndefinedStateError("Cannot normalize the zero vector")
    return psi_t / norm


def slowest_decay_rate(h: Operator, psi0: StateVector) -> float:
    """Smallest population decay rate -2 Im(lambda) among modes psi0 overlaps.

    Returns 0.0 when psi0 has weight on a non-decaying mode. The expansion
    coefficients carry an error of order eps * cond(V), so weights below that
    level are treated as zero.
    """
    eigenvalues, vectors = eig(h.entries)
    weights = np.abs(solve(vectors, psi0.amplitudes))
    rates = -2.0 * eigenvalues.imag
    roundoff = MODE_ROUNDOFF_FACTOR * np.finfo(float).eps * np.linalg.cond(vectors)
    cutoff = max(MODE_WEIGHT_RTOL, roundoff) * max(np.max(weights), 1.0)
    relevant = rates[weights > cutoff]
    if relevant.size == 0:
        return 0.0
    slowest = float(np.min(relevant))
    return slowest if slowest > DARK_RATE_TOL else 0.0


# ============================================================================
# No-emission clock
# ============================================================================


class NoEmissionClock:
    """Conditional evolution of one initial state sampled on a uniform grid.

    The grid holds the unnormalized state at t_k = k * t_max / n_checkpoints,
    generated by repeated application of a single step propagator. States and
    P0 at arbitrary times are obtained by exact propagation from the nearest
    earlier checkpoint. Instances are read-only after construction and can be
    shared between threads.
    """

    def __init__(self, h: Operator, psi0: StateVector, t_max: float, n_checkpoints: int = 1024):
        if t_max <= 0:
            raise InvalidInputError(f"Clock horizon must be positive, got {t_max}")
        if n_checkpoints < 2:
            raise InvalidInputError(f"Need at least 2 checkpoints, got {n_checkpoints}")
        self.h = h
        self.psi0 = psi0
        self.t_max = float(t_max)
        self.n_checkpoints = n_checkpoints
        self.dt = self.t_max / n_checkpoints
        self.times = np.linspace(0.0, self.t_max, n_checkpoints + 1)

        step = propagator(h, self.dt)
        states = np.empty((n_checkpoints + 1, psi0.dim), dtype=complex)
        states[0] = psi0.amplitudes
        for k in range(n_checkpoints):
            states[k + 1] = step @ states[k]
        states.setflags(write=False)
        self._states = states
        p0 = np.einsum("ij,ij->i", states.conj(), states).real
        # enforce monotonicity against round-off for bracketing
        self.p0 = np.minimum.accumulate(np.clip(p0, 0.0, 1.0))
        self.p0.setflags(write=False)
        logger.debug(f"Clock built: t_max={self.t_max:.6g}, {n_checkpoints} checkpoints, P0(t_max)={self.p0[-1]:.3e}")

    def state_at(self, t: float) -> StateVector:
        """Unnormalized conditional state at time t >= 0."""
        if t < 0:
            raise InvalidInputError(f"Time must be >= 0, got {t}")
        k = min(int(t // self.dt), self.n_checkpoints)
        remainder = t - self.times[k]
        amplitudes = self._states[k]
        if remainder > 0:
            amplitudes = propagator(self.h, remainder) @ amplitudes
        return self.psi0.with_amplitudes(amplitudes)

    def p0_at(self, t: float) -> float:
        return no_emission_probability(self.state_at(t))

    def first_crossing(self, u: float) -> Optional[float]:
        """Earliest time with P0(t) = u, or None if P0(t_max) > u."""
        if self.p0[-1] > u:
            return None
        k = int(np.argmax(self.p0 <= u))
        if k == 0:
            return 0.0
        lo, hi = self.times[k - 1], self.times[k]
        return float(brentq(lambda t: self.p0_at(t) - u, lo, hi, xtol=1e-14 * hi, rtol=1e-10))

    def integral(self, every: int = 1) -> float:
        """Composite Simpson integral of P0 on the checkpoint grid."""
        return float(simpson(self.p0[::every], x=self.times[::every]))


# ============================================================================
# Waiting-time statistics
# ============================================================================


def make_trajectory_rng(seed: int, trajectory_id: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator for one trajectory.

    stream separates ensembles that share a seed, e.g. the points of a sweep.
    """
    sequence = np.random.SeedSequence([seed, trajectory_id], spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(sequence))


def _draw_uniform(rng: np.random.Generator) -> float:
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def _channel_weights(channels: Sequence[JumpChannel], psi: StateVector) -> np.ndarray:
    weights = np.array([np.vdot(c.operator.entries @ psi.amplitudes, c.operator.entries @ psi.amplitudes).real for c in channels])
    return np.clip(weights, 0.0, None)


def _choose_channel(channels: Sequence[JumpChannel], psi: StateVector, rng: np.random.Generator) -> Optional[int]:
    if not channels:
        return None
    weights = _channel_weights(channels, psi)
    total = weights.sum()
    if total <= 0:
        return None
    return int(rng.choice(len(channels), p=weights / total))


def default_horizon(h: Operator, psi0: StateVector, factor: float = 50.0, fallback: float = 100.0) -> float:
    """factor / (slowest decay rate), or fallback for dark initial states."""
    rate = slowest_decay_rate(h, psi0)
    return factor / rate if rate > 0 else fallback


def sample_first_emission_time(
    h: Operator,
    psi0: StateVector,
    rng: np.random.Generator,
    t_max: Optional[float] = None,
    channels: Sequence[JumpChannel] = (),
    trajectory_id: int = 0,
    clock: Optional[NoEmissionClock] = None,
) -> EmissionRecord:
    """Draw u in (0, 1) and solve P0(t) = u by bracketing and root refinement.

    The emitting channel is drawn with weights <psi(t)|c^dagger c|psi(t)>.
    A record with time None means no emission within the horizon.
    """
    if clock is None:
        clock = NoEmissionClock(h, psi0, t_max if t_max is not None else default_horizon(h, psi0))
    u = _draw_uniform(rng)
    t = clock.first_crossing(u)
    if t is None:
        return EmissionRecord(trajectory_id=trajectory_id, t_max=clock.t_max)
    channel = _choose_channel(channels, clock.state_at(t), rng)
    return EmissionRecord(trajectory_id=trajectory_id, time=t, channel=channel, t_max=clock.t_max)


class TrajectoryConfig(BaseModel):
    """Seeded ensemble settings; identical configs replay identical records."""

    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0, lt=2**64)
    n_trajectories: int = Field(ge=1)
    t_max: float = Field(gt=0)
    stream: int = Field(default=0, ge=0)
    channels: Tuple[JumpChannel, ...] = ()


def sample_emission_times(h: Operator, psi0: StateVector, cfg: TrajectoryConfig, jobs: int = 1) -> List[EmissionRecord]:
    """First-emission records for cfg.n_trajectories draws, sorted by trajectory id."""
    clock = NoEmissionClock(h, psi0, cfg.t_max)

    def draw(trajectory_id: int) -> EmissionRecord:
        rng = make_trajectory_rng(cfg.seed, trajectory_id, cfg.stream)
        return sample_first_emission_time(
            h, psi0, rng, channels=cfg.channels, trajectory_id=trajectory_id, clock=clock
        )

    records = ordered_map(draw, range(cfg.n_trajectories), jobs)
    emitted = sum(r.emitted for r in records)
    logger.info(f"Sampled {len(records)} waiting times ({emitted} emissions within t_max={cfg.t_max:.6g})")
    return sorted(records, key=lambda r: r.trajectory_id)


def emission_time_statistics(records: Sequence[EmissionRecord]) -> Tuple[float, float, int]:
    """Sample mean, standard error and count of the emitted first-emission times."""
    times = np.array([r.time for r in records if r.emitted])
    if times.size == 0:
        return math.inf, math.inf, 0
    stderr = float(times.std(ddof=1) / np.sqrt(times.size)) if times.size > 1 else math.inf
    return float(times.mean()), stderr, int(times.size)


def mean_first_emission_time(
    h: Operator,
    psi0: StateVector,
    t_max: Optional[float] = None,
    rel_tol: float = 1e-6,
    n_checkpoints: int = 1024,
    max_checkpoints: int = 2**18,
) -> MeanEmissionTime:
    """Deterministic integral of P0 over [0, infinity).

    Composite Simpson on the checkpoint grid with resolution doubling until
    successive estimates agree to rel_tol, plus the tail P0(t_max) / r_min from
    the slowest decay rate psi0 overlaps. Dark components or a large P0 left at
    the horizon flag the value as a lower bound.
    """
    if t_max is None:
        t_max = default_horizon(h, psi0)
    rate = slowest_decay_rate(h, psi0)
    n = n_checkpoints
    while True:
        clock = NoEmissionClock(h, psi0, t_max, n)
        fine, coarse = clock.integral(), clock.integral(every=2)
        quadrature_error = abs(fine - coarse) / 15.0
        if quadrature_error <= rel_tol * abs(fine) or 2 * n > max_checkpoints:
            break
        n *= 2

    p0_end = float(clock.p0[-1])
    lower_bound = rate <= 0.0 or p0_end > LOWER_BOUND_P0
    tail = p0_end / rate if rate > 0 else 0.0
    if lower_bound:
        logger.warning(
            f"Mean emission time is a lower bound: P0({t_max:.6g}) = {p0_end:.3e}, slowest rate {rate:.3e}"
        )
    logger.debug(f"Mean emission time quadrature: {n} checkpoints, error {quadrature_error:.3e}, tail {tail:.3e}")
    return MeanEmissionTime(
        value=fine + tail,
        error=quadrature_error + tail,
        t_max=t_max,
        p0_at_horizon=p0_end,
        lower_bound=lower_bound,
    )


def channel_emission_probabilities(
    h: Operator,
    psi0: StateVector,
    channels: Sequence[JumpChannel],
    t: float,
    n_checkpoints: int = 1024,
) -> List[float]:
    """Probability that the first emission in [0, t] comes from each channel.

    Integrates <psi0(s)|c^dagger c|psi0(s)> over the conditional evolution; the
    values add up to 1 - P0(t) when the channels match h.
    """
    clock = NoEmissionClock(h, psi0, t, n_checkpoints)
    probabilities = []
    for channel in channels:
        jumped = clock._states @ channel.operator.entries.T
        density = np.einsum("ij,ij->i", jumped.conj(), jumped).real
        probabilities.append(float(simpson(density, x=clock.times)))
    return probabilities


# ============================================================================
# Jump trajectories
# ============================================================================


class TrajectoryRecord(BaseModel):
    """Piecewise record: conditional segments separated by jumps.

    segment_starts[k] is the (time, normalized state) at which segment k begins;
    jumps[k] = (time, channel index) ends segment k.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    trajectory_id: int = Field(ge=0)
    h: Operator
    t_max: float = Field(gt=0)
    segment_starts: Tuple[Tuple[float, StateVector], ...] = Field(min_length=1)
    jumps: Tuple[Tuple[float, int], ...] = ()

    @property
    def emission_times(self) -> List[float]:
        return [t for t, _ in self.jumps]

    def state_at(self, t: float) -> StateVector:
        """Normalized conditional state at time t."""
        if not 0 <= t <= self.t_max:
            raise InvalidInputError(f"Time {t} outside [0, {self.t_max}]")
        start, psi = self.segment_starts[0]
        for segment_start, segment_psi in self.segment_starts:
            if segment_start > t:
                break
            start, psi = segment_start, segment_psi
        return conditional_state(propagate(self.h, psi, t - start))


def check_channels(h: Operator, channels: Sequence[JumpChannel], tol: float = 1e-12) -> None:
    """Verify -(i/2) sum c^dagger c equals the anti-Hermitian part of h.

    Raises:
        InvalidInputError: If the channels do not reproduce h's decay terms
    """
    decay = np.zeros_like(h.entries)
    for channel in channels:
        decay = decay + channel.operator.entries.conj().T @ channel.operator.entries
    mismatch = float(np.max(np.abs(h.anti_hermitian_part().entries + 0.5j * decay)))
    if mismatch > tol:
        raise InvalidInputError(f"Jump channels do not match the conditional Hamiltonian (mismatch {mismatch:.3e})")


def run_trajectory(
    h: Operator,
    psi0: StateVector,
    channels: Sequence[JumpChannel],
    rng: np.random.Generator,
    t_max: float,
    trajectory_id: int = 0,
    n_checkpoints: int = 256,
) -> TrajectoryRecord:
    """Alternate conditional evolution and jumps psi -> c psi / |c psi| up to t_max."""
    check_channels(h, channels)
    t = 0.0
    psi = conditional_state(psi0)
    starts = [(t, psi)]
    jumps = []
    while t < t_max:
        clock = NoEmissionClock(h, psi, t_max - t, n_checkpoints)
        waiting = clock.first_crossing(_draw_uniform(rng))
        if waiting is None:
            break
        pre_jump = clock.state_at(waiting)
        channel = _choose_channel(channels, pre_jump, rng)
        if channel is None:
            break
        t = t + waiting
        psi = conditional_state(channels[channel].operator.apply(pre_jump))
        jumps.append((t, channel))
        starts.append((t, psi))
    logger.debug(f"Trajectory {trajectory_id}: {len(jumps)} jumps up to t={t_max:.6g}")
    return TrajectoryRecord(
        trajectory_id=trajectory_id,
        h=h,
        t_max=t_max,
        segment_starts=tuple(starts),
        jumps=tuple(jumps),
    )


def run_trajectories(h: Operator, psi0: StateVector, cfg: TrajectoryConfig, jobs: int = 1) -> List[TrajectoryRecord]:
    """Ensemble of jump trajectories keyed by trajectory id."""

    def one(trajectory_id: int) -> TrajectoryRecord:
        rng = make_trajectory_rng(cfg.seed, trajectory_id, cfg.stream)
        return run_trajectory(h, psi0, cfg.channels, rng, cfg.t_max, trajectory_id)

    return ordered_map(one, range(cfg.n_trajectories), jobs)


def ensemble_population(
    records: Sequence[TrajectoryRecord], projector: Operator, times: Sequence[float]
) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of <P> over trajectories at each time."""
    values = np.array(
        [[np.vdot(psi.amplitudes, projector.entries @ psi.amplitudes).real for psi in (r.state_at(t) for t in times)] for r in records]
    )
    mean = values.mean(axis=0)
    stderr = values.std(axis=0, ddof=1) / np.sqrt(len(records)) if len(records) > 1 else np.full(len(times), np.inf)
    return mean, stderr


# ============================================================================
# Decay spectrum outside the DFS
# ============================================================================


def non_dfs_decay_rates(h: Operator, dfs: Sequence[StateVector]) -> List[float]:
    """Population decay rates -2 Im(lambda) of h restricted to the DFS complement."""
    columns = np.column_stack([s.amplitudes for s in dfs])
    complement = null_space(columns.conj().T)
    restricted = complement.conj().T @ h.entries @ complement
    eigenvalues = np.linalg.eigvals(restricted)
    rates = sorted(float(r) for r in -2.0 * eigenvalues.imag)
    logger.debug(f"Complement dimension {complement.shape[1]}, slowest rate {rates[0] if rates else float('nan'):.6g}")
    return rates


def measurement_time_estimate(rates: Sequence[float], params: SystemParams) -> dict:
    """Delta T = 1 / (smallest positive rate) with the 1/kappa and kappa/g^2 anchors."""
    positive = [r for r in rates if r > DARK_RATE_TOL]
    delta_t = 1.0 / min(positive) if positive else math.inf
    return {
        "delta_t": delta_t,
        "inverse_kappa": 1.0 / params.kappa if params.kappa > 0 else math.inf,
        "kappa_over_g2": params.kappa / params.g**2,
    }
