"""Tests for conditional evolution, waiting-time sampling and jump trajectories.

Tests cover:
- Exact and adaptive propagation
- No-emission probability, emission intensity and renormalization
- The no-emission clock and first-emission sampling
- Deterministic mean emission time
- Jump trajectories and ensemble averages
- The decay spectrum outside the DFS
"""

from types import SimpleNamespace

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import random_state, single_photon_p0
from zeno.zeno_modules.data_types import (
    IntegratorInconsistencyError,
    InvalidInputError,
    PropagationConfig,
    PropagationError,
    PropagationMethod,
    SpaceConfig,
    SystemParams,
    UndefinedStateError,
)
from zeno.zeno_modules.dynamics import (
    NoEmissionClock,
    TrajectoryConfig,
    channel_emission_probabilities,
    conditional_state,
    emission_intensity,
    emission_time_statistics,
    ensemble_population,
    make_trajectory_rng,
    mean_first_emission_time,
    measurement_time_estimate,
    no_emission_probability,
    non_dfs_decay_rates,
    propagate,
    run_trajectories,
    run_trajectory,
    sample_emission_times,
    sample_first_emission_time,
    slowest_decay_rate,
)
from zeno.zeno_modules.gates import CnotConfig, cnot_hamiltonian, named_initial_state
from zeno.zeno_modules.hilbert import Operator, StateVector, ket, level_transition, photon_number_operator, superposition
from zeno.zeno_modules.model import (
    V_FAST,
    conditional_hamiltonian,
    dfs_basis,
    jump_channels,
    trapped_state,
    v_system_hamiltonian,
    v_system_jump_channel,
    v_system_state,
    v_system_steady_state,
)

ADAPTIVE = PropagationConfig(method=PropagationMethod.ADAPTIVE)


@pytest.fixture
def driven_hamiltonian(space):
    """Pulse with spontaneous emission switched on, so every term is active."""
    return cnot_hamiltonian(CnotConfig(omega=0.3, params=SystemParams(gamma_cav=0.01), space=space))


# ============================================================================
# Propagation Tests
# ============================================================================


@pytest.mark.unit
def test_propagate_zero_time_is_identity(space, params):
    """t = 0 returns the initial state."""
    psi = ket(1, 0, 0, space)
    assert propagate(conditional_hamiltonian(params, space), psi, 0.0) is psi


@pytest.mark.unit
def test_propagate_rejects_negative_time(space, params):
    """Backward propagation is an input error."""
    with pytest.raises(InvalidInputError):
        propagate(conditional_hamiltonian(params, space), ket(0, 0, 0, space), -1.0)


@pytest.mark.unit
@pytest.mark.parametrize("kappa", [0.5, 1.0])
@pytest.mark.parametrize("t", [0.1, 0.5, 2.0])
def test_single_photon_decay(space, kappa, t):
    """A lone photon with ground-state atoms decays as exp(-2 kappa t)."""
    h = conditional_hamiltonian(SystemParams(kappa=kappa), space)
    p0 = no_emission_probability(propagate(h, ket(1, 0, 0, space), t))
    assert p0 == pytest.approx(single_photon_p0(kappa, t), rel=1e-12)


@pytest.mark.unit
def test_dfs_states_are_stationary(space, params, dfs):
    """DFS states do not move under H_cond over t = 100."""
    h = conditional_hamiltonian(params, space)
    for psi in dfs:
        assert (propagate(h, psi, 100.0) - psi).norm() < 1e-10


@pytest.mark.unit
def test_adaptive_matches_exact(space, driven_hamiltonian):
    """DOP853 and the matrix exponential agree to 1e-8."""
    generator = np.random.default_rng(11)
    for t in (0.5, 2.0, 5.0):
        psi = random_state(space.dim, generator, space)
        exact = propagate(driven_hamiltonian, psi, t)
        adaptive = propagate(driven_hamiltonian, psi, t, ADAPTIVE)
        assert (exact - adaptive).norm() < 1e-8


@pytest.mark.unit
def test_semigroup_property(space, driven_hamiltonian):
    """Evolving for t1 then t2 equals evolving for t1 + t2."""
    psi = random_state(space.dim, np.random.default_rng(5), space)
    direct = propagate(driven_hamiltonian, psi, 3.5)
    stepped = propagate(driven_hamiltonian, propagate(driven_hamiltonian, psi, 1.25), 2.25)
    assert (direct - stepped).norm() < 1e-10


@pytest.mark.unit
def test_norm_never_increases(space, driven_hamiltonian):
    """||psi(t2)|| <= ||psi(t1)|| for t1 < t2 on random states and times."""
    generator = np.random.default_rng(21)
    for _ in range(200):
        psi = random_state(space.dim, generator, space)
        t1, t2 = np.sort(generator.uniform(0.0, 20.0, size=2))
        assert propagate(driven_hamiltonian, psi, t2).norm() <= propagate(driven_hamiltonian, psi, t1).norm() + 1e-10


@pytest.mark.unit
def test_adaptive_failure_reports_progress(space, driven_hamiltonian, mocker):
    """A stalled stepper raises PropagationError with the time reached."""
    psi = ket(0, 1, 0, space)
    stalled = SimpleNamespace(
        success=False,
        t=np.array([0.0, 0.5]),
        y=np.column_stack([psi.amplitudes, psi.amplitudes]),
        message="Required step size is less than spacing between numbers.",
        nfev=10,
    )
    mocker.patch("zeno.zeno_modules.dynamics.solve_ivp", return_value=stalled)
    with pytest.raises(PropagationError) as excinfo:
        propagate(driven_hamiltonian, psi, 2.0, ADAPTIVE)
    assert excinfo.value.t_reached == 0.5
    assert excinfo.value.error_estimate > 0
    assert "step size" in excinfo.value.solver_message


# ============================================================================
# Observable Tests
# ============================================================================


@pytest.mark.unit
def test_no_emission_probability_clamps_round_off(space):
    """Squared norms within tolerance of 1 are clamped, larger ones are errors."""
    amplitudes = np.zeros(space.dim, dtype=complex)
    amplitudes[0] = np.sqrt(1.0 + 1e-9)
    assert no_emission_probability(StateVector(amplitudes, space)) == 1.0
    amplitudes[0] = 1.001
    with pytest.raises(IntegratorInconsistencyError):
        no_emission_probability(StateVector(amplitudes, space))


@pytest.mark.unit
def test_emission_intensity_values(space):
    """Zero on the DFS, 2 kappa n on photon number states."""
    h = conditional_hamiltonian(SystemParams(kappa=0.7), space)
    assert emission_intensity(h, trapped_state(space)) <= 1e-14
    assert emission_intensity(h, ket(1, 0, 0, space)) == pytest.approx(1.4)
    assert emission_intensity(h, ket(2, 1, 1, space)) == pytest.approx(2.8)


@pytest.mark.unit
def test_emission_intensity_is_minus_dp0_dt(space):
    """A forward difference of P0 converges to I at first order."""
    kappa = 1.0
    h = conditional_hamiltonian(SystemParams(kappa=kappa), space)
    psi = superposition([ket(0, 1, 0, space), ket(1, 0, 0, space)], [1 / np.sqrt(2), 1 / np.sqrt(2)])
    intensity = emission_intensity(h, psi)
    assert intensity == pytest.approx(kappa)

    def error(delta):
        return abs((1.0 - no_emission_probability(propagate(h, psi, delta))) / delta - intensity)

    delta = 1e-3
    assert error(delta) < 2 * kappa**2 * delta
    assert 1.8 < error(delta) / error(delta / 2) < 2.2


@pytest.mark.unit
def test_conditional_state(space):
    """Renormalization keeps the direction; the zero vector is undefined."""
    psi = 0.5 * ket(0, 1, 0, space)
    normalized = conditional_state(psi)
    assert normalized.norm() == pytest.approx(1.0)
    np.testing.assert_allclose(normalized.amplitudes, ket(0, 1, 0, space).amplitudes)
    with pytest.raises(UndefinedStateError):
        conditional_state(0.0 * psi)


@pytest.mark.unit
def test_slowest_decay_rate(space, params):
    """Photon loss sets the rate of |1,0,0>; dark states give zero."""
    h = conditional_hamiltonian(params, space)
    assert slowest_decay_rate(h, ket(1, 0, 0, space)) == pytest.approx(2.0)
    assert slowest_decay_rate(h, ket(0, 1, 1, space)) == 0.0


@pytest.mark.unit
def test_slowest_decay_rate_ignores_round_off_weights(space):
    """A weak pulse from |010> decays at omega^2 / 4 although dark modes exist."""
    omega = 0.005
    h = cnot_hamiltonian(CnotConfig(omega=omega, space=space))
    assert slowest_decay_rate(h, named_initial_state("010", space)) == pytest.approx(omega**2 / 4, rel=0.05)


# ============================================================================
# No-emission Clock Tests
# ============================================================================


@pytest.mark.unit
def test_clock_between_checkpoints(space, params):
    """P0 off the grid comes from exact propagation."""
    h = conditional_hamiltonian(params, space)
    clock = NoEmissionClock(h, ket(1, 0, 0, space), t_max=5.0, n_checkpoints=16)
    for t in (0.0, 0.123, 2.5, 4.99, 5.0):
        assert clock.p0_at(t) == pytest.approx(single_photon_p0(1.0, t), rel=1e-11)


@pytest.mark.unit
def test_clock_first_crossing(space, params):
    """P0(t) = u is solved for t; u below P0(t_max) has no crossing."""
    h = conditional_hamiltonian(params, space)
    clock = NoEmissionClock(h, ket(1, 0, 0, space), t_max=5.0)
    for u in (0.9, 0.5, 0.01):
        assert clock.first_crossing(u) == pytest.approx(-np.log(u) / 2.0, rel=1e-9)
    assert clock.first_crossing(1e-6) is None


@pytest.mark.unit
def test_clock_rejects_bad_grid(space, params):
    """Horizon and checkpoint count are validated."""
    h = conditional_hamiltonian(params, space)
    with pytest.raises(InvalidInputError):
        NoEmissionClock(h, ket(1, 0, 0, space), t_max=0.0)
    with pytest.raises(InvalidInputError):
        NoEmissionClock(h, ket(1, 0, 0, space), t_max=1.0, n_checkpoints=1)


# ============================================================================
# Sampling Tests
# ============================================================================


@pytest.mark.unit
def test_trajectory_rng_is_counter_based():
    """The same (seed, id) replays the same stream; other ids differ."""
    a = make_trajectory_rng(7, 3).random(5)
    b = make_trajectory_rng(7, 3).random(5)
    c = make_trajectory_rng(7, 4).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


@pytest.mark.unit
def test_trajectory_rng_streams_differ():
    """Ensembles sharing a seed but not a stream draw different numbers."""
    a = make_trajectory_rng(7, 3, stream=0).random(5)
    b = make_trajectory_rng(7, 3, stream=1).random(5)
    np.testing.assert_array_equal(a, make_trajectory_rng(7, 3).random(5))
    assert not np.array_equal(a, b)


@pytest.mark.unit
def test_sampling_streams_give_independent_records(space, params):
    """Two sweep points with the same seed do not replay the same waiting times."""
    h = conditional_hamiltonian(params, space)
    psi = ket(0, 2, 2, space)
    first = sample_emission_times(h, psi, TrajectoryConfig(seed=99, n_trajectories=20, t_max=60.0, stream=0))
    second = sample_emission_times(h, psi, TrajectoryConfig(seed=99, n_trajectories=20, t_max=60.0, stream=1))
    assert [r.time for r in first] != [r.time for r in second]


@pytest.mark.unit
def test_dark_state_never_emits(space, params, rng):
    """A DFS state yields a no-emission record."""
    record = sample_first_emission_time(conditional_hamiltonian(params, space), trapped_state(space), rng)
    assert not record.emitted
    assert record.t_max == 100.0


@pytest.mark.unit
@pytest.mark.slow
def test_single_photon_waiting_time_mean():
    """10^4 draws: mean first-emission time of |1,0,0> is 1 / (2 kappa) within 3 standard errors."""
    space = SpaceConfig(n_max=1)
    kappa = 0.5
    h = conditional_hamiltonian(SystemParams(kappa=kappa), space)
    cfg = TrajectoryConfig(seed=2024, n_trajectories=10_000, t_max=50.0)
    mean, stderr, n = emission_time_statistics(sample_emission_times(h, ket(1, 0, 0, space), cfg))
    assert n == 10_000
    assert abs(mean - 1.0 / (2 * kappa)) < 3 * stderr


@pytest.mark.unit
def test_sampling_is_reproducible_across_workers(space, params):
    """Identical configs give identical records for any worker count."""
    h = conditional_hamiltonian(params, space)
    psi = ket(0, 2, 2, space)
    cfg = TrajectoryConfig(seed=99, n_trajectories=40, t_max=60.0, channels=tuple(jump_channels(params, space)))
    serial = sample_emission_times(h, psi, cfg, jobs=1)
    again = sample_emission_times(h, psi, cfg, jobs=1)
    threaded = sample_emission_times(h, psi, cfg, jobs=3)
    assert serial == again == threaded
    assert [r.trajectory_id for r in serial] == list(range(40))
    other = sample_emission_times(h, psi, TrajectoryConfig(seed=100, n_trajectories=40, t_max=60.0))
    assert [r.time for r in other] != [r.time for r in serial]


@pytest.mark.unit
def test_channel_attribution(space):
    """Without spontaneous emission every photon leaves through the cavity."""
    params = SystemParams(kappa=1.0)
    h = conditional_hamiltonian(params, space)
    cfg = TrajectoryConfig(seed=1, n_trajectories=20, t_max=60.0, channels=tuple(jump_channels(params, space)))
    records = sample_emission_times(h, ket(0, 2, 0, space), cfg)
    assert all(r.channel == 0 for r in records if r.emitted)


@pytest.mark.unit
def test_trajectory_config_validation():
    """Ensemble settings are validated."""
    with pytest.raises(ValidationError):
        TrajectoryConfig(seed=1, n_trajectories=0, t_max=1.0)
    with pytest.raises(ValidationError):
        TrajectoryConfig(seed=1, n_trajectories=1, t_max=0.0)
    with pytest.raises(ValidationError):
        TrajectoryConfig(seed=-1, n_trajectories=1, t_max=1.0)
    with pytest.raises(ValidationError):
        TrajectoryConfig(seed=2**64, n_trajectories=1, t_max=1.0)
    with pytest.raises(ValidationError):
        TrajectoryConfig(seed=1, n_trajectories=1, t_max=1.0, stream=-1)
    with pytest.raises(ValidationError):
        TrajectoryConfig(seed=1, n_trajectories=1, t_max=1.0).seed = 2


# ============================================================================
# Mean Emission Time Tests
# ============================================================================


@pytest.mark.unit
def test_mean_emission_time_single_photon(space):
    """Quadrature gives 1 / (2 kappa) for |1,0,0>."""
    h = conditional_hamiltonian(SystemParams(kappa=1.0), space)
    mean = mean_first_emission_time(h, ket(1, 0, 0, space))
    assert mean.value == pytest.approx(0.5, rel=1e-6)
    assert not mean.lower_bound


@pytest.mark.unit
def test_mean_emission_time_dark_state_is_lower_bound(space, params):
    """A dark initial state cannot give a finite mean."""
    mean = mean_first_emission_time(conditional_hamiltonian(params, space), ket(0, 0, 1, space))
    assert mean.lower_bound
    assert mean.p0_at_horizon == pytest.approx(1.0)


@pytest.mark.integration
def test_mean_emission_time_weak_pulse_uses_slow_horizon(space):
    """Without an explicit horizon the weak-pulse mean is finite and of order 4 / omega^2."""
    omega = 0.005
    h = cnot_hamiltonian(CnotConfig(omega=omega, space=space))
    mean = mean_first_emission_time(h, named_initial_state("010", space))
    assert not mean.lower_bound
    assert mean.t_max > 1e6
    assert 1e4 < mean.value < 1e6


@pytest.mark.unit
def test_mean_emission_time_agrees_with_sampling(space, params):
    """Quadrature and Monte Carlo agree for two excited atoms."""
    h = conditional_hamiltonian(params, space)
    psi = ket(0, 2, 2, space)
    mean = mean_first_emission_time(h, psi)
    records = sample_emission_times(h, psi, TrajectoryConfig(seed=5, n_trajectories=2000, t_max=mean.t_max))
    mc_mean, stderr, _ = emission_time_statistics(records)
    assert abs(mc_mean - mean.value) < 3 * stderr


@pytest.mark.unit
def test_channel_probabilities_close_the_balance(space):
    """Channel probabilities add up to 1 - P0(t)."""
    params = SystemParams(gamma_cav=0.01)
    cfg = CnotConfig(omega=0.1, params=params, space=space)
    h = cnot_hamiltonian(cfg)
    psi = dfs_basis(space)[2]
    t = 40.0
    probabilities = channel_emission_probabilities(h, psi, jump_channels(params, space, 0.5), t)
    p0 = no_emission_probability(propagate(h, psi, t))
    assert len(probabilities) == 5
    assert all(p >= 0 for p in probabilities)
    assert sum(probabilities) == pytest.approx(1.0 - p0, abs=1e-6)


# ============================================================================
# Jump Trajectory Tests
# ============================================================================


@pytest.mark.unit
def test_dark_trajectory_has_no_jumps(space, params, rng):
    """A DFS state evolves without jumps."""
    h = conditional_hamiltonian(params, space)
    record = run_trajectory(h, ket(0, 1, 1, space), jump_channels(params, space), rng, t_max=50.0)
    assert record.jumps == ()
    assert record.state_at(50.0).norm() == pytest.approx(1.0)


@pytest.mark.unit
def test_jump_removes_the_photon(space, params, rng):
    """After the cavity jump from |1,0,0> the cavity is empty and nothing else happens."""
    h = conditional_hamiltonian(params, space)
    record = run_trajectory(h, ket(1, 0, 0, space), jump_channels(params, space), rng, t_max=100.0)
    assert len(record.jumps) == 1
    time, channel = record.jumps[0]
    assert channel == 0
    after = record.segment_starts[1][1]
    assert np.vdot(after.amplitudes, photon_number_operator(space).entries @ after.amplitudes).real == pytest.approx(0.0)
    with pytest.raises(InvalidInputError):
        record.state_at(101.0)


@pytest.mark.unit
def test_run_trajectory_rejects_inconsistent_channels(space, params, rng):
    """Channels that do not match H_cond are refused."""
    h = conditional_hamiltonian(params, space)
    with pytest.raises(InvalidInputError):
        run_trajectory(h, ket(1, 0, 0, space), [], rng, t_max=1.0)


@pytest.mark.unit
@pytest.mark.slow
def test_ensemble_matches_master_equation(v_params):
    """Averaged jump trajectories of the V system reach the Lindblad steady state."""
    h = v_system_hamiltonian(v_params)
    cfg = TrajectoryConfig(seed=17, n_trajectories=200, t_max=60.0, channels=(v_system_jump_channel(v_params),))
    records = run_trajectories(h, v_system_state("g"), cfg, jobs=2)
    times = [40.0, 50.0, 60.0]
    fast = Operator(level_transition(V_FAST, V_FAST))
    mean, stderr = ensemble_population(records, fast, times)
    target = v_system_steady_state(v_params)[V_FAST, V_FAST].real
    assert np.all(np.abs(mean - target) < 4 * stderr + 5e-3)
    emission_times = records[0].emission_times
    assert emission_times == sorted(emission_times)


# ============================================================================
# Decay Spectrum Tests
# ============================================================================


@pytest.mark.unit
def test_complement_rates_all_positive(space, params, dfs):
    """Every state outside the DFS decays."""
    rates = non_dfs_decay_rates(conditional_hamiltonian(params, space), dfs)
    assert len(rates) == space.dim - 5
    assert min(rates) > 0


@pytest.mark.unit
@pytest.mark.parametrize(
    "kappa, scale",
    [(0.05, lambda kappa, g: kappa), (20.0, lambda kappa, g: g**2 / kappa)],
    ids=["strong_coupling", "bad_cavity"],
)
def test_slowest_complement_rate_scale(space, dfs, kappa, scale):
    """The slowest rate is of order kappa for g >> kappa and g^2/kappa for kappa >> g."""
    params = SystemParams(g=1.0, kappa=kappa)
    rates = non_dfs_decay_rates(conditional_hamiltonian(params, space), dfs)
    expected = scale(kappa, params.g)
    assert 0.1 * expected < min(rates) < 10 * expected


@pytest.mark.unit
def test_measurement_time_estimate(params):
    """Delta T is the inverse of the smallest positive rate, with both anchors."""
    estimate = measurement_time_estimate([0.0, 0.5, 2.0], params)
    assert estimate["delta_t"] == pytest.approx(2.0)
    assert estimate["inverse_kappa"] == 1.0
    assert estimate["kappa_over_g2"] == 1.0
