# test_dynamics.py – RK4 stepping, conservation and constraint monitoring
from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import solve_ivp

from dynamics import (
    TrajectoryConfig,
    constraint_drift,
    integrate,
    invariants,
    pack,
    rank1_drift,
    rhs_real,
    rk4_step,
    unpack,
)
from errors import ConfigError, OffShell, SingularConfiguration
from lax import PhaseState, build_L, eom_rhs, random_state, rank1_state
from rmatrix import scalar_provider
from tensorops import matnorm

ETA = 0.37 + 0.11j


@pytest.fixture
def trig_state(trig):
    return random_state(1, 3, ETA, seed=17, scale=0.5, ctx=trig)


def _rk4(provider, state, dt, steps):
    for k in range(steps):
        state = rk4_step(provider, state, dt, t=k * dt, resync=False)
    return state


def test_pack_round_trip(state_n2):
    y = pack(state_n2)
    assert y.dtype == float
    back = unpack(y, state_n2)
    assert np.array_equal(back.s, state_n2.s)
    assert np.array_equal(back.qdot, state_n2.qdot)


def test_rhs_accelerations_are_traces(belavin2, state_n2):
    f = rhs_real(belavin2, state_n2)
    d = unpack(f(0.0, pack(state_n2)), state_n2)
    _, ds = eom_rhs(belavin2, state_n2)
    assert_allclose(d.q, state_n2.qdot)
    assert_allclose(d.s, ds)
    assert_allclose(d.qdot, np.trace(ds, axis1=2, axis2=3).diagonal())


def test_rk4_matches_reference_integrator(trig, trig_state):
    provider = scalar_provider(trig)
    t_end = 0.2
    ref = solve_ivp(rhs_real(provider, trig_state), (0.0, t_end), pack(trig_state),
                    method="DOP853", rtol=1e-12, atol=1e-12)
    exact = ref.y[:, -1]
    errors = []
    for steps in (40, 80):
        approx = pack(_rk4(provider, trig_state, t_end / steps, steps))
        errors.append(np.max(np.abs(approx - exact)))
    assert errors[1] < 1e-6
    # fourth order: halving dt cuts the error about sixteen-fold
    assert errors[0] / errors[1] > 8


def test_integrate_conserves_spectral_invariants(trig, trig_state):
    provider = scalar_provider(trig)
    cfg = TrajectoryConfig(dt=1e-3, steps=200, z_samples=(0.3 + 0.2j, -0.25 + 0.4j), record_every=50)
    traj, report = integrate(provider, trig_state, cfg)
    assert traj.times == pytest.approx([0.0, 0.05, 0.1, 0.15, 0.2])
    assert len(traj.mu) == 200
    assert report.max_drift.shape == (2, 4)
    assert report.max_relative < 1e-6
    assert constraint_drift(traj) < 1e-10
    assert len(report.rows()) == 8


def test_invariant_orders(belavin2, state_n2):
    values = invariants(belavin2, state_n2, [0.3 + 0.2j], orders=(1, 2))
    lax_l = build_L(belavin2, state_n2, 0.3 + 0.2j).assemble()
    assert_allclose(values[0], [np.trace(lax_l), np.trace(lax_l @ lax_l)], rtol=1e-12)


def test_rank_one_is_preserved(belavin2, ell):
    state = rank1_state(2, 2, ETA, seed=6, ctx=ell)
    traj, _ = integrate(belavin2, state, TrajectoryConfig(dt=2e-3, steps=25, record_every=5))
    assert traj.rank1[0] < 1e-12
    assert rank1_drift(traj) < 1e-8


def test_integrate_refuses_off_shell(trig, trig_state):
    state = PhaseState(trig_state.eta, trig_state.q, trig_state.s, trig_state.qdot + 0.1)
    with pytest.raises(OffShell):
        integrate(scalar_provider(trig), state, TrajectoryConfig(dt=1e-3, steps=1))


def test_singular_start(ell):
    state = PhaseState.on_shell(ETA, [0.0, ETA + 1e-8], np.ones((2, 2, 1, 1)))
    with pytest.raises(SingularConfiguration) as info:
        integrate(scalar_provider(ell), state, TrajectoryConfig(dt=1e-3, steps=5))
    assert info.value.time == 0.0
    assert info.value.pair == (0, 1)


def test_spectral_points_must_avoid_the_lattice(trig, trig_state):
    cfg = TrajectoryConfig(dt=1e-3, steps=1, z_samples=(0.3 + 0.2j, 0.0))
    with pytest.raises(ConfigError, match="z_sample"):
        integrate(scalar_provider(trig), trig_state, cfg)
    with pytest.raises(ConfigError):
        cfg.check_spectral_points(trig)
    TrajectoryConfig(dt=1e-3, steps=1, z_samples=(0.5j * np.pi,)).check_spectral_points(trig)


def test_trajectory_config_validation():
    with pytest.raises(ConfigError):
        TrajectoryConfig(dt=0.0, steps=10)
    with pytest.raises(ConfigError):
        TrajectoryConfig(dt=1e-3, steps=10, record_every=0)
    with pytest.raises(ConfigError):
        TrajectoryConfig(dt=1e-3, steps=10, orders=(0, 1))


def _worst_drift(provider, state, dt, t_end, z_samples=(0.3 + 0.2j, -0.25 + 0.4j)):
    steps = round(t_end / dt)
    traj, report = integrate(provider, state, TrajectoryConfig(dt=dt, steps=steps, z_samples=z_samples))
    return float(np.max(report.max_drift)), traj, report


def test_conservation_drift_is_fourth_order(trig, trig_state):
    provider = scalar_provider(trig)
    drifts = [_worst_drift(provider, trig_state, dt, 0.2)[0] for dt in (0.02, 0.01, 0.005)]
    # halving dt cuts the drift about sixteen-fold
    assert drifts[0] / drifts[1] > 10
    assert drifts[1] / drifts[2] > 10


def test_constraint_stays_at_rounding_level(trig):
    # q̈_i = tr 𝒮̇^{ii} makes μ a linear invariant of the stepped system
    state = random_state(1, 3, ETA, seed=23, scale=0.1, ctx=trig)
    provider = scalar_provider(trig)
    for dt in (0.02, 0.01, 0.005):
        _, traj, _ = _worst_drift(provider, state, dt, 1.0)
        assert len(traj.mu) == round(1.0 / dt)
        assert constraint_drift(traj) < 1e-12


def test_zero_spin_state_is_stationary(belavin2):
    state = PhaseState.on_shell(ETA, [0.1 + 0.2j, -0.3 + 0.05j], np.zeros((2, 2, 2, 2)))
    provider = belavin2
    stepped = rk4_step(provider, state, 1e-2)
    assert np.array_equal(stepped.q, state.q)
    assert np.array_equal(stepped.qdot, state.qdot)
    assert not np.any(stepped.s)
    traj, report = integrate(provider, state, TrajectoryConfig(dt=1e-2, steps=10, record_every=5))
    assert not np.any(report.max_drift)
    assert not np.any(np.array(traj.invariants))
    assert constraint_drift(traj) == 0.0
    assert rank1_drift(traj) == 0.0


def test_rational_pair_matches_reference_over_unit_time(rat):
    provider = scalar_provider(rat)
    state = random_state(1, 2, ETA, seed=31, scale=0.3, ctx=rat)
    traj, _ = integrate(provider, state, TrajectoryConfig(dt=1e-3, steps=1000, record_every=1000))
    ref = solve_ivp(rhs_real(provider, state), (0.0, 1.0), pack(state),
                    method="DOP853", rtol=1e-12, atol=1e-12)
    assert traj.times[-1] == pytest.approx(1.0)
    assert np.max(np.abs(pack(traj.states[-1]) - ref.y[:, -1])) < 1e-7


@pytest.mark.slow
def test_conservation_acceptance(belavin2, ell):
    state = random_state(2, 2, ETA, seed=99, ctx=ell)
    z_samples = (0.3 + 0.2j, -0.25 + 0.4j, 0.4 - 0.1j, -0.15 - 0.35j, 0.2 + 0.45j)
    cfg = TrajectoryConfig(dt=1e-3, steps=1000, z_samples=z_samples, record_every=100)
    traj, report = integrate(belavin2, state, cfg)
    assert report.max_relative < 1e-6
    assert constraint_drift(traj) < 1e-8
    assert matnorm(traj.states[-1].mu) < 1e-8

    coarse = [_worst_drift(belavin2, state, dt, 1.0, z_samples)[0] for dt in (4e-3, 2e-3)]
    assert coarse[0] / coarse[1] > 10
    assert coarse[1] / float(np.max(report.max_drift)) > 10
