# test_specfun.py – φ, E1, ℘ and theta in the three regimes
from __future__ import annotations

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from errors import ConfigError, NearPole, NonConvergent, WrongRegime
from specfun import (
    EllipticContext,
    Regime,
    distance_to_lattice,
    dphi_dz,
    e1,
    finite_limit,
    holomorphic_derivative,
    kronecker_phi,
    phi_dq,
    phi_finite_parts,
    pole_residue,
    theta,
    theta_prime,
    wp,
)

coord = st.floats(-0.45, 0.45, allow_nan=False)
points = st.builds(complex, coord, coord).filter(lambda z: abs(z) > 0.05)


def test_rational_closed_forms(rat):
    assert kronecker_phi(rat, 0.5, 0.25) == pytest.approx(6.0)
    assert e1(rat, 0.5) == pytest.approx(2.0)
    assert wp(rat, 0.5) == pytest.approx(4.0)


def test_rational_exact_values(rat):
    assert kronecker_phi(rat, 2, 3) == pytest.approx(5 / 6, abs=1e-15)
    assert phi_dq(rat, 1, 2) == pytest.approx(-0.25, abs=1e-15)
    assert phi_dq(rat, 3, 1) == pytest.approx(-1.0, abs=1e-15)
    assert e1(rat, 4) == pytest.approx(0.25)
    assert wp(rat, 2) == pytest.approx(0.25)
    assert_allclose(phi_finite_parts(rat, 2), [0.5, 0.0], atol=1e-15)


def test_trigonometric_closed_forms(trig):
    z, q = 0.3 + 0.1j, -0.2 + 0.25j
    assert_allclose(kronecker_phi(trig, z, q), 1 / np.tanh(z) + 1 / np.tanh(q))
    assert_allclose(wp(trig, z), 1 / np.sinh(z) ** 2 + 1 / 3)


@given(points)
def test_e1_is_odd_and_wp_even(z):
    for ctx in (EllipticContext(Regime.RATIONAL), EllipticContext(Regime.TRIGONOMETRIC),
                EllipticContext(Regime.ELLIPTIC, tau=1j)):
        assert abs(e1(ctx, -z) + e1(ctx, z)) < 1e-10
        assert abs(wp(ctx, -z) - wp(ctx, z)) < 1e-9


@given(points, points)
def test_kronecker_unitarity(z, q):
    assume(abs(z + q) > 0.05 and abs(z - q) > 0.05)
    ctx = EllipticContext(Regime.ELLIPTIC, tau=1j)
    assert abs(kronecker_phi(ctx, z, q) * kronecker_phi(ctx, z, -q) - (wp(ctx, z) - wp(ctx, q))) < 1e-8


def test_phi_residues_are_one(ctx):
    assert abs(pole_residue(lambda z: kronecker_phi(ctx, z, 0.3 + 0.1j)) - 1) < 1e-8
    assert abs(pole_residue(lambda q: kronecker_phi(ctx, 0.2 - 0.15j, q)) - 1) < 1e-8


def test_e1_is_regular_part_of_phi(ctx):
    z = 0.27 + 0.12j
    assert abs(finite_limit(lambda q: kronecker_phi(ctx, z, q)) - e1(ctx, z)) < 1e-8


def test_wp_is_minus_e1_derivative_up_to_a_constant(ctx):
    shifts = [wp(ctx, z) + holomorphic_derivative(lambda v: e1(ctx, v), z)
              for z in (0.3 + 0.1j, -0.2 + 0.35j, 0.41 - 0.22j)]
    assert_allclose(shifts, shifts[0], atol=1e-7)
    expected = {Regime.RATIONAL: 0.0, Regime.TRIGONOMETRIC: 1 / 3}
    if ctx.regime in expected:
        assert abs(shifts[0] - expected[ctx.regime]) < 1e-7


def test_partial_derivatives_match_differences(ctx):
    z, q = 0.31 + 0.07j, -0.18 + 0.26j
    assert abs(phi_dq(ctx, z, q) - holomorphic_derivative(lambda v: kronecker_phi(ctx, z, v), q)) < 1e-7
    assert abs(dphi_dz(ctx, z, q) - holomorphic_derivative(lambda v: kronecker_phi(ctx, v, q), z)) < 1e-7


def test_phi_finite_parts_exact_cases(rat, trig):
    z = 0.4 - 0.2j
    c0, c1 = phi_finite_parts(rat, z)
    assert_allclose([c0, c1], [1 / z, 0.0], atol=1e-12)
    c0, c1 = phi_finite_parts(trig, z)
    assert_allclose([c0, c1], [1 / np.tanh(z), 1 / 3], atol=1e-12)


def test_phi_finite_parts_elliptic(ell):
    z = 0.33 + 0.21j
    _, c1 = phi_finite_parts(ell, z)
    # ∂_q(φ − 1/q) at q = 0
    numeric = holomorphic_derivative(lambda q: kronecker_phi(ell, z, q) - 1 / q, 0.0, h=1e-3)
    assert abs(c1 - numeric) < 1e-6


def test_theta_parity_and_zero(ell):
    z = 0.21 + 0.13j
    assert abs(theta(ell, -z) + theta(ell, z)) < 1e-13
    assert abs(theta(ell, 0.0)) < 1e-13
    assert abs(theta_prime(ell, z) - holomorphic_derivative(lambda v: theta(ell, v), z)) < 1e-9


def test_elliptic_quasi_periodicity(ell):
    z, q = 0.2 + 0.1j, 0.15 - 0.3j
    base = kronecker_phi(ell, z, q)
    assert abs(kronecker_phi(ell, z + 1, q) - base) < 1e-10
    assert abs(kronecker_phi(ell, z + 1j, q) - np.exp(-2j * np.pi * q) * base) < 1e-10
    assert abs(e1(ell, z + 1) - e1(ell, z)) < 1e-10
    assert abs(e1(ell, z + 1j) - (e1(ell, z) - 2j * np.pi)) < 1e-10


def test_near_pole_is_reported(rat, trig, ell):
    with pytest.raises(NearPole) as info:
        kronecker_phi(rat, 0.0, 0.3)
    assert info.value.argument == "z"
    with pytest.raises(NearPole):
        e1(trig, 1j * np.pi)
    with pytest.raises(NearPole):
        wp(ell, 1 + 1j)


def test_distance_to_lattice(rat, trig, ell):
    assert distance_to_lattice(rat, 0.3 + 0.4j) == pytest.approx(0.5)
    assert distance_to_lattice(trig, 0.1 + 1j * np.pi) == pytest.approx(0.1)
    assert distance_to_lattice(ell, 0.9 + 0.95j) == pytest.approx(np.hypot(0.1, 0.05))
    d = distance_to_lattice(ell, np.array([0.5, 1.0, 2 + 3j]))
    assert isinstance(d, np.ndarray)
    assert_allclose(d, [0.5, 0.0, 0.0], atol=1e-15)


def test_theta_needs_elliptic_regime(rat):
    with pytest.raises(WrongRegime):
        theta(rat, 0.1)


def test_context_validation():
    with pytest.raises(ConfigError):
        EllipticContext(Regime.ELLIPTIC, tau=-1j)
    with pytest.raises(ConfigError):
        EllipticContext(Regime.ELLIPTIC)
    with pytest.raises(ConfigError):
        EllipticContext(Regime.RATIONAL, series_cutoff=4)
    with pytest.raises(ConfigError):
        EllipticContext(Regime.RATIONAL, pole_guard=0.0)


def test_series_tail_check():
    ctx = EllipticContext(Regime.ELLIPTIC, tau=0.01j, series_cutoff=8)
    with pytest.raises(NonConvergent):
        theta(ctx, 0.1)


def _jacobi_theta1(tau: complex, z: complex, derivative: int = 0) -> complex:
    # mpmath's theta1 uses the argument πz and the nome exp(iπτ); it equals −ϑ
    nome = mpmath.exp(1j * mpmath.pi * tau)
    return complex(mpmath.jtheta(1, mpmath.pi * z, nome, derivative)) * complex(mpmath.pi) ** derivative


@pytest.mark.parametrize("tau", [1j, 0.3 + 1.1j])
@pytest.mark.parametrize("z", [0.2, 0.31 - 0.17j, -0.44 + 0.38j])
def test_theta_matches_independent_series(tau, z):
    ctx = EllipticContext(Regime.ELLIPTIC, tau=tau, series_cutoff=64)
    with mpmath.workdps(30):
        oracle = -_jacobi_theta1(tau, z)
    assert abs(theta(ctx, z) - oracle) < 1e-14 * max(1.0, abs(oracle))


def test_elliptic_phi_is_a_theta_ratio(ell):
    z, q = 0.3, 0.4
    ratio = theta_prime(ell, 0.0) * theta(ell, z + q) / (theta(ell, z) * theta(ell, q))
    assert abs(kronecker_phi(ell, z, q) - ratio) < 1e-13 * abs(ratio)
    with mpmath.workdps(30):
        oracle = (_jacobi_theta1(1j, 0.0, 1) * _jacobi_theta1(1j, z + q)
                  / (_jacobi_theta1(1j, z) * _jacobi_theta1(1j, q)))
    assert abs(kronecker_phi(ell, z, q) - oracle) < 1e-12 * abs(oracle)
    assert kronecker_phi(ell, z, q) == pytest.approx(kronecker_phi(ell, q, z), rel=1e-14)


def test_phi_expansion_remainder_is_quadratic(ctx):
    z = 0.33 + 0.21j
    c0, c1 = phi_finite_parts(ctx, z)

    def remainder(q):
        return abs(kronecker_phi(ctx, z, q) - 1 / q - c0 - q * c1)

    big, small = remainder(1e-2), remainder(1e-3)
    assert big < 1e-2
    # q² decay: a tenfold smaller q leaves at most a fiftieth
    assert small < big / 50 + 1e-12


def test_trigonometric_finite_parts_at_one(trig):
    c0, c1 = phi_finite_parts(trig, 1.0)
    coth = 1 / np.tanh(1.0)
    assert_allclose([c0, c1], [coth, (coth ** 2 - 1 / np.sinh(1.0) ** 2 - 1 / 3) / 2], atol=1e-14)
