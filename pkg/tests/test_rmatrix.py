# test_rmatrix.py – scalar and Belavin providers, calibration and derived objects
from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from errors import ConfigError, WrongRegime
from rmatrix import (
    BelavinProvider,
    ScalarProvider,
    WeylBasis,
    belavin_provider,
    classical_from_swap,
    normalization_family,
    numeric_classical_finite,
    numeric_classical_r,
    numeric_d_super,
    numeric_f_derivative,
    numeric_finite_part_arg,
    provider_for,
)
from specfun import e1, kronecker_phi, pole_residue, wp
from tensorops import identity_op, matnorm, permutation_op, swap_spaces

X, U = 0.23 + 0.17j, -0.31 + 0.12j


def _close(a, b, tol):
    assert matnorm((a - b).mat) < tol


# ───────── scalar ─────────
def test_scalar_provider_is_kronecker(scalar):
    ctx = scalar.ctx
    assert scalar.n == 1
    assert scalar.name == f"scalar/{ctx.regime.value}"
    assert scalar.quantum(X, U).mat[0, 0] == pytest.approx(kronecker_phi(ctx, X, U))
    assert scalar.classical_r(U).mat[0, 0] == pytest.approx(e1(ctx, U))
    assert matnorm(scalar.classical_finite().mat) == 0.0


def test_scalar_numeric_oracles(scalar):
    _close(scalar.classical_r(U), numeric_classical_r(scalar, U), 1e-8)
    _close(scalar.finite_part_arg(X), numeric_finite_part_arg(scalar, X), 1e-8)
    _close(scalar.classical_finite(), numeric_classical_finite(scalar), 1e-8)
    _close(scalar.f_derivative(X, U), numeric_f_derivative(scalar, X, U), 1e-7)
    _close(scalar.d_super(X, U), numeric_d_super(scalar, X, U), 1e-7)


def test_provider_for_dispatch(ctx):
    assert isinstance(provider_for(ctx, 1), ScalarProvider)


def test_belavin_needs_elliptic(rat, trig):
    with pytest.raises(WrongRegime):
        belavin_provider(rat, 2)
    with pytest.raises(WrongRegime):
        belavin_provider(trig, 3)


def test_belavin_rejects_bad_rank(ell):
    with pytest.raises(ConfigError):
        belavin_provider(ell, 0)


# ───────── Weyl basis ─────────
@pytest.mark.parametrize("n", [2, 3])
def test_weyl_basis(n):
    basis = WeylBasis(n, 1j)
    assert_allclose(basis.t(0, 0), np.eye(n))
    assert len(basis.indices) == n * n
    # T_a T_{-a} = 1
    for a1, a2 in basis.indices:
        assert_allclose(basis.t(a1, a2) @ basis.t(-a1, -a2), np.eye(n), atol=1e-12)
    assert_allclose(basis.combine(np.full(n * n, 1 / n)).mat, permutation_op(n).mat, atol=1e-12)
    assert_allclose(basis.omegas[0], 0.0)


@pytest.mark.parametrize("n", [2, 3])
def test_weyl_basis_trace_pairing(n):
    basis = WeylBasis(n, 1j)
    for a in basis.indices:
        for b in basis.indices:
            trace = np.trace(basis.t(*a) @ basis.t(*b))
            if (a[0] + b[0]) % n == 0 and (a[1] + b[1]) % n == 0:
                assert abs(abs(trace) - n) < 1e-12
            else:
                assert abs(trace) < 1e-12


def test_weyl_basis_needs_tau():
    with pytest.raises(WrongRegime):
        WeylBasis(2)


def test_normalization_family_sizes():
    assert len(normalization_family(1)) == 1
    assert len(normalization_family(2)) == 27


# ───────── Belavin ─────────
def test_calibration_choice(belavin2):
    norm = belavin2.norm
    assert (norm.c, norm.kappa_hbar, norm.kappa_z) == pytest.approx((0.5, 0.5, 1.0))
    report = belavin2.calibration
    assert report.n == 2
    assert norm.label in report.passing
    assert len(report.rows) == 27
    assert report.to_dict()["chosen"] == norm.label


def test_belavin_residues(belavin2):
    n = belavin2.n
    _close(pole_residue(lambda x: belavin2.quantum(x, U)), identity_op(n), 1e-8)
    _close(pole_residue(lambda u: belavin2.quantum(X, u)), permutation_op(n), 1e-8)


def test_belavin_derived_objects_match_numeric(belavin2):
    _close(belavin2.classical_r(U), numeric_classical_r(belavin2, U), 1e-8)
    _close(belavin2.finite_part_arg(X), numeric_finite_part_arg(belavin2, X), 1e-8)
    _close(belavin2.classical_finite(), numeric_classical_finite(belavin2), 1e-8)
    _close(belavin2.f_derivative(X, U), numeric_f_derivative(belavin2, X, U), 1e-7)
    _close(belavin2.d_super(X, U), numeric_d_super(belavin2, X, U), 1e-7)


def test_classical_r_from_swap(belavin2):
    _close(classical_from_swap(belavin2)(U), belavin2.classical_r(U), 1e-10)


@pytest.mark.parametrize("hbar", [1e-2, 1e-3])
def test_classical_expansion_converges_linearly(belavin2, hbar):
    n = belavin2.n
    remainder = belavin2.quantum(hbar, U) - identity_op(n) / hbar - belavin2.classical_r(U)
    err = matnorm((remainder / hbar - belavin2.classical_second(U)).mat)
    assert err < 100 * hbar


def test_calibrated_provider_is_unitary(belavin2):
    ctx = belavin2.ctx
    lhs = belavin2.quantum(X, U) @ swap_spaces(belavin2.quantum(X, -U))
    _close(lhs, identity_op(2) * (wp(ctx, X) - wp(ctx, U)), 1e-8)


@pytest.mark.slow
def test_belavin_n3(ell):
    provider = belavin_provider(ell, 3)
    assert isinstance(provider, BelavinProvider)
    assert provider.norm.c == pytest.approx(1 / 3)
    _close(pole_residue(lambda u: provider.quantum(X, u)), permutation_op(3), 1e-8)
