# axioms.py – seeded numeric verification of the R-matrix identities
"""Falsification-style checks of every functional identity the Lax pair relies on.
----------------------------------------------------------------
* scalar identities of φ, E1, ℘ (Fay, degenerations, unitarity, quasi-periodicity)
* operator identities of an RProvider on C^n⊗C^n⊗C^n (AYBE, QYBE, unitarity, …)
* the x→0 / y→0 degenerations and the two difference corollaries used by the equations of motion
* samples are drawn from a seeded generator, away from every pole of every argument combination
* NearPole during evaluation is a counted skip; reports reduce by max, independent of scheduling
"""

from __future__ import annotations

import itertools
import logging
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np

from errors import ConfigError, NearPole, WrongRegime
from specfun import (
    EllipticContext,
    Regime,
    distance_to_lattice,
    dphi_dz,
    e1,
    holomorphic_derivative,
    kronecker_phi,
    wp,
)
from tensorops import TensorOp, act_space, identity_op, matnorm, swap_spaces

if TYPE_CHECKING:
    from rmatrix import RProvider

logger = logging.getLogger(__name__)

# ───────── constants ─────────
SAMPLE_BOX        = 0.5
SAMPLE_GUARD      = 5e-2
DEFAULT_SAMPLES   = 200
DEFAULT_TOLERANCE = 1e-8
FD_TOLERANCE      = 1e-7
EXACT_TOLERANCE   = 1e-12
MAX_DRAW_FACTOR   = 1000


@dataclass(frozen=True)
class SamplePlan:
    """Seeded sampling policy; every complex variable is drawn from the box [−box, box]²."""

    seed: int = 0
    count: int = DEFAULT_SAMPLES
    box: float = SAMPLE_BOX
    pole_guard: float = SAMPLE_GUARD
    tolerance: float = DEFAULT_TOLERANCE
    threads: int = 1

    def __post_init__(self):
        if self.count < 1 or self.box <= 0 or self.pole_guard <= 0 or self.tolerance <= 0:
            raise ConfigError(f"invalid sample plan {self}")

    @property
    def workers(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


@dataclass
class IdentityReport:
    name: str
    target: str
    samples: int
    skipped: int
    max_residual: float
    worst_point: dict = field(default_factory=dict)
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.samples > 0 and self.max_residual < self.tolerance

    def to_dict(self) -> dict:
        return {
            "identity": self.name,
            "target": self.target,
            "samples": self.samples,
            "skipped": self.skipped,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "worst_point": dict(self.worst_point),
        }


# ───────── sampling ─────────
def _combinations(k: int) -> np.ndarray:
    """Every nonzero coefficient vector in {−1, 0, 1}^k."""
    return np.array([c for c in itertools.product((-1, 0, 1), repeat=k) if any(c)], dtype=float)


def draw_points(ctx: EllipticContext, rng: np.random.Generator, names, count: int,
                box: float = SAMPLE_BOX, guard: float = SAMPLE_GUARD) -> list[dict]:
    """`count` points whose variables, sums and differences all keep `guard` from the singular set."""
    names = tuple(names)
    combos = _combinations(len(names))
    points, draws = [], 0
    while len(points) < count:
        if draws >= MAX_DRAW_FACTOR * count:
            raise ConfigError(f"could not draw {count} points with guard {guard} in box {box}")
        draws += 1
        v = rng.uniform(-box, box, len(names)) + 1j * rng.uniform(-box, box, len(names))
        if np.min(distance_to_lattice(ctx, combos @ v)) >= guard:
            points.append(dict(zip(names, (complex(x) for x in v))))
    logger.debug("drew %d points for %s in %d draws", count, names, draws)
    return points


def _evaluate(name: str, fn: Callable[..., float], target, ctx: EllipticContext, names,
              plan: SamplePlan, tolerance: float | None = None) -> IdentityReport:
    rng = np.random.default_rng([plan.seed, zlib.crc32(name.encode())])
    points = draw_points(ctx, rng, names, plan.count, plan.box, plan.pole_guard)

    def one(point):
        try:
            return fn(target, **point)
        except NearPole as exc:
            logger.debug("%s: skipped sample (%s)", name, exc)
            return None

    with ThreadPoolExecutor(max_workers=plan.workers) as pool:
        values = list(pool.map(one, points))

    report = IdentityReport(name, getattr(target, "name", str(target)), 0, 0, 0.0,
                            tolerance=plan.tolerance if tolerance is None else tolerance)
    for point, value in zip(points, values):
        if value is None:
            report.skipped += 1
            continue
        report.samples += 1
        if value > report.max_residual or not report.worst_point:
            report.max_residual, report.worst_point = float(value), point
    logger.info("%-22s %-16s max=%.3e samples=%d skipped=%d %s", name, report.target,
                report.max_residual, report.samples, report.skipped, "PASS" if report.passed else "FAIL")
    return report


# ───────── scalar identities ─────────
def fay_residual(ctx, z1, z2, q1, q2) -> float:
    lhs = kronecker_phi(ctx, z1, q1) * kronecker_phi(ctx, z2, q2)
    rhs = (kronecker_phi(ctx, z1 - z2, q1) * kronecker_phi(ctx, z2, q1 + q2)
           + kronecker_phi(ctx, z2 - z1, q2) * kronecker_phi(ctx, z1, q1 + q2))
    return abs(lhs - rhs)


def degeneration_residual(ctx, z, q1, q2) -> float:
    lhs = kronecker_phi(ctx, z, q1) * kronecker_phi(ctx, z, q2)
    rhs = kronecker_phi(ctx, z, q1 + q2) * (e1(ctx, z) + e1(ctx, q1) + e1(ctx, q2) - e1(ctx, q1 + q2 + z))
    return abs(lhs - rhs)


def unitarity_scalar_residual(ctx, z, q) -> float:
    return abs(kronecker_phi(ctx, z, q) * kronecker_phi(ctx, z, -q) - (wp(ctx, z) - wp(ctx, q)))


def rewritten_residual(ctx, z, q1, q2) -> float:
    lhs = kronecker_phi(ctx, z, q1) * kronecker_phi(ctx, z, q2)
    rhs = kronecker_phi(ctx, z, q1 + q2) * (e1(ctx, q1) + e1(ctx, q2)) - dphi_dz(ctx, z, q1 + q2)
    return abs(lhs - rhs)


def quasi_periodicity_residual(ctx, z, q) -> float:
    base = kronecker_phi(ctx, z, q)
    return max(abs(kronecker_phi(ctx, z + 1, q) - base),
               abs(kronecker_phi(ctx, z + ctx.tau, q) - np.exp(-2j * np.pi * q) * base))


SCALAR_IDENTITIES = [
    ("fay", fay_residual, ("z1", "z2", "q1", "q2")),
    ("degeneration", degeneration_residual, ("z", "q1", "q2")),
    ("unitarity_scalar", unitarity_scalar_residual, ("z", "q")),
    ("rewritten_degeneration", rewritten_residual, ("z", "q1", "q2")),
]


def check_scalar(ctx: EllipticContext, name: str, plan: SamplePlan) -> IdentityReport:
    if name == "quasi_periodicity":
        if ctx.regime is not Regime.ELLIPTIC:
            raise WrongRegime("quasi-periodicity is an elliptic property")
        return _evaluate(name, quasi_periodicity_residual, ctx, ctx, ("z", "q"), plan)
    for ident, fn, names in SCALAR_IDENTITIES:
        if ident == name:
            return _evaluate(name, fn, ctx, ctx, names, plan)
    raise KeyError(name)


def run_scalar_suite(ctx: EllipticContext, plan: SamplePlan) -> list[IdentityReport]:
    names = [ident for ident, _, _ in SCALAR_IDENTITIES]
    if ctx.regime is Regime.ELLIPTIC:
        names.append("quasi_periodicity")
    return [check_scalar(ctx, name, plan) for name in names]


# ───────── operator identities ─────────
def _e(op: TensorOp, which: str) -> np.ndarray:
    return act_space(op, which)


def aybe_residual(provider: RProvider, z, w, q12, q23) -> float:
    """R^z_12(q12)R^w_23(q23) = R^w_13(q13)R^{z−w}_12(q12) + R^{w−z}_23(q23)R^z_13(q13)."""
    R, q13 = provider.quantum, q12 + q23
    lhs = _e(R(z, q12), "12") @ _e(R(w, q23), "23")
    rhs = (_e(R(w, q13), "13") @ _e(R(z - w, q12), "12")
           + _e(R(w - z, q23), "23") @ _e(R(z, q13), "13"))
    return matnorm(lhs - rhs)


def unitarity_residual(provider: RProvider, x, u) -> float:
    """R^x_12(u)R^x_21(−u) = (℘(x) − ℘(u))·1⊗1."""
    lhs = provider.quantum(x, u) @ swap_spaces(provider.quantum(x, -u))
    rhs = identity_op(provider.n) * (wp(provider.ctx, x) - wp(provider.ctx, u))
    return matnorm((lhs - rhs).mat)


def skew_residual(provider: RProvider, x, u) -> float:
    """R^x_12(u) = −R^{−x}_21(−u)."""
    return matnorm((provider.quantum(x, u) + swap_spaces(provider.quantum(-x, -u))).mat)


def qybe_residual(provider: RProvider, hbar, z12, z23) -> float:
    R, z13 = provider.quantum, z12 + z23
    r12, r13, r23 = _e(R(hbar, z12), "12"), _e(R(hbar, z13), "13"), _e(R(hbar, z23), "23")
    return matnorm(r12 @ r13 @ r23 - r23 @ r13 @ r12)


def swap_residual(provider: RProvider, x, u) -> float:
    """R^x(u) = R^u(x)P."""
    return matnorm((provider.quantum(x, u) - provider.quantum(u, x) @ provider.permutation()).mat)


def master_residual(provider: RProvider, z, x, y) -> float:
    """R^z_12(x)R^z_23(y) = R^z_13(x+y)r_12(x) + r_23(y)R^z_13(x+y) − ∂_zR^z_13(x+y)."""
    R, r = provider.quantum, provider.classical_r
    r13 = _e(R(z, x + y), "13")
    lhs = _e(R(z, x), "12") @ _e(R(z, y), "23")
    rhs = r13 @ _e(r(x), "12") + _e(r(y), "23") @ r13 - _e(provider.d_super(z, x + y), "13")
    return matnorm(lhs - rhs)


def degeneration_x0_residual(provider: RProvider, z, y) -> float:
    """R^{(0),z}_12 R^z_23(y) = F^z_13(y)P_12 + R^z_13(y)r^{(0)}_12 + r_23(y)R^z_13(y) − ∂_zR^z_13(y)."""
    r13 = _e(provider.quantum(z, y), "13")
    lhs = _e(provider.finite_part_arg(z), "12") @ _e(provider.quantum(z, y), "23")
    rhs = (_e(provider.f_derivative(z, y), "13") @ _e(provider.permutation(), "12")
           + r13 @ _e(provider.classical_finite(), "12")
           + _e(provider.classical_r(y), "23") @ r13
           - _e(provider.d_super(z, y), "13"))
    return matnorm(lhs - rhs)


def degeneration_y0_residual(provider: RProvider, z, x) -> float:
    """R^z_12(x)R^{(0),z}_23 = R^z_13(x)r_12(x) + r^{(0)}_23 R^z_13(x) + P_23F^z_13(x) − ∂_zR^z_13(x)."""
    r13 = _e(provider.quantum(z, x), "13")
    lhs = _e(provider.quantum(z, x), "12") @ _e(provider.finite_part_arg(z), "23")
    rhs = (r13 @ _e(provider.classical_r(x), "12")
           + _e(provider.classical_finite(), "23") @ r13
           + _e(provider.permutation(), "23") @ _e(provider.f_derivative(z, x), "13")
           - _e(provider.d_super(z, x), "13"))
    return matnorm(lhs - rhs)


def shifted_difference_residual(provider: RProvider, z, q, eta) -> float:
    """R^{(0),z}_12R^z_23(q+η) − R^z_12(η)R^z_23(q)
    = F^z_13(q+η)P_12 + R^z_13(q+η)(r^{(0)}_12 − r_12(η)) + (r_23(q+η) − r_23(q))R^z_13(q+η)."""
    R, r = provider.quantum, provider.classical_r
    r13 = _e(R(z, q + eta), "13")
    lhs = (_e(provider.finite_part_arg(z), "12") @ _e(R(z, q + eta), "23")
           - _e(R(z, eta), "12") @ _e(R(z, q), "23"))
    rhs = (_e(provider.f_derivative(z, q + eta), "13") @ _e(provider.permutation(), "12")
           + r13 @ _e(provider.classical_finite() - r(eta), "12")
           + _e(r(q + eta) - r(q), "23") @ r13)
    return matnorm(lhs - rhs)


def pair_difference_residual(provider: RProvider, z, qik, qkj, eta) -> float:
    """R^z_12(q_ik)R^z_23(q_kj+η) − R^z_12(q_ik+η)R^z_23(q_kj)
    = R^z_13(q_ij+η)(r_12(q_ik) − r_12(q_ik+η)) + (r_23(q_kj+η) − r_23(q_kj))R^z_13(q_ij+η)."""
    R, r = provider.quantum, provider.classical_r
    r13 = _e(R(z, qik + qkj + eta), "13")
    lhs = (_e(R(z, qik), "12") @ _e(R(z, qkj + eta), "23")
           - _e(R(z, qik + eta), "12") @ _e(R(z, qkj), "23"))
    rhs = r13 @ _e(r(qik) - r(qik + eta), "12") + _e(r(qkj + eta) - r(qkj), "23") @ r13
    return matnorm(lhs - rhs)


def classical_limit_residual(provider: RProvider, u) -> float:
    """C1(u) = (r(u)² − ℘(u)·1⊗1)/2."""
    r = provider.classical_r(u)
    expected = (r @ r - identity_op(provider.n) * wp(provider.ctx, u)) / 2
    return matnorm((provider.classical_second(u) - expected).mat)


def classical_from_swap_residual(provider: RProvider, u) -> float:
    """r(u) = R^{u,(0)}P."""
    return matnorm((provider.finite_part_arg(u) @ provider.permutation() - provider.classical_r(u)).mat)


def f_derivative_residual(provider: RProvider, x, u) -> float:
    numeric = holomorphic_derivative(lambda v: provider.quantum(x, v), u)
    return matnorm((provider.f_derivative(x, u) - numeric).mat)


def d_super_residual(provider: RProvider, x, u) -> float:
    numeric = holomorphic_derivative(lambda y: provider.quantum(y, u), x)
    return matnorm((provider.d_super(x, u) - numeric).mat)


OPERATOR_IDENTITIES = [
    ("aybe", aybe_residual, ("z", "w", "q12", "q23"), None),
    ("unitarity", unitarity_residual, ("x", "u"), None),
    ("skew_symmetry", skew_residual, ("x", "u"), None),
    ("qybe", qybe_residual, ("hbar", "z12", "z23"), None),
    ("swap", swap_residual, ("x", "u"), None),
    ("master", master_residual, ("z", "x", "y"), None),
    ("degeneration_x0", degeneration_x0_residual, ("z", "y"), None),
    ("degeneration_y0", degeneration_y0_residual, ("z", "x"), None),
    ("shifted_difference", shifted_difference_residual, ("z", "q", "eta"), None),
    ("pair_difference", pair_difference_residual, ("z", "qik", "qkj", "eta"), None),
    ("classical_limit", classical_limit_residual, ("u",), None),
    ("classical_from_swap", classical_from_swap_residual, ("u",), None),
    ("f_derivative", f_derivative_residual, ("x", "u"), FD_TOLERANCE),
    ("d_super", d_super_residual, ("x", "u"), FD_TOLERANCE),
]


def check(provider: RProvider, name: str, plan: SamplePlan) -> IdentityReport:
    for ident, fn, names, tol in OPERATOR_IDENTITIES:
        if ident == name:
            return _evaluate(name, fn, provider, provider.ctx, names, plan, tol)
    raise KeyError(name)


def check_aybe(provider: RProvider, plan: SamplePlan) -> IdentityReport:
    return check(provider, "aybe", plan)


def check_unitarity_skew(provider: RProvider, plan: SamplePlan) -> list[IdentityReport]:
    return [check(provider, "unitarity", plan), check(provider, "skew_symmetry", plan)]


def check_qybe(provider: RProvider, plan: SamplePlan) -> IdentityReport:
    return check(provider, "qybe", plan)


def check_master(provider: RProvider, plan: SamplePlan) -> IdentityReport:
    return check(provider, "master", plan)


def check_degenerations(provider: RProvider, plan: SamplePlan) -> list[IdentityReport]:
    names = ("degeneration_x0", "degeneration_y0", "shifted_difference", "pair_difference")
    return [check(provider, name, plan) for name in names]


def check_swap(provider: RProvider, plan: SamplePlan) -> IdentityReport:
    return check(provider, "swap", plan)


def check_classical_limit(provider: RProvider, plan: SamplePlan) -> IdentityReport:
    return check(provider, "classical_limit", plan)


def check_classical_from_swap(provider: RProvider, plan: SamplePlan) -> IdentityReport:
    return check(provider, "classical_from_swap", plan)


def check_f_derivative(provider: RProvider, plan: SamplePlan) -> list[IdentityReport]:
    """Analytic ∂_u and ∂_x of R against the holomorphic difference stencil."""
    return [check(provider, "f_derivative", plan), check(provider, "d_super", plan)]


def check_permutation_law(provider: RProvider, plan: SamplePlan) -> IdentityReport:
    """P_12U_12 = U_21P_12 on random complex U."""
    rng = np.random.default_rng([plan.seed, zlib.crc32(b"permutation_law")])
    n, perm = provider.n, provider.permutation()
    report = IdentityReport("permutation_law", provider.name, 0, 0, 0.0, tolerance=EXACT_TOLERANCE)
    for index in range(plan.count):
        u = TensorOp(rng.standard_normal((n * n, n * n)) + 1j * rng.standard_normal((n * n, n * n)))
        value = matnorm((perm @ u - swap_spaces(u) @ perm).mat)
        report.samples += 1
        if value > report.max_residual or not report.worst_point:
            report.max_residual, report.worst_point = value, {"sample": index}
    return report


def run_suite(provider: RProvider, plan: SamplePlan) -> list[IdentityReport]:
    """Every operator identity plus the permutation law; scalar identities when n = 1."""
    logger.info("identity suite for %s: %d samples each, seed %d", provider.name, plan.count, plan.seed)
    reports = [check(provider, name, plan) for name, _, _, _ in OPERATOR_IDENTITIES]
    reports.append(check_permutation_law(provider, plan))
    if provider.n == 1:
        reports.extend(run_scalar_suite(provider.ctx, plan))
    failed = [r.name for r in reports if not r.passed]
    if failed:
        logger.warning("identities failing for %s: %s", provider.name, ", ".join(failed))
    return reports
