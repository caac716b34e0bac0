# specfun.py – Kronecker function, Eisenstein E1, Weierstrass ℘ and the odd theta
"""Complex special functions in the rational, trigonometric and elliptic regimes.
----------------------------------------------------------------
* φ(z,q): 1/z+1/q, coth z+coth q, or ϑ'(0)ϑ(z+q)/(ϑ(z)ϑ(q))
* E1(z):  1/z, coth z, or ϑ'(z)/ϑ(z)
* ℘(z):   1/z², 1/sinh²z+1/3, or −E1'(z)+ϑ'''(0)/(3ϑ'(0))
* ϑ derivatives by term-wise differentiation of the series, never by differences
* every argument is checked against the singular set with the context pole guard
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from errors import ConfigError, NearPole, NonConvergent, WrongRegime

logger = logging.getLogger(__name__)

# ───────── constants ─────────
DEFAULT_CUTOFF     = 32
MIN_CUTOFF         = 8
DEFAULT_POLE_GUARD = 1e-6
TAIL_TOLERANCE     = 1e-15
POLE_FIT_EPS       = 1e-5
FD_STEP            = 1e-4
TWO_PI_I           = 2j * np.pi
THETA_ORDER        = 3
THETA_CACHE        = 1 << 14
LOG_TAIL_TOLERANCE = math.log(TAIL_TOLERANCE)


class Regime(str, Enum):
    RATIONAL = "rational"
    TRIGONOMETRIC = "trigonometric"
    ELLIPTIC = "elliptic"


@dataclass(frozen=True)
class EllipticContext:
    """Regime selector plus modular parameter and series policy."""

    regime: Regime
    tau: complex | None = None
    series_cutoff: int = DEFAULT_CUTOFF
    pole_guard: float = DEFAULT_POLE_GUARD

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.regime is Regime.ELLIPTIC:
            if self.tau is None or complex(self.tau).imag <= 0:
                raise ConfigError(f"elliptic regime needs Im(tau) > 0, got tau={self.tau!r}")
            object.__setattr__(self, "tau", complex(self.tau))
        if int(self.series_cutoff) < MIN_CUTOFF:
            raise ConfigError(f"series_cutoff must be >= {MIN_CUTOFF}, got {self.series_cutoff}")
        if not self.pole_guard > 0:
            raise ConfigError(f"pole_guard must be positive, got {self.pole_guard}")


def rational() -> EllipticContext:
    return EllipticContext(Regime.RATIONAL)


def trigonometric() -> EllipticContext:
    return EllipticContext(Regime.TRIGONOMETRIC)


def elliptic(tau: complex = 1j, series_cutoff: int = DEFAULT_CUTOFF) -> EllipticContext:
    return EllipticContext(Regime.ELLIPTIC, tau=tau, series_cutoff=series_cutoff)


# ───────── singular set ─────────
def _lattice_distance(ctx: EllipticContext, z: complex) -> float:
    if ctx.regime is Regime.RATIONAL:
        return abs(z)
    if ctx.regime is Regime.TRIGONOMETRIC:
        return abs(z - 1j * math.pi * round(z.imag / math.pi))
    tau = ctx.tau
    b = z.imag / tau.imag
    a0, b0 = round(z.real - b * tau.real), round(b)
    return min(abs(z - (a0 + i + (b0 + j) * tau)) for i in (-1, 0, 1) for j in (-1, 0, 1))


def distance_to_lattice(ctx: EllipticContext, z):
    """Distance from z to the nearest pole of E1 in the active regime (scalar or array z)."""
    if np.ndim(z) == 0:
        return float(_lattice_distance(ctx, complex(z)))
    z = np.asarray(z, dtype=complex)
    if ctx.regime is Regime.RATIONAL:
        return np.abs(z)
    if ctx.regime is Regime.TRIGONOMETRIC:
        return np.abs(z - 1j * np.pi * np.round(z.imag / np.pi))
    tau = ctx.tau
    b = z.imag / tau.imag
    a0, b0 = np.round(z.real - b * tau.real), np.round(b)
    return np.min([np.abs(z - (a0 + i + (b0 + j) * tau)) for i in (-1, 0, 1) for j in (-1, 0, 1)], axis=0)


def _guard(ctx: EllipticContext, name: str, z: complex):
    d = distance_to_lattice(ctx, z)
    if d < ctx.pole_guard:
        raise NearPole(name, z, d, ctx.pole_guard)


def _finite(value: complex, name: str) -> complex:
    value = complex(value)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise NonConvergent(f"{name} evaluated to a non-finite value")
    return value


# ───────── theta series ─────────
@functools.lru_cache(maxsize=64)
def _series(tau: complex, cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Half-integer indices m = k+½, |k| ≤ cutoff, and rows exp(πiτm²)(2πim)^p for p ≤ THETA_ORDER."""
    m = np.arange(-cutoff, cutoff + 1) + 0.5
    powers = (TWO_PI_I * m)[None, :] ** np.arange(THETA_ORDER + 1)[:, None]
    return m, np.exp(1j * np.pi * tau * m * m)[None, :] * powers


@functools.lru_cache(maxsize=THETA_CACHE)
def _theta_series(tau: complex, cutoff: int, z: complex) -> tuple[complex, ...]:
    m, rows = _series(tau, cutoff)

    # log|term| = −π Im(τ) m² − 2π Im(z) m; first omitted terms are k = ±(cutoff+1)
    t, y = tau.imag, z.imag
    top = float(np.max(-math.pi * t * m * m - 2 * math.pi * y * m))
    for m_out in (cutoff + 1.5, -cutoff - 0.5):
        tail = -math.pi * t * m_out * m_out - 2 * math.pi * y * m_out
        if tail - top > LOG_TAIL_TOLERANCE:
            raise NonConvergent(
                f"theta tail {math.exp(tail - top):.3g} exceeds {TAIL_TOLERANCE:g} relative at cutoff {cutoff} "
                f"(tau={tau}, z={z})"
            )

    waves = np.exp(m * (TWO_PI_I * (z + 0.5)))
    return tuple(complex(v) for v in rows @ waves)


def _theta_derivs(ctx: EllipticContext, z: complex, order: int) -> list[complex]:
    """[ϑ(z), ϑ'(z), …, ϑ^(order)(z)] from one truncated series, cached per argument."""
    if ctx.regime is not Regime.ELLIPTIC:
        raise WrongRegime(f"theta needs the elliptic regime, context is {ctx.regime.value}")
    return list(_theta_series(ctx.tau, int(ctx.series_cutoff), complex(z))[:order + 1])


@functools.lru_cache(maxsize=64)
def _theta_at_zero(ctx: EllipticContext) -> tuple[complex, complex]:
    """(ϑ'(0), ϑ'''(0)) for the context."""
    _, d1, _, d3 = _theta_derivs(ctx, 0.0, 3)
    return d1, d3


def theta(ctx: EllipticContext, z: complex) -> complex:
    """Odd Jacobi theta ϑ(z|τ) = Σ exp(πiτ(k+½)² + 2πi(k+½)(z+½))."""
    return _finite(_theta_derivs(ctx, z, 0)[0], "theta")


def theta_prime(ctx: EllipticContext, z: complex) -> complex:
    return _finite(_theta_derivs(ctx, z, 1)[1], "theta'")


# ───────── Kronecker function and companions ─────────
def kronecker_phi(ctx: EllipticContext, z: complex, q: complex) -> complex:
    """φ(z,q) with simple poles at z=0 and q=0, both of residue one."""
    _guard(ctx, "z", z)
    _guard(ctx, "q", q)
    _guard(ctx, "z+q", z + q)
    if ctx.regime is Regime.RATIONAL:
        return _finite(1 / z + 1 / q, "phi")
    if ctx.regime is Regime.TRIGONOMETRIC:
        return _finite(1 / np.tanh(z) + 1 / np.tanh(q), "phi")
    d1, _ = _theta_at_zero(ctx)
    value = d1 * _theta_derivs(ctx, z + q, 0)[0] / (_theta_derivs(ctx, z, 0)[0] * _theta_derivs(ctx, q, 0)[0])
    return _finite(value, "phi")


def e1(ctx: EllipticContext, z: complex) -> complex:
    """First Eisenstein function E1(z)."""
    _guard(ctx, "z", z)
    if ctx.regime is Regime.RATIONAL:
        return _finite(1 / z, "E1")
    if ctx.regime is Regime.TRIGONOMETRIC:
        return _finite(1 / np.tanh(z), "E1")
    th, th1 = _theta_derivs(ctx, z, 1)
    return _finite(th1 / th, "E1")


def wp(ctx: EllipticContext, z: complex) -> complex:
    """Weierstrass ℘ in the normalization of the regime table (trig keeps the +1/3)."""
    _guard(ctx, "z", z)
    if ctx.regime is Regime.RATIONAL:
        return _finite(1 / z ** 2, "wp")
    if ctx.regime is Regime.TRIGONOMETRIC:
        return _finite(1 / np.sinh(z) ** 2 + 1 / 3, "wp")
    th, th1, th2 = _theta_derivs(ctx, z, 2)
    d1, d3 = _theta_at_zero(ctx)
    e = th1 / th
    # −E1' = E1² − ϑ''/ϑ
    return _finite(e * e - th2 / th + d3 / (3 * d1), "wp")


def phi_dq(ctx: EllipticContext, z: complex, q: complex) -> complex:
    """f(z,q) = ∂_q φ(z,q) = φ(z,q)(E1(z+q) − E1(q))."""
    return kronecker_phi(ctx, z, q) * (e1(ctx, z + q) - e1(ctx, q))


def dphi_dz(ctx: EllipticContext, z: complex, q: complex) -> complex:
    """∂_z φ(z,q) = φ(z,q)(E1(z+q) − E1(z))."""
    return kronecker_phi(ctx, z, q) * (e1(ctx, z + q) - e1(ctx, z))


def phi_finite_parts(ctx: EllipticContext, z: complex) -> tuple[complex, complex]:
    """(c0, c1) of φ(z,q) = 1/q + c0 + q·c1 + O(q²)."""
    c0 = e1(ctx, z)
    return c0, (c0 * c0 - wp(ctx, z)) / 2


# ───────── numeric oracles ─────────
# These work on anything with + − and scalar ×: complex values, arrays, TensorOp.
def pole_residue(f, eps: float = POLE_FIT_EPS):
    """Residue at 0 from the symmetric two-point fit ε(f(ε) − f(−ε))/2."""
    return (f(eps) - f(-eps)) * (eps / 2)


def finite_limit(f, eps: float = POLE_FIT_EPS):
    """Regular part at 0 of a function with at most a simple pole, (f(ε) + f(−ε))/2."""
    return (f(eps) + f(-eps)) / 2


def holomorphic_derivative(f, z: complex, h: float = FD_STEP):
    """f'(z) from real and imaginary central differences; their h² errors cancel."""
    real = f(z + h) - f(z - h)
    imag = f(z + 1j * h) - f(z - 1j * h)
    return (real - imag * 1j) / (4 * h)
