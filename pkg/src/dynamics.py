# dynamics.py – fixed-step RK4 for the interacting tops and conservation monitoring
"""Time integration of (q, q̇, 𝒮) and drift of I_k(z) = tr ℒ(z)^k.
----------------------------------------------------------------
* the stepped state is the complex vector (q, q̇, 𝒮) viewed as real pairs
* q̈_i = tr 𝒮̇^{ii}; q̇ is re-synchronized to tr 𝒮^{ii} after every step
* μ is measured before the re-synchronization, rank-one defect on recorded states
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from errors import ConfigError, NearPole, OffShell, SingularConfiguration
from lax import ON_SHELL_TOL, PhaseState, build_L, eom_rhs, pole_check, rank1_check
from specfun import EllipticContext, distance_to_lattice

if TYPE_CHECKING:
    from rmatrix import RProvider

logger = logging.getLogger(__name__)

# ───────── constants ─────────
DEFAULT_ORDERS = (1, 2, 3, 4)
DRIFT_FLOOR    = 1e-300


@dataclass(frozen=True)
class TrajectoryConfig:
    dt: float
    steps: int
    z_samples: tuple = (0.3 + 0.2j,)
    orders: tuple = DEFAULT_ORDERS
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.steps < 0 or self.record_every < 1:
            raise ConfigError(f"steps={self.steps} record_every={self.record_every} out of range")
        if not self.z_samples or min(self.orders, default=0) < 1:
            raise ConfigError("need at least one spectral point and orders k >= 1")
        object.__setattr__(self, "z_samples", tuple(complex(z) for z in self.z_samples))
        object.__setattr__(self, "orders", tuple(int(k) for k in self.orders))

    def check_spectral_points(self, ctx: EllipticContext):
        """Every z_sample must keep the context pole guard away from the lattice."""
        for z in self.z_samples:
            d = distance_to_lattice(ctx, z)
            if d < ctx.pole_guard:
                raise ConfigError(f"z_sample {z} is {d:.2e} from the lattice (guard {ctx.pole_guard:g})")


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    invariants: list = field(default_factory=list)    # per record: (len(z), len(orders)) complex
    mu: list = field(default_factory=list)            # per step: max |μ_i| before re-sync
    rank1: list = field(default_factory=list)         # per record


@dataclass
class ConservationReport:
    z_samples: tuple
    orders: tuple
    initial: np.ndarray
    max_drift: np.ndarray
    relative_drift: np.ndarray

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative_drift)) if self.relative_drift.size else 0.0

    def rows(self) -> list[dict]:
        out = []
        for a, z in enumerate(self.z_samples):
            for b, k in enumerate(self.orders):
                out.append({"k": k, "z": z, "initial": complex(self.initial[a, b]),
                            "max_drift": float(self.max_drift[a, b]),
                            "relative_drift": float(self.relative_drift[a, b])})
        return out


# ───────── state packing ─────────
def pack(state: PhaseState) -> np.ndarray:
    """(q, q̇, 𝒮) as one real vector of interleaved (re, im) pairs."""
    flat = np.concatenate([state.q, state.qdot, state.s.reshape(-1)])
    return flat.view(float).copy()


def unpack(y: np.ndarray, like: PhaseState) -> PhaseState:
    z = np.ascontiguousarray(y, dtype=float).view(complex)
    m = like.m
    return PhaseState(like.eta, z[:m], z[2 * m:].reshape(like.s.shape), z[m:2 * m])


def rhs_real(provider: RProvider, like: PhaseState):
    """f(t, y) for the packed state; suitable for scipy.integrate.solve_ivp."""

    def f(t, y):
        state = unpack(y, like)
        dq, ds = eom_rhs(provider, state, strict=False)
        ddq = np.trace(ds, axis1=2, axis2=3).diagonal()
        return pack(PhaseState(state.eta, dq, ds, ddq))

    return f


# ───────── stepping ─────────
def _step(provider: RProvider, state: PhaseState, dt: float, t: float) -> PhaseState:
    f = rhs_real(provider, state)
    y = pack(state)
    try:
        pole_check(provider.ctx, state)
        k1 = f(t, y)
        k2 = f(t + dt / 2, y + dt / 2 * k1)
        k3 = f(t + dt / 2, y + dt / 2 * k2)
        k4 = f(t + dt, y + dt * k3)
    except NearPole as exc:
        raise SingularConfiguration(t, exc.pair, str(exc)) from exc
    return unpack(y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), state)


def rk4_step(provider: RProvider, state: PhaseState, dt: float, t: float = 0.0,
             resync: bool = True) -> PhaseState:
    new = _step(provider, state, dt, t)
    return new.resynced() if resync else new


def invariants(provider: RProvider, state: PhaseState, z_samples, orders=DEFAULT_ORDERS) -> np.ndarray:
    """I_k(z) = tr ℒ(z)^k, shape (len(z_samples), len(orders))."""
    out = np.zeros((len(z_samples), len(orders)), dtype=complex)
    top = max(orders)
    for a, z in enumerate(z_samples):
        lax_l = build_L(provider, state, z).assemble()
        power, traces = np.eye(lax_l.shape[0], dtype=complex), {}
        for k in range(1, top + 1):
            power = power @ lax_l
            traces[k] = np.trace(power)
        out[a] = [traces[k] for k in orders]
    return out


def integrate(provider: RProvider, state: PhaseState, cfg: TrajectoryConfig) -> tuple[Trajectory, ConservationReport]:
    cfg.check_spectral_points(provider.ctx)
    drift = float(np.max(np.abs(state.mu))) if state.m else 0.0
    if drift > ON_SHELL_TOL:
        raise OffShell(f"initial state is off-shell by {drift:.3e}")
    if max(cfg.orders) > state.n * state.m:
        logger.warning("orders above NM=%d are dependent on lower ones", state.n * state.m)

    traj = Trajectory()

    def record(t: float, current: PhaseState):
        try:
            values = invariants(provider, current, cfg.z_samples, cfg.orders)
        except NearPole as exc:
            raise SingularConfiguration(t, exc.pair, str(exc)) from exc
        traj.times.append(t)
        traj.states.append(current)
        traj.invariants.append(values)
        traj.rank1.append(rank1_check(current))

    record(0.0, state)
    for step in range(1, cfg.steps + 1):
        t = (step - 1) * cfg.dt
        raw = _step(provider, state, cfg.dt, t)
        traj.mu.append(float(np.max(np.abs(raw.mu))) if raw.m else 0.0)
        state = raw.resynced()
        if step % cfg.record_every == 0 or step == cfg.steps:
            record(step * cfg.dt, state)
            logger.debug("t=%.4f  mu=%.2e", step * cfg.dt, traj.mu[-1])

    values = np.array(traj.invariants)
    initial = values[0]
    max_drift = np.max(np.abs(values - initial), axis=0)
    relative = max_drift / np.maximum(np.abs(initial), DRIFT_FLOOR)
    report = ConservationReport(cfg.z_samples, cfg.orders, initial, max_drift, relative)
    logger.info("integrated %d steps of dt=%g: max relative drift %.3e, max |mu| %.3e",
                cfg.steps, cfg.dt, report.max_relative, constraint_drift(traj))
    return traj, report


def constraint_drift(trajectory: Trajectory) -> float:
    return max(trajectory.mu, default=0.0)


def rank1_drift(trajectory: Trajectory) -> float:
    return max(trajectory.rank1, default=0.0)
