# lax.py – GL(NM) Lax pair, inertia functionals and equations of motion
"""Interacting relativistic tops: N×N spin blocks 𝒮^{ij} on M particles.
----------------------------------------------------------------
* ℒ^{ij}(z) = tr₂(R^z(q_ij+η) P 𝒮^{ij}₂)
* ℳ^{ij}(z) = −δ^{ij} tr₂(R^{z,(0)} P 𝒮^{ii}₂) − (1−δ^{ij}) tr₂(R^z(q_ij) P 𝒮^{ij}₂)
* J^η(X) = tr₂((R^{(0),η} − r^{(0)}) X₂),  J^{η,q}(X) = tr₂((R^{(0),q+η} − R^{(0),q}) X₂)
* 𝒮̇ = [𝒮, 𝒦] with 𝒦^{ii} = J^η(𝒮^{ii}), 𝒦^{ij} = J^{η,q_ij}(𝒮^{ij});  q̈_i = tr 𝒮̇^{ii}
* reference forms: spin Ruijsenaars–Schneider (N=1), relativistic top (M=1), rank-one tops
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

import numpy as np

from errors import ConfigError, DimensionMismatch, NearPole, NotRankOne, OffShell
from specfun import EllipticContext, distance_to_lattice, e1, kronecker_phi, pole_residue
from tensorops import BlockMatrix, TensorOp, matnorm, permutation_op, tr2_contract

if TYPE_CHECKING:
    from rmatrix import RProvider

logger = logging.getLogger(__name__)

# ───────── constants ─────────
ON_SHELL_TOL   = 1e-10
RANK_ONE_TOL   = 1e-10
STATE_GUARD    = 0.1
MAX_REDRAWS    = 10_000


# ───────── phase space ─────────
@dataclass(frozen=True, eq=False)
class PhaseState:
    """Positions q, velocities qdot and spin blocks s[i, j] = 𝒮^{ij} ∈ Mat(N)."""

    eta: complex
    q: np.ndarray
    s: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=complex).reshape(-1)
        s = np.asarray(self.s, dtype=complex)
        qdot = np.asarray(self.qdot, dtype=complex).reshape(-1)
        m = q.size
        if s.ndim != 4 or s.shape[:2] != (m, m) or s.shape[2] != s.shape[3] or qdot.size != m:
            raise DimensionMismatch(f"inconsistent state shapes q{q.shape} s{s.shape} qdot{qdot.shape}")
        object.__setattr__(self, "eta", complex(self.eta))
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "qdot", qdot)

    @classmethod
    def on_shell(cls, eta: complex, q, s) -> "PhaseState":
        s = np.asarray(s, dtype=complex)
        return cls(eta, q, s, np.trace(s, axis1=2, axis2=3).diagonal().copy())

    @property
    def n(self) -> int:
        return self.s.shape[2]

    @property
    def m(self) -> int:
        return self.s.shape[0]

    @property
    def spin(self) -> BlockMatrix:
        return BlockMatrix(self.s)

    @property
    def traces(self) -> np.ndarray:
        """tr 𝒮^{ii}."""
        return np.trace(self.s, axis1=2, axis2=3).diagonal()

    @property
    def mu(self) -> np.ndarray:
        """μ_i = q̇_i − tr 𝒮^{ii}."""
        return self.qdot - self.traces

    def resynced(self) -> "PhaseState":
        return replace(self, qdot=self.traces.copy())

    def pair_q(self, i: int, j: int) -> complex:
        return self.q[i] - self.q[j]


def pole_check(ctx: EllipticContext, state: PhaseState, guard: float | None = None):
    """Raise NearPole naming the first pair with q_ij or q_ij+η too close to the singular set."""
    guard = ctx.pole_guard if guard is None else guard
    for i in range(state.m):
        for j in range(state.m):
            q = state.pair_q(i, j)
            args = [(f"q{i}{j}+eta", q + state.eta)] + ([(f"q{i}{j}", q)] if i != j else [])
            for name, value in args:
                d = distance_to_lattice(ctx, value)
                if d < guard:
                    raise NearPole(name, value, d, guard, pair=(i, j))


def _with_pair(exc: NearPole, i: int, j: int) -> NearPole:
    if exc.pair is None:
        exc.pair = (i, j)
    return exc


# ───────── Lax pair ─────────
def build_L(provider: RProvider, state: PhaseState, z: complex) -> BlockMatrix:
    perm = provider.permutation()
    out = BlockMatrix.zeros(state.n, state.m)
    for i in range(state.m):
        for j in range(state.m):
            try:
                op = provider.quantum(z, state.pair_q(i, j) + state.eta) @ perm
            except NearPole as exc:
                raise _with_pair(exc, i, j)
            out.block_set(i, j, tr2_contract(op, state.s[i, j]))
    return out


def build_M(provider: RProvider, state: PhaseState, z: complex) -> BlockMatrix:
    perm = provider.permutation()
    out = BlockMatrix.zeros(state.n, state.m)
    diagonal_op = None
    for i in range(state.m):
        for j in range(state.m):
            try:
                if i == j:
                    if diagonal_op is None:
                        diagonal_op = provider.finite_part_arg(z) @ perm
                    op = diagonal_op
                else:
                    op = provider.quantum(z, state.pair_q(i, j)) @ perm
            except NearPole as exc:
                raise _with_pair(exc, i, j)
            out.block_set(i, j, -tr2_contract(op, state.s[i, j]))
    return out


def residues(provider: RProvider, state: PhaseState) -> tuple[np.ndarray, np.ndarray]:
    """(Res ℒ, Res ℳ) at z = 0 from symmetric pole fits, as dense NM×NM matrices."""
    res_l = pole_residue(lambda z: build_L(provider, state, z).assemble())
    res_m = pole_residue(lambda z: build_M(provider, state, z).assemble())
    return res_l, res_m


# ───────── inertia functionals ─────────
def inertia_eta(provider: RProvider, eta: complex) -> TensorOp:
    """J_12 = R^{(0),η} − r^{(0)}."""
    return provider.finite_part_arg(eta) - provider.classical_finite()


def inertia_eta_q(provider: RProvider, eta: complex, q: complex) -> TensorOp:
    """J^{η,q}_12 = R^{(0),q+η} − R^{(0),q}."""
    return provider.finite_part_arg(q + eta) - provider.finite_part_arg(q)


def J_eta(provider: RProvider, eta: complex, x: np.ndarray) -> np.ndarray:
    return tr2_contract(inertia_eta(provider, eta), x)


def J_eta_q(provider: RProvider, eta: complex, q: complex, x: np.ndarray) -> np.ndarray:
    return tr2_contract(inertia_eta_q(provider, eta, q), x)


# ───────── equations of motion ─────────
def inertia_blocks(provider: RProvider, state: PhaseState) -> BlockMatrix:
    """𝒦^{ii} = J^η(𝒮^{ii}), 𝒦^{ij} = J^{η,q_ij}(𝒮^{ij})."""
    out = BlockMatrix.zeros(state.n, state.m)
    j_diag = inertia_eta(provider, state.eta)
    for i in range(state.m):
        for j in range(state.m):
            try:
                op = j_diag if i == j else inertia_eta_q(provider, state.eta, state.pair_q(i, j))
            except NearPole as exc:
                raise _with_pair(exc, i, j)
            out.block_set(i, j, tr2_contract(op, state.s[i, j]))
    return out


def eom_rhs(provider: RProvider, state: PhaseState, strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """(q̇, 𝒮̇). Block form of the diagonal and off-diagonal equations: 𝒮̇ = [𝒮, 𝒦]."""
    if strict:
        drift = float(np.max(np.abs(state.mu))) if state.m else 0.0
        if drift > ON_SHELL_TOL:
            raise OffShell(f"max |qdot - tr S^ii| = {drift:.3e} exceeds {ON_SHELL_TOL:g}")
    n, m = state.n, state.m
    s_full = state.spin.assemble()
    k_full = inertia_blocks(provider, state).assemble()
    ds = BlockMatrix.from_dense(s_full @ k_full - k_full @ s_full, n, m).blocks
    return state.qdot.copy(), ds


def lax_residual(provider: RProvider, state: PhaseState, z: complex, include_extra: bool = True) -> float:
    """‖ℒ̇ − [ℒ, ℳ] − Σ(μ_i − μ_j) E_ij⊗tr₂(F^z(q_ij+η) P 𝒮^{ij}₂)‖ with ℒ̇ by the chain rule."""
    perm = provider.permutation()
    _, ds = eom_rhs(provider, state, strict=False)
    mu = state.mu
    l_full = build_L(provider, state, z).assemble()
    m_full = build_M(provider, state, z).assemble()
    l_dot = BlockMatrix.zeros(state.n, state.m)
    extra = BlockMatrix.zeros(state.n, state.m)
    for i in range(state.m):
        for j in range(state.m):
            arg = state.pair_q(i, j) + state.eta
            f_term = tr2_contract(provider.f_derivative(z, arg) @ perm, state.s[i, j])
            r_term = tr2_contract(provider.quantum(z, arg) @ perm, ds[i, j])
            l_dot.block_set(i, j, (state.qdot[i] - state.qdot[j]) * f_term + r_term)
            extra.block_set(i, j, (mu[i] - mu[j]) * f_term)
    residual = l_dot.assemble() - (l_full @ m_full - m_full @ l_full)
    if include_extra:
        residual = residual - extra.assemble()
    return matnorm(residual)


# ───────── rank-one reduction ─────────
def rank1_check(state: PhaseState) -> float:
    """max over i≠k of ‖𝒮^{ik}₁P𝒮^{ki}₁ − 𝒮^{ii}₁𝒮^{kk}₂‖; zero on rank-one spin matrices."""
    eye = np.eye(state.n)
    perm = permutation_op(state.n).mat
    worst = 0.0
    for i in range(state.m):
        for k in range(state.m):
            if i == k:
                continue
            lhs = np.kron(state.s[i, k], eye) @ perm @ np.kron(state.s[k, i], eye)
            rhs = np.kron(state.s[i, i], state.s[k, k])
            worst = max(worst, matnorm(lhs - rhs))
    return worst


def rank1_eom(provider: RProvider, state: PhaseState) -> tuple[np.ndarray, np.ndarray]:
    """(q̇, 𝒮̇^{ii}) from the diagonal blocks alone; valid on rank-one data."""
    defect = rank1_check(state)
    if defect > RANK_ONE_TOL:
        raise NotRankOne(f"rank-one defect {defect:.3e} exceeds {RANK_ONE_TOL:g}")
    perm = provider.permutation()
    j_diag = inertia_eta(provider, state.eta)
    ds = np.zeros((state.m, state.n, state.n), dtype=complex)
    for i in range(state.m):
        s_ii = state.s[i, i]
        j_ii = tr2_contract(j_diag, s_ii)
        total = s_ii @ j_ii - j_ii @ s_ii
        for k in range(state.m):
            if k == i:
                continue
            j_ki = inertia_eta_q(provider, state.eta, state.pair_q(k, i))
            j_ik = inertia_eta_q(provider, state.eta, state.pair_q(i, k))
            tilde = tr2_contract(perm @ j_ki, state.s[k, k])      # J̃(X) = tr₂(P J X₂)
            breve = tr2_contract(j_ik @ perm, state.s[k, k])      # J̆(X) = tr₂(J P X₂)
            total = total + s_ii @ tilde - breve @ s_ii
        ds[i] = total
    return state.qdot.copy(), ds


# ───────── N=1: spin Ruijsenaars–Schneider ─────────
def _scalar_spin(state: PhaseState) -> np.ndarray:
    if state.n != 1:
        raise DimensionMismatch(f"spin RS forms need N=1, state has N={state.n}")
    return state.s[:, :, 0, 0]


def spin_rs_L(ctx: EllipticContext, state: PhaseState, z: complex) -> np.ndarray:
    """L_ij = S_ij φ(z, q_ij+η)."""
    s = _scalar_spin(state)
    m = state.m
    return np.array([[s[i, j] * kronecker_phi(ctx, z, state.pair_q(i, j) + state.eta)
                      for j in range(m)] for i in range(m)])


def spin_rs_M(ctx: EllipticContext, state: PhaseState, z: complex) -> np.ndarray:
    """M_ij = −δ_ij(E1(z)+E1(η))S_ii − (1−δ_ij)S_ij φ(z, q_ij)."""
    s = _scalar_spin(state)
    m = state.m
    out = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            if i == j:
                out[i, i] = -(e1(ctx, z) + e1(ctx, state.eta)) * s[i, i]
            else:
                out[i, j] = -s[i, j] * kronecker_phi(ctx, z, state.pair_q(i, j))
    return out


def spin_rs_rhs(ctx: EllipticContext, state: PhaseState) -> np.ndarray:
    """Ṡ of the spin RS model in the gauge of spin_rs_M."""
    s = _scalar_spin(state)
    m, eta = state.m, state.eta

    def gap(q):
        return e1(ctx, q + eta) - e1(ctx, q)

    ds = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            if i == j:
                ds[i, i] = -sum(
                    s[i, k] * s[k, i] * (e1(ctx, state.pair_q(i, k) + eta) + e1(ctx, state.pair_q(i, k) - eta)
                                         - 2 * e1(ctx, state.pair_q(i, k)))
                    for k in range(m) if k != i)
            else:
                ds[i, j] = (sum(s[i, k] * s[k, j] * gap(state.pair_q(k, j)) for k in range(m) if k != j)
                            - sum(s[i, k] * s[k, j] * gap(state.pair_q(i, k)) for k in range(m) if k != i))
    return ds


def spin_rs_gauge(ctx: EllipticContext, state: PhaseState) -> tuple[np.ndarray, np.ndarray]:
    """(ΔM, ΔṠ) taking the spin RS gauge to the block construction: E1(η)·diag(S) and E1(η)S_ij(S_jj − S_ii)."""
    s = _scalar_spin(state)
    c = e1(ctx, state.eta)
    d = np.diag(s)
    return c * np.diag(d), c * s * (d[None, :] - d[:, None])


# ───────── M=1: relativistic top ─────────
def _single_block(state: PhaseState) -> np.ndarray:
    if state.m != 1:
        raise DimensionMismatch(f"top forms need M=1, state has M={state.m}")
    return state.s[0, 0]


def top_L(provider: RProvider, state: PhaseState, z: complex) -> np.ndarray:
    """L(z) = tr₂(R^η(z) S₂)."""
    return tr2_contract(provider.quantum(state.eta, z), _single_block(state))


def top_M(provider: RProvider, state: PhaseState, z: complex) -> np.ndarray:
    """M(z) = −tr₂(r(z) S₂)."""
    return -tr2_contract(provider.classical_r(z), _single_block(state))


def top_rhs(provider: RProvider, state: PhaseState) -> np.ndarray:
    """Ṡ = [S, J(S)], J(S)_ij = Σ J_{ij,kl} S_lk with J_12 = R^{η,(0)} − r^{(0)}."""
    s = _single_block(state)
    j_s = np.einsum("ijkl,lk->ij", inertia_eta(provider, state.eta).components(), s)
    return s @ j_s - j_s @ s


# ───────── initial data ─────────
def _positions(ctx: EllipticContext | None, m: int, eta: complex, rng: np.random.Generator,
               box: float) -> np.ndarray:
    for _ in range(MAX_REDRAWS):
        q = rng.uniform(-box, box, m) + 1j * rng.uniform(-box, box, m)
        if ctx is None:
            return q
        try:
            pole_check(ctx, PhaseState(eta, q, np.zeros((m, m, 1, 1)), np.zeros(m)), STATE_GUARD)
            return q
        except NearPole:
            continue
    raise ConfigError(f"could not place {m} particles {STATE_GUARD} away from the singular set")


def random_state(n: int, m: int, eta: complex, seed: int, scale: float = 1.0,
                 ctx: EllipticContext | None = None, box: float = 0.5) -> PhaseState:
    """Seeded on-shell state with complex Gaussian spin blocks scaled to max-abs `scale`."""
    rng = np.random.default_rng(seed)
    q = _positions(ctx, m, eta, rng, box)
    s = rng.standard_normal((m, m, n, n)) + 1j * rng.standard_normal((m, m, n, n))
    s *= scale / np.max(np.abs(s))
    return PhaseState.on_shell(eta, q, s)


def rank1_state(n: int, m: int, eta: complex, seed: int, scale: float = 1.0,
                ctx: EllipticContext | None = None, box: float = 0.5) -> PhaseState:
    """Seeded on-shell state with 𝒮 = ξψᵀ for random NM-vectors ξ, ψ."""
    rng = np.random.default_rng(seed)
    q = _positions(ctx, m, eta, rng, box)
    xi = rng.standard_normal(n * m) + 1j * rng.standard_normal(n * m)
    psi = rng.standard_normal(n * m) + 1j * rng.standard_normal(n * m)
    full = np.outer(xi, psi)
    full *= scale / np.max(np.abs(full))
    return PhaseState.on_shell(eta, q, BlockMatrix.from_dense(full, n, m).blocks)


# ───────── snapshots ─────────
def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def state_to_json(state: PhaseState) -> dict:
    return {
        "N": state.n,
        "M": state.m,
        "eta": _pair(state.eta),
        "q": [_pair(v) for v in state.q],
        "qdot": [_pair(v) for v in state.qdot],
        "S": np.stack([state.s.real, state.s.imag], axis=-1).tolist(),
    }


def state_from_json(data: dict) -> PhaseState:
    try:
        s = np.asarray(data["S"], dtype=float)
        state = PhaseState(
            complex(*data["eta"]),
            [complex(*v) for v in data["q"]],
            s[..., 0] + 1j * s[..., 1],
            [complex(*v) for v in data["qdot"]],
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise DimensionMismatch(f"malformed state snapshot: {exc}") from exc
    if (state.n, state.m) != (data.get("N", state.n), data.get("M", state.m)):
        raise DimensionMismatch(f"snapshot header N={data.get('N')} M={data.get('M')} disagrees with S")
    return state
