# tensorops.py – dense linear algebra on C^n, C^n⊗C^n, C^n⊗C^n⊗C^n and block matrices
"""Tensor operators in the component form R_{ij,kl} and the contractions the Lax pair uses.

A TensorOp stores the n²×n² matrix of Σ R_{ij,kl} E_ij⊗E_kl, so that
`kron(X, Y)` is X⊗Y and the product of operators is the matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import DimensionMismatch, IndexOutOfRange

# ───────── constants ─────────
SPACES = {"1": 0, "2": 1, "3": 2}


def matnorm(x) -> float:
    """Max absolute entry; 0 for an empty or zero array."""
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


@dataclass(frozen=True, eq=False)
class TensorOp:
    """Linear operator on C^n⊗C^n."""

    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=complex)
        side = mat.shape[0]
        n = int(round(np.sqrt(side)))
        if mat.ndim != 2 or mat.shape != (side, side) or n * n != side or n == 0:
            raise DimensionMismatch(f"TensorOp needs an n²×n² matrix, got shape {mat.shape}")
        object.__setattr__(self, "mat", mat)

    @property
    def n(self) -> int:
        return int(round(np.sqrt(self.mat.shape[0])))

    @classmethod
    def from_components(cls, r: np.ndarray) -> "TensorOp":
        """Build from r[i, j, k, l] = R_{ij,kl}."""
        r = np.asarray(r, dtype=complex)
        n = r.shape[0]
        return cls(r.transpose(0, 2, 1, 3).reshape(n * n, n * n))

    def components(self) -> np.ndarray:
        n = self.n
        return self.mat.reshape(n, n, n, n).transpose(0, 2, 1, 3)

    def _check(self, other: "TensorOp"):
        if other.n != self.n:
            raise DimensionMismatch(f"tensor dimensions {self.n} and {other.n} differ")

    def __add__(self, other: "TensorOp") -> "TensorOp":
        self._check(other)
        return TensorOp(self.mat + other.mat)

    def __sub__(self, other: "TensorOp") -> "TensorOp":
        self._check(other)
        return TensorOp(self.mat - other.mat)

    def __neg__(self) -> "TensorOp":
        return TensorOp(-self.mat)

    def __mul__(self, scalar: complex) -> "TensorOp":
        return TensorOp(self.mat * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "TensorOp":
        return TensorOp(self.mat / scalar)

    def __matmul__(self, other: "TensorOp") -> "TensorOp":
        return compose(self, other)


# ───────── two-space constructors ─────────
def identity_op(n: int) -> TensorOp:
    return TensorOp(np.eye(n * n, dtype=complex))


def permutation_op(n: int) -> TensorOp:
    """P_12 = Σ E_ij⊗E_ji, components δ_il δ_jk."""
    if n < 1:
        raise DimensionMismatch(f"dimension must be positive, got {n}")
    eye = np.eye(n)
    return TensorOp.from_components(np.einsum("il,jk->ijkl", eye, eye))


def kron_op(x: np.ndarray, y: np.ndarray) -> TensorOp:
    """X⊗Y."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"factor shapes {x.shape} and {y.shape} differ")
    return TensorOp(np.kron(x, y))


def compose(a: TensorOp, b: TensorOp) -> TensorOp:
    a._check(b)
    return TensorOp(a.mat @ b.mat)


def swap_spaces(a: TensorOp) -> TensorOp:
    """U_21 = P U_12 P."""
    p = permutation_op(a.n).mat
    return TensorOp(p @ a.mat @ p)


def tr2_contract(a: TensorOp, s: np.ndarray) -> np.ndarray:
    """tr_2(A_12 S_2): result_ij = Σ_kl A_{ij,kl} S_lk."""
    s = np.asarray(s, dtype=complex)
    n = a.n
    if s.shape != (n, n):
        raise DimensionMismatch(f"expected a {n}×{n} matrix, got {s.shape}")
    return np.einsum("ikjl,lk->ij", a.mat.reshape(n, n, n, n), s)


# ───────── three-space embeddings ─────────
def act_space(a: TensorOp, which: str) -> np.ndarray:
    """Embed A into C^n⊗C^n⊗C^n acting on the ordered pair of spaces `which` ("12", "13", "23", "21", …)."""
    if len(which) != 2 or which[0] == which[1] or not set(which) <= set(SPACES):
        raise DimensionMismatch(f"cannot embed into spaces {which!r}")
    n = a.n
    p, q = SPACES[which[0]], SPACES[which[1]]
    r = 3 - p - q
    outs, ins = [0, 1, 2], [3, 4, 5]
    full = np.einsum(
        a.mat.reshape(n, n, n, n), [outs[p], outs[q], ins[p], ins[q]],
        np.eye(n), [outs[r], ins[r]],
        outs + ins,
    )
    return full.reshape(n ** 3, n ** 3)


def partial_trace(op3: np.ndarray, space: str) -> TensorOp:
    """Trace a three-space operator over `space`; the remaining spaces keep their order."""
    op3 = np.asarray(op3, dtype=complex)
    n = int(round(op3.shape[0] ** (1 / 3)))
    if op3.shape != (n ** 3, n ** 3):
        raise DimensionMismatch(f"expected an n³×n³ operator, got {op3.shape}")
    s = SPACES[space]
    traced = np.trace(op3.reshape((n,) * 6), axis1=s, axis2=s + 3)
    return TensorOp(traced.reshape(n * n, n * n))


# ───────── block matrices ─────────
@dataclass(eq=False)
class BlockMatrix:
    """NM×NM matrix as an M×M grid of N×N blocks, stored as blocks[i, j] ∈ Mat(N)."""

    blocks: np.ndarray

    def __post_init__(self):
        self.blocks = np.asarray(self.blocks, dtype=complex)
        if self.blocks.ndim != 4 or self.blocks.shape[0] != self.blocks.shape[1] \
                or self.blocks.shape[2] != self.blocks.shape[3]:
            raise DimensionMismatch(f"blocks must have shape (M, M, N, N), got {self.blocks.shape}")

    @classmethod
    def zeros(cls, n: int, m: int) -> "BlockMatrix":
        return cls(np.zeros((m, m, n, n), dtype=complex))

    @classmethod
    def from_dense(cls, full: np.ndarray, n: int, m: int) -> "BlockMatrix":
        full = np.asarray(full, dtype=complex)
        if full.shape != (n * m, n * m):
            raise DimensionMismatch(f"expected {(n * m, n * m)}, got {full.shape}")
        return cls(full.reshape(m, n, m, n).transpose(0, 2, 1, 3))

    @property
    def n(self) -> int:
        return self.blocks.shape[2]

    @property
    def m(self) -> int:
        return self.blocks.shape[0]

    def _index(self, i: int, j: int):
        if not (0 <= i < self.m and 0 <= j < self.m):
            raise IndexOutOfRange(f"block ({i}, {j}) outside a {self.m}×{self.m} grid")

    def block_get(self, i: int, j: int) -> np.ndarray:
        self._index(i, j)
        return self.blocks[i, j].copy()

    def block_set(self, i: int, j: int, x: np.ndarray):
        self._index(i, j)
        x = np.asarray(x, dtype=complex)
        if x.shape != (self.n, self.n):
            raise DimensionMismatch(f"block must be {self.n}×{self.n}, got {x.shape}")
        self.blocks[i, j] = x

    def assemble(self) -> np.ndarray:
        """Σ E_ij ⊗ X^ij as a dense NM×NM matrix."""
        m, n = self.m, self.n
        return self.blocks.transpose(0, 2, 1, 3).reshape(m * n, m * n)
