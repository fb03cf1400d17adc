"""Operators on a finite c0-sum of l1 blocks.

Coordinate ``k`` of block ``l`` (``1 <= l <= L``, ``0 <= k < K``) has global
index ``(l - 1) * K + k``.  With the default ``eps_l = 2^-l`` every matrix
entry is dyadic, so all identities are checked in exact arithmetic.
"""

from __future__ import annotations

import io
import json
import random
from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Dict, List, Sequence

import numpy as np

from .density import BlockVector, c0_sum_of_ell1
from .errors import ArithmeticModeError, ConstructionError, ParameterError
from .linop import SparseOperator, as_exact, dyadic_parts


@dataclass(frozen=True)
class DSumSpace:
    L: int
    K: int
    eps_seq: tuple

    def __post_init__(self):
        if self.L < 1 or self.K < 2:
            raise ParameterError("need L >= 1 blocks of K >= 2 coordinates")
        if len(self.eps_seq) != self.L or any(e <= 0 for e in self.eps_seq):
            raise ParameterError("eps_seq needs L positive entries")

    @classmethod
    def dyadic(cls, L: int, K: int) -> "DSumSpace":
        return cls(L, K, tuple(Fraction(1, 2**l) for l in range(1, L + 1)))

    @classmethod
    def from_json(cls, text: str | dict) -> "DSumSpace":
        d = json.loads(text) if isinstance(text, str) else dict(text)
        rule = d.get("eps_rule", "dyadic")
        if rule == "dyadic":
            return cls.dyadic(d["L"], d["K"])
        if isinstance(rule, list):
            return cls(d["L"], d["K"], tuple(as_exact(e) for e in rule))
        raise ParameterError(f"unknown eps_rule {rule!r}")

    @property
    def dim(self) -> int:
        return self.L * self.K

    @property
    def tag(self):
        return c0_sum_of_ell1(self.K)

    def index(self, l: int, k: int) -> int:
        if not (1 <= l <= self.L and 0 <= k < self.K):
            raise ParameterError(f"coordinate ({l}, {k}) outside the space")
        return (l - 1) * self.K + k

    def block(self, x: Sequence, l: int) -> list:
        return list(x[(l - 1) * self.K: l * self.K])

    def vector(self, coords: Sequence) -> BlockVector:
        return BlockVector(list(coords), self.tag)


def _block_diag(space: DSumSpace, block_cols) -> SparseOperator:
    cols = {}
    for l in range(1, space.L + 1):
        off = (l - 1) * space.K
        for k, col in block_cols(l).items():
            cols[off + k] = {off + r: v for r, v in col.items()}
    return SparseOperator(space.dim, cols, True)


def shift_plus_identity(K: int, scale: Fraction) -> Dict[int, Dict[int, Fraction]]:
    """Columns of ``I + scale * B`` with ``B e_k = e_{k-1}``."""
    cols = {}
    for k in range(K):
        col = {k: Fraction(1)}
        if k:
            col[k - 1] = scale
        cols[k] = col
    return cols


@lru_cache(maxsize=8)
def v_columns(K: int) -> Dict[int, Dict[int, Fraction]]:
    """``V e_j = sum_{k=1}^{K-1} 2^{-jk} e_k`` for ``j >= 1``; ``V e_0 = 0``."""
    return {j: {k: Fraction(1, 2 ** (j * k)) for k in range(1, K)} for j in range(1, K)}


def v_apply(y: Sequence[Fraction], K: int) -> List[Fraction]:
    """``V y`` on one block using a common power-of-two denominator per output."""
    terms = []
    for j in range(1, K):
        if y[j]:
            num, lg = dyadic_parts(y[j])
            terms.append((j, num, lg))
    out = [Fraction(0)] * K
    if not terms:
        return out
    for k in range(1, K):
        E = max(j * k + lg for j, _, lg in terms)
        out[k] = Fraction(sum(num << (E - j * k - lg) for j, num, lg in terms), 1 << E)
    return out


def r0_apply(space: DSumSpace, x: Sequence) -> List[Fraction]:
    """``R0 x`` without materializing ``R0``."""
    vy = v_apply([as_exact(a) for a in space.block(x, 1)], space.K)
    out = []
    for l in range(1, space.L + 1):
        e = as_exact(space.eps_seq[l - 1])
        out.extend(e * a for a in vy)
    return out


def build_dsum_ops(space: DSumSpace) -> Dict[str, SparseOperator]:
    return dict(_build_dsum_ops(space))


@lru_cache(maxsize=8)
def _build_dsum_ops(space: DSumSpace) -> Dict[str, SparseOperator]:
    K = space.K
    T = _block_diag(space, lambda l: shift_plus_identity(K, Fraction(1, 2**l)))
    T1 = _block_diag(space, lambda l: shift_plus_identity(K, Fraction(1)))
    D = _block_diag(space, lambda l: {k: {k: Fraction(1, 2 ** (l * k))} for k in range(K)})
    V = SparseOperator(K, v_columns(K), True)
    cols = {}
    for j, vcol in v_columns(K).items():
        col = {}
        for l in range(1, space.L + 1):
            e = as_exact(space.eps_seq[l - 1])
            for k, a in vcol.items():
                col[space.index(l, k)] = e * a
        cols[space.index(1, j)] = col
    R0 = SparseOperator(space.dim, cols, True)
    return {"T": T, "T1": T1, "D": D, "V": V, "R0": R0}


def never_raises_index(op: SparseOperator, K: int) -> bool:
    """No column sends ``e_k`` of a block outside ``span(e_0..e_k)`` of the same block."""
    for r, c, _ in op.entries():
        if r // K != c // K or r % K > c % K:
            return False
    return True


@dataclass
class IntertwiningReport:
    per_block: Dict[int, bool]
    assembled: bool

    @property
    def passed(self) -> bool:
        return self.assembled and all(self.per_block.values())


def check_intertwining(space: DSumSpace, l: int | Sequence[int] | None = None,
                       D: SparseOperator | None = None) -> IntertwiningReport:
    """``(I+B) D(l) == D(l) (I + 2^-l B)`` per block and ``T1 D == D T`` overall."""
    ops = build_dsum_ops(space)
    D = ops["D"] if D is None else D
    if not D.exact:
        raise ArithmeticModeError("intertwining is checked in exact arithmetic only")
    ls = range(1, space.L + 1) if l is None else ([l] if isinstance(l, int) else list(l))
    K = space.K
    per = {}
    for ll in ls:
        off = (ll - 1) * K
        Dl = SparseOperator(K, {k - off: {r - off: v for r, v in D.column(k).items() if off <= r < off + K}
                                for k in range(off, off + K)}, True)
        left = SparseOperator(K, shift_plus_identity(K, Fraction(1)), True) @ Dl
        right = Dl @ SparseOperator(K, shift_plus_identity(K, Fraction(1, 2**ll)), True)
        per[ll] = left == right
    assembled = (ops["T1"] @ D) == (D @ ops["T"])
    return IntertwiningReport(per, assembled)


@dataclass
class CrucialReport:
    m: int
    deltas: Dict[int, Fraction]
    bounds: Dict[int, Fraction]
    max_ratio: Fraction
    passed: bool


def crucial_estimate_check(space: DSumSpace, x: Sequence, l: int, k_range: Sequence[int] | None = None) -> CrucialReport:
    """Relative deviation of ``R0 x`` in block ``l`` from its leading geometric term."""
    x = [as_exact(v) for v in x]
    if len(x) != space.dim:
        raise ParameterError("vector length differs from the space dimension")
    x1 = space.block(x, 1)
    m = next((j for j in range(1, space.K) if x1[j] != 0), None)
    if m is None:
        raise ParameterError("block 1 has no non-zero coordinate of index >= 1")
    k_range = range(1, space.K) if k_range is None else list(k_range)
    bad = [k for k in k_range if not 1 <= k < space.K]
    if bad:
        raise ParameterError(f"k={bad[0]} outside [1, {space.K})")
    eps_l = as_exact(space.eps_seq[l - 1])
    vy = v_apply(x1, space.K)
    R0x_l = {k: eps_l * vy[k] for k in k_range}
    norm1 = sum(abs(v) for v in x1)
    deltas, bounds = {}, {}
    worst = Fraction(0)
    for k in k_range:
        lead = eps_l * x1[m] / 2 ** (m * k)
        d = R0x_l[k] / lead - 1
        bound = norm1 / (2**k * abs(x1[m]))
        deltas[k], bounds[k] = d, bound
        worst = max(worst, abs(d) / bound)
    return CrucialReport(m, deltas, bounds, worst, worst <= 1)


def build_R(space: DSumSpace, u: Sequence, v: Sequence) -> SparseOperator:
    """``R x = R0 x + (x_0(1) / u_0(1)) (v - R0 u)``; checks ``R u == v`` exactly."""
    u = [as_exact(a) for a in u]
    v = [as_exact(a) for a in v]
    if len(u) != space.dim or len(v) != space.dim:
        raise ParameterError("vector length differs from the space dimension")
    if u[0] == 0:
        raise ParameterError("u_0(1) must be non-zero")
    R0 = build_dsum_ops(space)["R0"]
    corr = [a - b for a, b in zip(v, r0_apply(space, u))]
    rank_one = SparseOperator(space.dim, {0: {r: c / u[0] for r, c in enumerate(corr) if c}}, True)
    R = R0 + rank_one
    if [a + b for a, b in zip(r0_apply(space, u), rank_one.apply(u))] != v:
        raise ConstructionError("R u differs from v")
    return R


def block_norm_bound(op: SparseOperator, space: DSumSpace):
    """Upper bound for the c0(l1) operator norm: max over output blocks of summed block l1 norms.

    Exact when each output block reads from a single input block.
    """
    K = space.K
    acc: Dict[tuple, Fraction] = {}
    for c in range(op.dim):
        col = op.column(c)
        sums: Dict[int, Fraction] = {}
        for r, a in col.items():
            sums[r // K] = sums.get(r // K, 0) + abs(a)
        for lo, s in sums.items():
            key = (lo, c // K)
            if s > acc.get(key, 0):
                acc[key] = s
    per_out: Dict[int, Fraction] = {}
    for (lo, _), s in acc.items():
        per_out[lo] = per_out.get(lo, 0) + s
    return max(per_out.values(), default=Fraction(0))


def v_norm(space: DSumSpace) -> Fraction:
    return build_dsum_ops(space)["V"].max_column_l1()


def invertibility(R: SparseOperator, c: float) -> dict:
    """Smallest singular value of ``cI + R`` (dense SVD)."""
    A = c * np.eye(R.dim) + R.to_dense()
    smin = float(np.linalg.svd(A, compute_uv=False).min())
    return {"c": c, "sigma_min": smin, "invertible": smin > 1e-12}


def envelope_check(space: DSumSpace, y: Sequence) -> bool:
    """For ``||y|| <= 1``, ``|(Dy)_k(l)| <= 2^{-lk}``."""
    y = [as_exact(a) for a in y]
    if space.vector(y).norm() > 1:
        raise ParameterError("y must have norm at most 1")
    Dy = build_dsum_ops(space)["D"].apply(y)
    return all(abs(Dy[space.index(l, k)]) <= Fraction(1, 2 ** (l * k))
               for l in range(1, space.L + 1) for k in range(space.K))


def random_dyadic_vector(space: DSumSpace, rng: random.Random, m: int | None = None, density: float = 0.5,
                         max_log2: int = 6) -> List[Fraction]:
    """Seeded vector with dyadic entries; if ``m`` is given, block 1 starts at index ``m``."""
    x = [Fraction(0)] * space.dim
    for i in range(space.dim):
        if rng.random() < density:
            x[i] = Fraction(rng.randint(-64, 64), 2 ** rng.randint(0, max_log2))
    if m is not None:
        for j in range(1, m):
            x[space.index(1, j)] = Fraction(0)
        while x[space.index(1, m)] == 0:
            x[space.index(1, m)] = Fraction(rng.randint(-64, 64), 2 ** rng.randint(0, max_log2))
    return x


def vector_to_csv(space: DSumSpace, x: Sequence) -> str:
    out = io.StringIO()
    out.write("l,k,numerator,log2denominator\n")
    for i, a in enumerate(x):
        a = as_exact(a)
        if a:
            num, lg = dyadic_parts(a)
            out.write(f"{i // space.K + 1},{i % space.K},{num},{lg}\n")
    return out.getvalue()


def vector_from_csv(space: DSumSpace, text: str) -> List[Fraction]:
    x = [Fraction(0)] * space.dim
    for line in text.splitlines()[1:]:
        if line.strip():
            l, k, num, lg = (int(t) for t in line.split(","))
            x[space.index(l, k)] = Fraction(num, 2**lg)
    return x
