"""Finite-dimensional sparse operators with exact-rational or float entries.

Operators are stored column-wise (``column index -> {row index: value}``),
which is the natural layout for the orbit and column-sum computations done
elsewhere in the package: applying ``T`` to a basis vector is a dictionary
lookup, and ``T**j e_k`` is obtained by repeated sparse application.

Exact mode uses :class:`fractions.Fraction`; float mode uses Python floats and
delegates bulk application to :mod:`scipy.sparse`.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import ArithmeticModeError, ParameterError

Column = Dict[int, object]

# numerator/denominator bit size beyond which exact iteration is refused
EXACT_BIT_CAP = 1 << 14


def as_exact(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    raise ParameterError(f"cannot convert {value!r} to an exact rational")


def check_exact_size(values: Iterable[Fraction], cap: int = EXACT_BIT_CAP) -> None:
    for v in values:
        if v.numerator.bit_length() > cap or v.denominator.bit_length() > cap:
            raise ArithmeticModeError(
                f"exact coefficient exceeds {cap} bits; rerun in float mode (--float)"
            )


def dyadic_parts(value: Fraction) -> Tuple[int, int]:
    """Return ``(numerator, log2 denominator)`` of a dyadic rational."""
    value = as_exact(value)
    den = value.denominator
    if den & (den - 1):
        raise ParameterError(f"{value} is not dyadic")
    return value.numerator, den.bit_length() - 1


class SparseOperator:
    """A linear map on ``R^dim`` (or ``Q^dim``) stored by columns."""

    __slots__ = ("dim", "exact", "_cols", "_csr")

    def __init__(self, dim: int, columns: Mapping[int, Mapping[int, object]], exact: bool = True):
        if dim < 0:
            raise ParameterError("dimension must be non-negative")
        self.dim = int(dim)
        self.exact = bool(exact)
        conv = as_exact if exact else float
        cols: Dict[int, Column] = {}
        for c, col in columns.items():
            if not 0 <= c < dim:
                raise ParameterError(f"column {c} outside [0, {dim})")
            clean = {}
            for r, v in col.items():
                if not 0 <= r < dim:
                    raise ParameterError(f"row {r} outside [0, {dim})")
                v = conv(v)
                if v != 0:
                    clean[int(r)] = v
            if clean:
                cols[int(c)] = clean
        self._cols = cols
        self._csr = None

    # -- constructors -------------------------------------------------------
    @classmethod
    def identity(cls, dim: int, exact: bool = True) -> "SparseOperator":
        one = Fraction(1) if exact else 1.0
        return cls(dim, {k: {k: one} for k in range(dim)}, exact)

    @classmethod
    def zero(cls, dim: int, exact: bool = True) -> "SparseOperator":
        return cls(dim, {}, exact)

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[object]], exact: bool = True) -> "SparseOperator":
        dim = len(rows)
        cols: Dict[int, Column] = {}
        for r, row in enumerate(rows):
            if len(row) != dim:
                raise ParameterError("matrix must be square")
            for c, v in enumerate(row):
                if v != 0:
                    cols.setdefault(c, {})[r] = v
        return cls(dim, cols, exact)

    @classmethod
    def from_entries(cls, dim: int, entries: Iterable[Tuple[int, int, object]], exact: bool = True):
        cols: Dict[int, Column] = {}
        for r, c, v in entries:
            col = cols.setdefault(c, {})
            col[r] = col.get(r, 0) + v
        return cls(dim, cols, exact)

    # -- access -------------------------------------------------------------
    def column(self, k: int) -> Column:
        """Coefficients of ``T e_k`` (a fresh dict, safe to mutate)."""
        return dict(self._cols.get(k, {}))

    def entries(self) -> Iterator[Tuple[int, int, object]]:
        for c in sorted(self._cols):
            col = self._cols[c]
            for r in sorted(col):
                yield r, c, col[r]

    def entry(self, row: int, col: int):
        return self._cols.get(col, {}).get(row, Fraction(0) if self.exact else 0.0)

    @property
    def nnz(self) -> int:
        return sum(len(c) for c in self._cols.values())

    def with_entry(self, row: int, col: int, value) -> "SparseOperator":
        """Copy of the operator with one entry overwritten."""
        cols = {c: dict(v) for c, v in self._cols.items()}
        cols.setdefault(col, {})[row] = value
        return SparseOperator(self.dim, cols, self.exact)

    # -- arithmetic -----------------------------------------------------------
    def to_float(self) -> "SparseOperator":
        if not self.exact:
            return self
        return SparseOperator(
            self.dim, {c: {r: float(v) for r, v in col.items()} for c, col in self._cols.items()}, False
        )

    def csr(self) -> sp.csr_matrix:
        if self._csr is None:
            rows, cols, vals = [], [], []
            for r, c, v in self.entries():
                rows.append(r)
                cols.append(c)
                vals.append(float(v))
            self._csr = sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))
        return self._csr

    def apply_sparse(self, vec: Mapping[int, object]) -> Column:
        """Apply to a sparse vector given as ``{index: value}``."""
        out: Column = {}
        for k, x in vec.items():
            if x == 0:
                continue
            for r, a in self._cols.get(k, {}).items():
                out[r] = out.get(r, 0) + a * x
        return {r: v for r, v in out.items() if v != 0}

    def apply(self, coords: Sequence) -> list | np.ndarray:
        if len(coords) != self.dim:
            raise ParameterError(f"vector of length {len(coords)} applied to dim-{self.dim} operator")
        if self.exact:
            out = [Fraction(0)] * self.dim
            for k, x in enumerate(coords):
                if x == 0:
                    continue
                for r, a in self._cols.get(k, {}).items():
                    out[r] += a * x
            return out
        return self.csr() @ np.asarray(coords, dtype=float)

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        if other.dim != self.dim:
            raise ParameterError("dimension mismatch in composition")
        cols = {c: self.apply_sparse(col) for c, col in other._cols.items()}
        return SparseOperator(self.dim, cols, self.exact and other.exact)

    def _combine(self, other: "SparseOperator", sign: int) -> "SparseOperator":
        if other.dim != self.dim:
            raise ParameterError("dimension mismatch")
        cols = {c: dict(v) for c, v in self._cols.items()}
        for c, col in other._cols.items():
            tgt = cols.setdefault(c, {})
            for r, v in col.items():
                if sign < 0 and tgt.get(r) == v:
                    del tgt[r]
                else:
                    tgt[r] = tgt.get(r, 0) + sign * v
        return SparseOperator(self.dim, cols, self.exact and other.exact)

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return self._combine(other, 1)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return self._combine(other, -1)

    def scale(self, factor) -> "SparseOperator":
        factor = as_exact(factor) if self.exact else float(factor)
        return SparseOperator(
            self.dim, {c: {r: factor * v for r, v in col.items()} for c, col in self._cols.items()}, self.exact
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseOperator):
            return NotImplemented
        return self.dim == other.dim and self._cols == other._cols

    def __hash__(self):  # operators are compared by value but not hashed
        raise TypeError("SparseOperator is unhashable")

    def __repr__(self) -> str:
        mode = "exact" if self.exact else "float"
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz}, {mode})"

    # -- analysis -------------------------------------------------------------
    def power_column(self, k: int, j: int) -> Column:
        vec: Column = {k: Fraction(1) if self.exact else 1.0}
        for _ in range(j):
            vec = self.apply_sparse(vec)
        return vec

    def max_column_l1(self, rows: range | None = None, cols: Iterable[int] | None = None):
        """Max over columns of the l1 norm of the (row-restricted) column.

        This is the exact l1 -> l1 operator norm of the restricted block.
        """
        cols = range(self.dim) if cols is None else cols
        best = Fraction(0) if self.exact else 0.0
        for c in cols:
            col = self._cols.get(c, {})
            s = sum(abs(v) for r, v in col.items() if rows is None or r in rows)
            if s > best:
                best = s
        return best

    def rank(self) -> int:
        return exact_rank(self.to_rows())

    def to_rows(self) -> Dict[int, Dict[int, object]]:
        rows: Dict[int, Dict[int, object]] = {}
        for r, c, v in self.entries():
            rows.setdefault(r, {})[c] = v
        return rows

    def to_dense(self) -> np.ndarray:
        return self.csr().toarray()

    def coo_lines(self) -> list[str]:
        """``row,col,numerator,log2denominator`` lines (dyadic entries only)."""
        lines = ["row,col,numerator,log2denominator"]
        for r, c, v in self.entries():
            num, lg = dyadic_parts(as_exact(v))
            lines.append(f"{r},{c},{num},{lg}")
        return lines

    @classmethod
    def from_coo_lines(cls, dim: int, lines: Iterable[str]) -> "SparseOperator":
        entries = []
        for line in lines:
            line = line.strip()
            if not line or line.startswith("row"):
                continue
            r, c, num, lg = (int(t) for t in line.split(","))
            entries.append((r, c, Fraction(num, 1 << lg)))
        return cls.from_entries(dim, entries, exact=True)


def exact_rank(rows: Mapping[int, Mapping[int, object]] | Sequence[Sequence[object]]) -> int:
    """Rank by fraction-exact Gaussian elimination on sparse rows."""
    if isinstance(rows, Mapping):
        work = [{c: as_exact(v) for c, v in row.items() if v != 0} for row in rows.values()]
    else:
        work = [{c: as_exact(v) for c, v in enumerate(row) if v != 0} for row in rows]
    work = [r for r in work if r]
    rank = 0
    pivots: Dict[int, Dict[int, Fraction]] = {}
    for row in work:
        row = dict(row)
        while row:
            c = min(row)
            if c not in pivots:
                pivots[c] = row
                rank += 1
                break
            prow = pivots[c]
            f = row[c] / prow[c]
            for cc, v in prow.items():
                nv = row.get(cc, 0) - f * v
                if nv == 0:
                    row.pop(cc, None)
                else:
                    row[cc] = nv
    return rank


def solve_exact(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    """Solve a square non-singular system over the rationals."""
    n = len(matrix)
    aug = [[as_exact(v) for v in row] + [as_exact(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ArithmeticModeError("singular system")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [aug[r][n] for r in range(n)]
