"""Finite-horizon integer sets, density profiles, vectors and visit sets.

Everything here lives on ``{0, 1, ..., horizon}``.  Density is always the
counting ratio ``#(A & [0, N]) / (N + 1)``; lower and upper densities are
reported as the min / max of that ratio over ``N >= burn_in`` and are never
claimed to be limits.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ArithmeticModeError, DomainError, ParameterError
from .linop import as_exact, check_exact_size


class IndexSet:
    """Immutable subset of ``[0, horizon]`` backed by a boolean mask."""

    __slots__ = ("horizon", "_mask", "_members")

    def __init__(self, mask: np.ndarray):
        mask = np.array(mask, dtype=bool, copy=True)
        if mask.ndim != 1 or mask.size == 0:
            raise ParameterError("mask must be a non-empty 1-d array")
        mask.setflags(write=False)
        self._mask = mask
        self.horizon = mask.size - 1
        self._members = None

    @classmethod
    def from_members(cls, members: Iterable[int], horizon: int) -> "IndexSet":
        if horizon < 0:
            raise ParameterError("horizon must be non-negative")
        mask = np.zeros(horizon + 1, dtype=bool)
        arr = np.fromiter((int(m) for m in members), dtype=np.int64)
        if arr.size and arr.min() < 0:
            raise ParameterError("members must be non-negative")
        mask[arr[arr <= horizon]] = True
        return cls(mask)

    @classmethod
    def empty(cls, horizon: int) -> "IndexSet":
        return cls(np.zeros(horizon + 1, dtype=bool))

    @classmethod
    def interval(cls, lo: int, hi: int, horizon: int) -> "IndexSet":
        mask = np.zeros(horizon + 1, dtype=bool)
        lo, hi = max(lo, 0), min(hi, horizon)
        if lo <= hi:
            mask[lo : hi + 1] = True
        return cls(mask)

    @classmethod
    def progression(cls, step: int, horizon: int, offset: int = 0) -> "IndexSet":
        """``{offset + step*k : k >= 0}`` clipped to the horizon."""
        if step <= 0:
            raise ParameterError("step must be positive")
        mask = np.zeros(horizon + 1, dtype=bool)
        if offset <= horizon:
            mask[offset::step] = True
        return cls(mask)

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def members(self) -> np.ndarray:
        if self._members is None:
            m = np.flatnonzero(self._mask)
            m.setflags(write=False)
            self._members = m
        return self._members

    def __len__(self) -> int:
        return int(self._mask.sum())

    def __iter__(self):
        return iter(self.members.tolist())

    def __contains__(self, n: int) -> bool:
        return 0 <= n <= self.horizon and bool(self._mask[n])

    def __bool__(self) -> bool:
        return bool(self._mask.any())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IndexSet):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self._mask, other._mask)

    def __hash__(self) -> int:
        return hash((self.horizon, self._mask.tobytes()))

    def __repr__(self) -> str:
        head = self.members[:8].tolist()
        tail = " ..." if len(self) > 8 else ""
        return f"IndexSet(horizon={self.horizon}, members={head}{tail})"

    def min(self) -> int:
        if not self:
            raise DomainError("min of empty set")
        return int(self.members[0])

    def restrict(self, horizon: int) -> "IndexSet":
        if horizon > self.horizon:
            mask = np.zeros(horizon + 1, dtype=bool)
            mask[: self.horizon + 1] = self._mask
            return IndexSet(mask)
        return IndexSet(self._mask[: horizon + 1])

    def _aligned(self, other: "IndexSet"):
        h = min(self.horizon, other.horizon)
        return h, self._mask[: h + 1], other._mask[: h + 1]

    def __or__(self, other: "IndexSet") -> "IndexSet":
        _, a, b = self._aligned(other)
        return IndexSet(a | b)

    def __and__(self, other: "IndexSet") -> "IndexSet":
        _, a, b = self._aligned(other)
        return IndexSet(a & b)

    def __sub__(self, other: "IndexSet") -> "IndexSet":
        _, a, b = self._aligned(other)
        return IndexSet(a & ~b)

    def translate(self, t: int) -> "IndexSet":
        """Shift every member by ``t``; members leaving ``[0, horizon]`` drop."""
        mask = np.zeros_like(self._mask)
        if t >= 0:
            if t <= self.horizon:
                mask[t:] = self._mask[: self.horizon + 1 - t]
        else:
            if -t <= self.horizon:
                mask[: self.horizon + 1 + t] = self._mask[-t:]
        return IndexSet(mask)

    def dilate(self, radius: int) -> "IndexSet":
        """``(A + [-radius, radius]) & [0, horizon]``."""
        if radius < 0:
            raise ParameterError("radius must be non-negative")
        h = self.horizon
        diff = np.zeros(h + 2, dtype=np.int64)
        m = self.members
        np.add.at(diff, np.clip(m - radius, 0, h + 1), 1)
        np.add.at(diff, np.clip(m + radius + 1, 0, h + 1), -1)
        return IndexSet(np.cumsum(diff)[: h + 1] > 0)

    # -- serialisation ---------------------------------------------------------
    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"horizon={self.horizon}\n")
        for m in self.members.tolist():
            out.write(f"{m}\n")
        return out.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "IndexSet":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("horizon="):
            raise ParameterError("IndexSet file must start with 'horizon=<N>'")
        horizon = int(lines[0].split("=", 1)[1])
        members = [int(x) for x in lines[1:]]
        if any(m > horizon for m in members):
            raise ParameterError("member exceeds declared horizon")
        if members != sorted(set(members)):
            raise ParameterError("members must be strictly increasing")
        return cls.from_members(members, horizon)


@dataclass(frozen=True)
class DensityProfile:
    counts: np.ndarray
    burn_in: int
    ratios: np.ndarray = field(repr=False)
    tail_min: float
    tail_max: float

    @property
    def horizon(self) -> int:
        return self.counts.size - 1

    def ratio(self, n: int) -> Fraction:
        """Exact ``#(A & [0, n]) / (n + 1)``."""
        return Fraction(int(self.counts[n]), n + 1)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("N,count,ratio\n")
        for n, (c, r) in enumerate(zip(self.counts.tolist(), self.ratios.tolist())):
            out.write(f"{n},{c},{r!r}\n")
        return out.getvalue()


def density_profile(s: IndexSet, burn_in: int = 0) -> DensityProfile:
    if burn_in < 0 or burn_in > s.horizon:
        raise ParameterError(f"burn_in={burn_in} must lie in [0, horizon={s.horizon}]")
    counts = np.cumsum(s.mask, dtype=np.int64)
    ratios = counts / np.arange(1, counts.size + 1)
    tail = ratios[burn_in:]
    counts.setflags(write=False)
    ratios.setflags(write=False)
    return DensityProfile(counts, burn_in, ratios, float(tail.min()), float(tail.max()))


@dataclass(frozen=True)
class GapReport:
    gap: int
    leading_gap: int
    trailing_gap: int

    @property
    def syndetic_bound(self) -> int:
        return max(self.gap, self.leading_gap)


def syndetic_gap(s: IndexSet) -> GapReport:
    """Largest gap between consecutive members, counting ``0 -> min``.

    ``trailing_gap`` is the distance from the last member to the horizon and
    is reported separately because it only reflects the truncation.
    """
    if not s:
        raise DomainError("syndetic_gap of an empty set")
    m = s.members
    inner = int(np.diff(m).max()) if m.size > 1 else 0
    return GapReport(inner, int(m[0]), int(s.horizon - m[-1]))


def set_algebra(op: str, a: IndexSet, b: IndexSet | int) -> IndexSet:
    if op == "translate":
        if not isinstance(b, (int, np.integer)):
            raise ParameterError("translate takes an integer offset")
        return a.translate(int(b))
    if not isinstance(b, IndexSet):
        raise ParameterError(f"{op} takes two IndexSets")
    if op == "union":
        return a | b
    if op == "intersect":
        return a & b
    if op == "difference":
        return a - b
    raise ParameterError(f"unknown set operation {op!r}")


# -- vectors ---------------------------------------------------------------------


@dataclass(frozen=True)
class NormTag:
    kind: str = "sup"  # 'sup' | 'ellp' | 'c0l1'
    p: float = 1.0
    block_length: int = 0

    def __post_init__(self):
        if self.kind not in ("sup", "ellp", "c0l1"):
            raise ParameterError(f"unknown norm kind {self.kind!r}")
        if self.kind == "ellp" and self.p < 1:
            raise ParameterError("ellp norm needs p >= 1")
        if self.kind == "c0l1" and self.block_length <= 0:
            raise ParameterError("c0l1 norm needs a positive block_length")


SUP = NormTag("sup")


def ellp(p: float) -> NormTag:
    return NormTag("ellp", p=p)


def c0_sum_of_ell1(block_length: int) -> NormTag:
    return NormTag("c0l1", block_length=block_length)


def vector_norm(coords, tag: NormTag):
    """Norm of a coordinate sequence; exact for sup / l1 / c0l1 on rationals."""
    exact = not isinstance(coords, np.ndarray) and all(isinstance(c, Fraction) for c in coords)
    if tag.kind == "sup":
        if exact:
            return max((abs(c) for c in coords), default=Fraction(0))
        return float(np.max(np.abs(coords))) if len(coords) else 0.0
    if tag.kind == "ellp":
        if exact and tag.p == 1:
            return sum((abs(c) for c in coords), Fraction(0))
        return float(np.linalg.norm(np.asarray(coords, dtype=float), ord=tag.p))
    L = tag.block_length
    if len(coords) % L:
        raise ParameterError("coordinate count is not a multiple of block_length")
    if exact:
        return max(
            (sum((abs(c) for c in coords[i : i + L]), Fraction(0)) for i in range(0, len(coords), L)),
            default=Fraction(0),
        )
    arr = np.abs(np.asarray(coords, dtype=float)).reshape(-1, L)
    return float(arr.sum(axis=1).max()) if arr.size else 0.0


class BlockVector:
    """A finite vector with a norm tag; exact (Fraction) or float coordinates."""

    __slots__ = ("coords", "norm_tag", "exact")

    def __init__(self, coords: Sequence, norm_tag: NormTag = SUP, exact: bool | None = None):
        if exact is None:
            exact = not isinstance(coords, np.ndarray) and all(
                isinstance(c, (int, Fraction)) for c in coords
            )
        if exact:
            coords = tuple(as_exact(c) for c in coords)
        else:
            coords = np.array(coords, dtype=float)
            coords.setflags(write=False)
        if norm_tag.kind == "c0l1" and len(coords) % norm_tag.block_length:
            raise ParameterError("coordinate count is not a multiple of block_length")
        self.coords = coords
        self.norm_tag = norm_tag
        self.exact = exact

    @classmethod
    def basis(cls, k: int, dim: int, norm_tag: NormTag = SUP, exact: bool = True, scale=1) -> "BlockVector":
        if not 0 <= k < dim:
            raise ParameterError("basis index out of range")
        zero = Fraction(0) if exact else 0.0
        coords = [zero] * dim
        coords[k] = as_exact(scale) if exact else float(scale)
        return cls(coords, norm_tag, exact)

    def __len__(self) -> int:
        return len(self.coords)

    def norm(self):
        return vector_norm(self.coords, self.norm_tag)

    def to_float(self) -> "BlockVector":
        return BlockVector(np.array([float(c) for c in self.coords]), self.norm_tag, False)

    def __sub__(self, other: "BlockVector") -> "BlockVector":
        if len(other) != len(self):
            raise ParameterError("dimension mismatch")
        if self.exact and other.exact:
            return BlockVector([a - b for a, b in zip(self.coords, other.coords)], self.norm_tag, True)
        return BlockVector(
            np.asarray(self.coords, dtype=float) - np.asarray(other.coords, dtype=float), self.norm_tag, False
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BlockVector):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self.coords, other.coords))

    def __repr__(self) -> str:
        return f"BlockVector(dim={len(self)}, {self.norm_tag.kind}, {'exact' if self.exact else 'float'})"


def _distance(y, center: BlockVector, tag: NormTag):
    if isinstance(y, np.ndarray) or not center.exact:
        d = np.asarray(y, dtype=float) - np.asarray(center.coords, dtype=float)
        return vector_norm(d, tag)
    return vector_norm([a - b for a, b in zip(y, center.coords)], tag)


def orbit(T, x: BlockVector, horizon: int):
    """Yield ``T^n x`` for ``n = 0..horizon`` by repeated application."""
    exact = x.exact and getattr(T, "exact", False)
    y = list(x.coords) if exact else np.asarray(x.coords, dtype=float)
    for n in range(horizon + 1):
        if exact:
            check_exact_size(y)
        elif not np.all(np.isfinite(y)):
            raise ArithmeticModeError(f"non-finite orbit value at n={n}")
        yield n, y
        if n < horizon:
            y = T.apply(y)
            if not exact:
                y = np.asarray(y, dtype=float)


def visit_set(T, x: BlockVector, center: BlockVector, radius, horizon: int) -> IndexSet:
    """``{n <= horizon : ||T^n x - center|| < radius}`` in ``x``'s norm."""
    if radius <= 0:
        raise ParameterError("radius must be positive")
    if len(x) != T.dim or len(center) != T.dim:
        raise ParameterError(f"dimensions x={len(x)}, center={len(center)}, T={T.dim} disagree")
    mask = np.zeros(horizon + 1, dtype=bool)
    for n, y in orbit(T, x, horizon):
        mask[n] = _distance(y, center, x.norm_tag) < radius
    return IndexSet(mask)
