"""Weighted backward shifts and the tent-built counterexample weight pair.

A weight system is carried by its cumulative products ``W(n) = w_1...w_n``.
For the dyadic systems produced from tents we store ``log2 W`` as integers,
so every check on ``W`` is exact and no overflow can occur.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .density import BlockVector, DensityProfile, IndexSet, density_profile
from .errors import ConstructionError, ParameterError
from .sets import (
    _check_a_eps,
    build_EF_sets,
    default_b,
    dyadic_layer,
    interval_bounds,
    max_relevant_u,
    verify_interval_conditions,
)


class WeightSystem:
    """Positive weights ``w_1..w_H`` with cumulative ``W(0..H)``.

    ``log2W`` is an ``int64`` array for dyadic systems and ``float64``
    otherwise.
    """

    __slots__ = ("weights", "log2W", "dyadic")

    def __init__(self, weights: Sequence[float], log2W: np.ndarray | None = None):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ConstructionError("weights must be finite and positive")
        if log2W is None:
            lw = np.log2(w)
            if np.all(lw == np.round(lw)):
                log2W = np.concatenate([[0], np.cumsum(lw.astype(np.int64))])
            else:
                log2W = np.concatenate([[0.0], np.cumsum(lw)])
        self.weights = w
        self.log2W = np.asarray(log2W)
        self.dyadic = self.log2W.dtype.kind == "i"
        self.weights.setflags(write=False)
        self.log2W.setflags(write=False)

    @classmethod
    def from_log2(cls, L: np.ndarray) -> "WeightSystem":
        L = np.asarray(L, dtype=np.int64)
        if L.size == 0 or L[0] != 0:
            raise ConstructionError("log2 W(0) must be 0")
        return cls(np.exp2(np.diff(L).astype(float)), L)

    @classmethod
    def constant(cls, c, H: int) -> "WeightSystem":
        return cls(np.full(H, float(c)))

    @property
    def H(self) -> int:
        return self.weights.size

    def weight(self, n: int):
        """``w_n`` (``n >= 1``), exact for dyadic systems."""
        if not 1 <= n <= self.H:
            raise ParameterError(f"weight index {n} outside [1, {self.H}]")
        if self.dyadic:
            return Fraction(2) ** int(self.log2W[n] - self.log2W[n - 1])
        return float(self.weights[n - 1])

    def W(self, n: int):
        if self.dyadic:
            return Fraction(2) ** int(self.log2W[n])
        return float(np.exp2(self.log2W[n]))

    def with_weight(self, n: int, value: float) -> "WeightSystem":
        w = self.weights.copy()
        w[n - 1] = value
        return WeightSystem(w)

    def check_tent_invariants(self) -> None:
        """``log2 W`` integer, non-negative, 1-Lipschitz (so ``w_n`` in {1/2,1,2})."""
        if not self.dyadic:
            raise ConstructionError("weights are not all powers of two")
        L = self.log2W
        if L.min() < 0:
            raise ConstructionError(f"log2 W negative at n={int(np.argmin(L))}")
        jumps = np.abs(np.diff(L))
        if jumps.size and jumps.max() > 1:
            n = int(np.argmax(jumps)) + 1
            raise ConstructionError(f"w_{n} = {self.weights[n - 1]} is outside {{1/2, 1, 2}}")

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("n,w_n,log2W_n\n")
        out.write(f"0,,{self.log2W[0]}\n")
        for n in range(1, self.H + 1):
            out.write(f"{n},{self.weights[n - 1]!r},{self.log2W[n]}\n")
        return out.getvalue()


# -- tents ------------------------------------------------------------------------------------


@dataclass(frozen=True)
class TentSpec:
    plateau: IndexSet
    height: int
    window: IndexSet
    label: str = ""


def distance_to(members: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Distance from each ``n`` to the nearest member (large if none)."""
    big = np.iinfo(np.int64).max // 4
    if members.size == 0:
        return np.full(n.shape, big, dtype=np.int64)
    idx = np.searchsorted(members, n)
    right = np.where(idx < members.size, members[np.minimum(idx, members.size - 1)] - n, big)
    left = np.where(idx > 0, n - members[np.maximum(idx - 1, 0)], big)
    return np.minimum(left, right)


def tent_profile(t: TentSpec, H: int) -> np.ndarray:
    """``max(0, h - d(n, S))`` on ``[0, H]`` after checking feasibility."""
    n = np.arange(H + 1, dtype=np.int64)
    d = distance_to(t.plateau.members, n)
    if t.plateau - t.window:
        raise ConstructionError(f"tent {t.label}: plateau not inside window")
    outside = ~t.window.restrict(H).mask
    bad = outside & (d < t.height)
    if bad.any():
        m = int(np.flatnonzero(bad)[0])
        raise ConstructionError(
            f"infeasible tent {t.label or t.height}: n={m} lies outside the window "
            f"at distance {int(d[m])} < height {t.height}"
        )
    return np.maximum(0, t.height - d)


def plateau_weights(tents: Sequence[TentSpec], H: int) -> WeightSystem:
    L = np.zeros(H + 1, dtype=np.int64)
    for t in tents:
        np.maximum(L, tent_profile(t, H), out=L)
    if L[0] != 0:
        raise ConstructionError("a tent reaches n=0, so W(0) would differ from 1")
    return WeightSystem.from_log2(L)


# -- the counterexample pair ----------------------------------------------------------------------


@dataclass
class CounterexamplePair:
    w: WeightSystem
    w_prime: WeightSystem
    a: Fraction
    eps: Fraction
    b: List[int]
    p_max: int
    H: int
    E: List[IndexSet]
    F: List[IndexSet]
    tents: List[TentSpec] = field(repr=False)
    tents_prime: List[TentSpec] = field(repr=False)


def _interval_set(a, eps, mult, u, horizon) -> IndexSet:
    lo, hi = interval_bounds(a, eps, mult, u)
    return IndexSet.interval(lo, hi, horizon)


def counterexample_tents(a, eps, b: Sequence[int], p_max: int, H: int, parity: int) -> List[TentSpec]:
    """Tent families for ``w`` (``parity=0``, layers 2p) or ``w'`` (``parity=1``, layers 2p+1)."""
    hx = H + max([p_max] + [max_relevant_u(a, eps, H + 64, 4)]) + 2
    u_top = max_relevant_u(a, eps, hx, 4)
    layer_of: Dict[int, int] = {}
    for p in range(1, p_max + 1):
        for u in dyadic_layer(2 * p + parity, u_top).members.tolist() if u_top >= 1 else []:
            layer_of[u] = p
    tents: List[TentSpec] = []
    for u in sorted(layer_of):
        tents.append(
            TentSpec(_interval_set(a, eps, 1, u, hx), u, _interval_set(a, eps, 2, u, hx), f"growth u={u}")
        )
    for p in range(1, p_max + 1):
        plateau = IndexSet.progression(b[p - 1], hx, offset=b[p - 1])
        tents.append(TentSpec(plateau, p, plateau.dilate(p), f"period p={p}"))
    for u in sorted(layer_of):
        for v in sorted(layer_of):
            if v >= u:
                break
            lo_u, hi_u = interval_bounds(a, eps, 1, u)
            lo_v, hi_v = interval_bounds(a, eps, 1, v)
            plateau = IndexSet.interval(lo_u - hi_v, hi_u - lo_v, hx)
            h = max(layer_of[u], layer_of[v])
            tents.append(TentSpec(plateau, h, _interval_set(a, eps, 4, u, hx), f"cross u={u},v={v}"))
    return tents


def counterexample_pair(a=8, eps=Fraction(1, 8), b: Sequence[int] | Callable[[int], int] | None = None,
                        p_max: int = 3, H: int = 10**6) -> CounterexamplePair:
    a, eps = _check_a_eps(a, eps)
    if not verify_interval_conditions(a, eps).passed:
        raise ParameterError(f"(a={a}, eps={eps}) fail the interval conditions")
    if b is None:
        b = default_b
    bseq = [int(b(q)) for q in range(1, p_max + 1)] if callable(b) else [int(x) for x in b][:p_max]
    if len(bseq) < p_max or any(x >= y for x, y in zip(bseq, bseq[1:])):
        raise ParameterError("b must be strictly increasing with p_max terms")
    systems = []
    all_tents = []
    for parity in (0, 1):
        tents = counterexample_tents(a, eps, bseq, p_max, H, parity)
        hx = tents[0].plateau.horizon if tents else H
        ws = plateau_weights(tents, hx)
        ws = WeightSystem.from_log2(ws.log2W[: H + 1])
        ws.check_tent_invariants()
        systems.append(ws)
        all_tents.append(tents)
    E, F = build_EF_sets(a, eps, bseq, p_max, H) if p_max else ([], [])
    return CounterexamplePair(systems[0], systems[1], a, eps, bseq, p_max, H, E, F, all_tents[0], all_tents[1])


# -- frequent-hypercyclicity checks on a shift------------------------------------------------------------


@dataclass
class FHCShiftReport:
    window_minima: Dict[int, List[Tuple[int, int]]]  # p -> [(j, min log2 W over E_p in [2^j, 2^(j+1)))]
    nondecreasing: Dict[int, bool]
    grows: Dict[int, bool]
    growth_pass: bool
    separation_pass: bool
    pairs_checked: int
    first_violation: Tuple[int, int] | None = None
    note: str = "window minima growth is a finite-horizon surrogate for divergence"


def check_fhc_shift(wsys: WeightSystem, E: Sequence[IndexSet], M: Sequence[float] | None = None,
                    H: int | None = None) -> FHCShiftReport:
    H = wsys.H if H is None else min(H, wsys.H)
    E = [e.restrict(H) for e in E]
    for i in range(len(E)):
        for j in range(i):
            if E[i] & E[j]:
                raise ParameterError(f"E_{j + 1} and E_{i + 1} are not disjoint")
    if M is None:
        M = [2.0**p for p in range(1, len(E) + 1)]
    logM = np.log2(np.asarray(M, dtype=float))
    L = wsys.log2W

    minima, nondec, grows = {}, {}, {}
    for p, e in enumerate(E, start=1):
        m = e.members
        rows = []
        if m.size:
            j = np.floor(np.log2(np.maximum(m, 1))).astype(np.int64)
            for jj in np.unique(j):
                rows.append((int(jj), int(L[m[j == jj]].min()) if wsys.dyadic else float(L[m[j == jj]].min())))
        minima[p] = rows
        vals = [v for _, v in rows]
        nondec[p] = all(x <= y for x, y in zip(vals, vals[1:]))
        grows[p] = len(vals) < 2 or vals[-1] > vals[0]
    growth_pass = all(nondec.values()) and all(grows.values())

    pts = np.concatenate([e.members for e in E]) if E else np.zeros(0, np.int64)
    lab = np.concatenate([np.full(len(e), p) for p, e in enumerate(E)]) if E else np.zeros(0, np.int64)
    order = np.argsort(pts)
    pts, lab = pts[order], lab[order].astype(np.int64)
    need = logM[lab]
    checked, violation = 0, None
    chunk = 512
    for start in range(1, pts.size, chunk):
        stop = min(start + chunk, pts.size)
        mm = pts[start:stop, None]
        nn = pts[None, :stop]
        valid = np.arange(stop)[None, :] < np.arange(start, stop)[:, None]
        d = np.where(valid, mm - nn, 0)
        req = np.maximum(need[start:stop, None], need[None, :stop])
        bad = valid & (L[d] < req - 1e-12)
        checked += int(valid.sum())
        if bad.any():
            r, c = np.argwhere(bad)[0]
            violation = (int(pts[start + r]), int(pts[c]))
            break
    return FHCShiftReport(minima, nondec, grows, growth_pass, violation is None, checked, violation)


@dataclass
class GpReport:
    p: int
    G: IndexSet
    cover: IndexSet
    included: bool
    tail_max: float
    bound: float
    monotone: bool


def gp_inclusion_check(w: WeightSystem, w_prime: WeightSystem, p: int, H: int, b: Sequence[int],
                       p_max: int, burn_in: int = 1000) -> GpReport:
    """``G_p = {W >= 2^p and W' >= 2^p}`` against the union of ``b_q N + [-q, q]``, ``q >= p``."""
    w.check_tent_invariants()
    w_prime.check_tent_invariants()
    H = min(H, w.H, w_prime.H)
    L, Lp = w.log2W[: H + 1], w_prime.log2W[: H + 1]
    G = IndexSet((L >= p) & (Lp >= p))
    G_prev = IndexSet((L >= p - 1) & (Lp >= p - 1))
    cover = IndexSet.empty(H)
    for q in range(max(p, 1), p_max + 1):
        cover = cover | IndexSet.progression(b[q - 1], H, offset=b[q - 1]).dilate(q)
    included = not (G - cover)
    bound = sum((2 * q + 1) / b[q - 1] for q in range(max(p, 1), p_max + 1))
    tail = density_profile(G, min(burn_in, H)).tail_max
    return GpReport(p, G, cover, included, tail, bound, not (G - G_prev))


# -- shift action and transitivity defect ----------------------------------------------------------


def apply_backward_shift(wsys: WeightSystem, x: BlockVector) -> BlockVector:
    n = len(x)
    if n > wsys.H + 1:
        raise ParameterError(f"vector of length {n} needs weights up to w_{n - 1}")
    if x.exact:
        if not wsys.dyadic:
            raise ParameterError("exact shift needs dyadic weights")
        out = [wsys.weight(k + 1) * x.coords[k + 1] for k in range(n - 1)] + [Fraction(0)]
        return BlockVector(out, x.norm_tag, True)
    y = np.zeros(n)
    y[:-1] = wsys.weights[: n - 1] * np.asarray(x.coords)[1:]
    return BlockVector(y, x.norm_tag, False)


class WeightedShift:
    """``B_w`` on the first ``dim`` coordinates, usable wherever an operator is."""

    def __init__(self, wsys: WeightSystem, dim: int, exact: bool = False):
        if dim > wsys.H + 1:
            raise ParameterError("dimension exceeds the weight horizon")
        self.wsys = wsys
        self.dim = dim
        self.exact = exact and wsys.dyadic
        self._w = wsys.weights[: dim - 1]
        if self.exact:
            self._wx = [wsys.weight(k + 1) for k in range(dim - 1)]

    def apply(self, coords):
        if self.exact:
            return [a * b for a, b in zip(self._wx, coords[1:])] + [Fraction(0)]
        y = np.zeros(self.dim)
        y[:-1] = self._w * np.asarray(coords, dtype=float)[1:]
        return y


@dataclass
class DefectReport:
    C: IndexSet
    profile: DensityProfile
    margin: float
    bounded_away: bool


def transitivity_defect(wsys: WeightSystem, M: float, H: int | None = None, burn_in: int = 1000,
                        margin: float = 0.05) -> DefectReport:
    """``C_M = {n : W(n) > M}`` and its counting profile."""
    if M <= 0:
        raise ParameterError("M must be positive")
    H = wsys.H if H is None else min(H, wsys.H)
    C = IndexSet(wsys.log2W[: H + 1] > math.log2(M))
    prof = density_profile(C, min(burn_in, H))
    return DefectReport(C, prof, margin, prof.tail_max < 1 - margin)


def defect_bound(a, eps, b: Sequence[int], p: int) -> float:
    """Closed-form upper-density bound on ``C_{2^p}``: interval part plus the ``b`` tail."""
    a, eps = float(a), float(eps)
    return 8 * eps / (1 + 4 * eps) / (1 - 1 / a) + sum((2 * q + 1) / b[q - 1] for q in range(p, len(b) + 1))
