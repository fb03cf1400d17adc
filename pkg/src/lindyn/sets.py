"""Explicit integer-set families: dyadic layers, geometric intervals,
separated subsets of positive-density sets, and the block-periodic "bad set".
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .density import IndexSet, density_profile
from .errors import BudgetError, ConstructionError, ParameterError

log = logging.getLogger(__name__)

DEFAULT_A = 8
DEFAULT_EPS = Fraction(1, 8)
FAMILY_CAP = 10**6


def dyadic_layer(k: int, horizon: int) -> IndexSet:
    """Members ``2**(k-1) * m`` with ``m`` odd, inside ``[1, horizon]``."""
    if k < 1:
        raise ParameterError("layer index k must be >= 1")
    step = 1 << (k - 1)
    return IndexSet.progression(2 * step, horizon, offset=step)


# -- geometric intervals ------------------------------------------------------------


@dataclass(frozen=True)
class IntervalFamily:
    a: Fraction
    eps: Fraction
    mult: int
    intervals: Dict[int, Tuple[int, int]]

    def as_set(self, horizon: int, us: Sequence[int] | None = None) -> IndexSet:
        mask = np.zeros(horizon + 1, dtype=bool)
        for u, (lo, hi) in self.intervals.items():
            if us is None or u in us:
                mask[max(lo, 0) : min(hi, horizon) + 1] = True
        return IndexSet(mask)


def _check_a_eps(a, eps) -> Tuple[Fraction, Fraction]:
    a, eps = Fraction(a), Fraction(eps)
    if a <= 1:
        raise ParameterError("interval base a must exceed 1")
    if not 0 < eps < Fraction(1, 4):
        raise ParameterError("eps must lie in (0, 1/4)")
    return a, eps


def interval_bounds(a, eps, mult: int, u: int) -> Tuple[int, int]:
    """Integer interval ``[ceil((1-m*eps) a^u), floor((1+m*eps) a^u)]``."""
    a, eps = Fraction(a), Fraction(eps)
    au = a**u
    return math.ceil((1 - mult * eps) * au), math.floor((1 + mult * eps) * au)


def geometric_intervals(a, eps, mult: int, u_max: int, horizon: int) -> IntervalFamily:
    a, eps = _check_a_eps(a, eps)
    if mult not in (1, 2, 4):
        raise ParameterError("mult must be 1, 2 or 4")
    intervals = {}
    for u in range(1, u_max + 1):
        lo, hi = interval_bounds(a, eps, mult, u)
        if lo > horizon:
            break
        intervals[u] = (lo, min(hi, horizon))
    return IntervalFamily(a, eps, mult, intervals)


def max_relevant_u(a, eps, horizon: int, mult: int = 4) -> int:
    """Largest ``u`` whose ``mult``-interval starts at or below ``horizon``."""
    u = 0
    while interval_bounds(a, eps, mult, u + 1)[0] <= horizon:
        u += 1
    return u


@dataclass(frozen=True)
class IntervalConditions:
    disjoint: bool
    difference: bool
    shift: bool
    ratios: Dict[str, Fraction] = field(default_factory=dict)
    failing_v: int | None = None

    @property
    def passed(self) -> bool:
        return self.disjoint and self.difference and self.shift


def verify_interval_conditions(a=DEFAULT_A, eps=DEFAULT_EPS, u_max: int = 20) -> IntervalConditions:
    """Evaluate the three closed-form sufficient inequalities exactly.

    * ``(1+4e) / ((1-4e) a) < 1``     -> 4e-intervals pairwise disjoint
    * ``2 e a / (1+2e) >= 1``          -> 2e-differences land in the 4e-interval
    * ``e a^v >= v`` for ``v <= u_max`` -> e-interval widened by v stays in 2e
    The pairwise conditions are vacuous when ``u_max < 2``.
    """
    a, eps = Fraction(a), Fraction(eps)
    if a <= 1 or not 0 < eps < Fraction(1, 4):
        raise ParameterError("need a > 1 and eps in (0, 1/4)")
    r1 = (1 + 4 * eps) / ((1 - 4 * eps) * a)
    r2 = 2 * eps * a / (1 + 2 * eps)
    pairwise = u_max >= 2
    failing = next((v for v in range(1, u_max + 1) if eps * a**v < v), None)
    return IntervalConditions(
        disjoint=(r1 < 1) or not pairwise,
        difference=(r2 >= 1) or not pairwise,
        shift=failing is None,
        ratios={"disjoint": r1, "difference": r2},
        failing_v=failing,
    )


def brute_force_interval_conditions(a, eps, u_max: int) -> Tuple[bool, bool, bool]:
    """Check the three set inclusions directly on integer intervals."""
    iv = {m: {u: interval_bounds(a, eps, m, u) for u in range(1, u_max + 1)} for m in (1, 2, 4)}
    disjoint = diff = True
    for u in range(1, u_max + 1):
        for v in range(1, u):
            (lo4u, hi4u), (lo4v, hi4v) = iv[4][u], iv[4][v]
            disjoint &= hi4v < lo4u or hi4u < lo4v
            (lo2u, hi2u), (lo2v, hi2v) = iv[2][u], iv[2][v]
            diff &= lo4u <= lo2u - hi2v and hi2u - lo2v <= hi4u
    shift = all(
        iv[2][v][0] <= iv[1][v][0] - v and iv[1][v][1] + v <= iv[2][v][1] for v in range(1, u_max + 1)
    )
    return disjoint, diff, shift


# -- separated subsets ------------------------------------------------------------------


@dataclass
class DisjointifyPlan:
    A: List[IndexSet]
    N: List[int]
    M: List[int]
    s: List[int]
    A_thin: List[IndexSet]
    A_fat: List[IndexSet]
    B: List[IndexSet]
    burn_in: int
    B_tail_min: List[float]

    def check(self) -> Dict[str, bool]:
        """Brute-force recheck of the four separation conclusions."""
        return check_separation(self.A, self.B, self.N)


def check_separation(A: Sequence[IndexSet], B: Sequence[IndexSet], N: Sequence[int]) -> Dict[str, bool]:
    subset = all(not (b - a) for a, b in zip(A, B))
    min_ok = all((not b) or b.min() >= n for b, n in zip(B, N))
    labels = np.concatenate([np.full(len(b), i) for i, b in enumerate(B)]) if B else np.array([])
    pts = np.concatenate([b.members for b in B]) if B else np.array([])
    disjoint = np.unique(pts).size == pts.size
    order = np.argsort(pts, kind="stable")
    pts, labels = pts[order], labels[order].astype(int)
    Narr = np.asarray(N, dtype=np.int64)
    need = Narr[labels]
    # For sorted points, the pair constraint |n-m| >= N_i + N_j only has to be
    # checked against predecessors within distance 2*max(N).
    sep = True
    span = 2 * int(Narr.max()) if len(Narr) else 0
    for lag in range(1, len(pts)):
        d = pts[lag:] - pts[:-lag]
        close = d < span
        if not close.any():
            break
        req = need[lag:] + need[:-lag]
        if np.any((d < req) & close):
            sep = False
            break
    return {"subset": subset, "min_bound": min_ok, "disjoint": bool(disjoint), "separated": sep}


def _candidate_s(members: np.ndarray, M: int, horizon: int, burn_in: int, bound: float):
    """Yield ``s = M, M+1, ...`` skipping values ruled out by a cheap bound.

    The widened set contains ``[n(s) - M, n(s) + M]`` around the first thinned
    member ``n(s)``; the counting ratio at the right end of that interval is a
    lower bound for its ``tail_max``.  Skipped values are provably infeasible,
    so the first feasible ``s`` is still the least one.
    """
    s_all = np.arange(M, horizon + 2, dtype=np.int64)
    lb = np.zeros(s_all.size)
    have = s_all - 1 < members.size
    n_s = members[s_all[have] - 1]
    lo = np.maximum(n_s - M, 0)
    hi = np.minimum(n_s + M, horizon)
    at = np.maximum(hi, burn_in)
    lb[have] = (hi - lo + 1) / (at + 1)
    for si in s_all[lb <= bound]:
        yield int(si)


def disjointify(A: Sequence[IndexSet], N: Sequence[int], burn_in: int) -> DisjointifyPlan:
    """Thin each ``A_i`` to a separated ``B_i`` following the induction on ``i``.

    ``s(i)`` is the least integer ``>= M_i`` such that the upper-density
    surrogate of ``(A_{i,s} + [-M_i, M_i])`` is at most
    ``min_{j<i} 4**-(i-j) * tail_min(A_{j,s(j)})``.
    """
    if len(A) != len(N) or not A:
        raise ParameterError("need one N_i per set and at least one set")
    horizon = A[0].horizon
    if any(a.horizon != horizon for a in A):
        raise ParameterError("all A_i must share a horizon")
    if any(n <= 0 for n in N):
        raise ParameterError("N_i must be positive")
    for i, a in enumerate(A):
        if not a or density_profile(a, burn_in).tail_min <= 0:
            raise ConstructionError(f"A_{i + 1} has zero tail density at burn_in={burn_in}")

    M = [2 * max(N[: i + 1]) for i in range(len(N))]
    s: List[int] = []
    thin: List[IndexSet] = []
    fat: List[IndexSet] = []
    thin_lower: List[float] = []
    for i, a in enumerate(A):
        members = a.members
        bound = min((thin_lower[j] / 4 ** (i - j) for j in range(i)), default=math.inf)
        chosen = None
        for si in _candidate_s(members, M[i], horizon, burn_in, bound):
            t = IndexSet.from_members(members[si - 1 :: si], horizon)
            f = t.dilate(M[i])
            if density_profile(f, burn_in).tail_max <= bound:
                chosen = si
                break
        if chosen is None:
            raise ConstructionError(
                f"no s({i + 1}) <= horizon makes the widened A_{i + 1} sparse enough: "
                f"need tail_max <= {bound:.3g} (binding j = {int(np.argmin(thin_lower)) + 1 if thin_lower else 0})"
            )
        s.append(chosen)
        thin.append(t)
        fat.append(f)
        thin_lower.append(density_profile(t, burn_in).tail_min)
        if thin_lower[-1] == 0:
            log.warning("A_{%d,s(%d)} has zero tail density at horizon %d", i + 1, i + 1, horizon)

    B = []
    for i, t in enumerate(thin):
        b = t
        for f in fat[i + 1 :]:
            b = b - f
        B.append(b)
    tails = [density_profile(b, burn_in).tail_min for b in B]
    return DisjointifyPlan(list(A), list(N), M, s, thin, fat, B, burn_in, tails)


# -- E_p / F_p ------------------------------------------------------------------------------


def default_b(q: int) -> int:
    return 4**q * (2 * q + 1)


def layer_values(k: int, upto: int) -> List[int]:
    """Members of the dyadic layer ``A_k`` in ``[1, upto]``."""
    return dyadic_layer(k, max(upto, 0)).members.tolist() if upto >= 1 else []


def build_EF_sets(a, eps, b: Sequence[int], p_max: int, horizon: int) -> Tuple[List[IndexSet], List[IndexSet]]:
    """``E_p``: union over ``u`` in layer ``2p`` of ``I_u^eps & b_p N``; ``F_p`` uses layer ``2p+1``."""
    a, eps = _check_a_eps(a, eps)
    if not verify_interval_conditions(a, eps).passed:
        raise ParameterError(f"(a={a}, eps={eps}) fail the interval conditions")
    if len(b) < p_max or any(x >= y for x, y in zip(b, b[1:])):
        raise ParameterError("b must be strictly increasing with at least p_max entries")
    family = geometric_intervals(a, eps, 1, max_relevant_u(a, eps, horizon, 1), horizon)
    E, F = [], []
    for p in range(1, p_max + 1):
        mult_b = IndexSet.progression(b[p - 1], horizon, offset=b[p - 1])
        for layer, out in ((2 * p, E), (2 * p + 1, F)):
            us = set(layer_values(layer, max(family.intervals, default=0)))
            s = family.as_set(horizon, us) & mult_b
            if not s:
                log.warning("layer-%d set for p=%d is empty at horizon %d", layer, p, horizon)
            out.append(s)
    return E, F


# -- block-periodic set with density >= 1/4 --------------------------------------------------


def _full_family(J: int) -> List[int]:
    """Bitmasks of subsets of ``[0, J)`` with at least ``J/2`` elements, ascending."""
    need = math.ceil(J / 2)
    return [m for m in range(1 << J) if m.bit_count() >= need]


def full_family_count(J: int) -> int:
    need = math.ceil(J / 2)
    return sum(math.comb(J, r) for r in range(need, J + 1))


def _sampled_family(J: int, count: int, rng: np.random.Generator) -> List[np.ndarray]:
    need = math.ceil(J / 2)
    out = []
    for _ in range(count):
        size = int(rng.integers(need, J + 1))
        out.append(np.sort(rng.choice(J, size=size, replace=False)))
    return out


def _mask_members(mask: int) -> np.ndarray:
    return np.array([i for i in range(mask.bit_length()) if mask >> i & 1], dtype=np.int64)


@dataclass
class BadSetLevel:
    k: int
    J: int
    C: int
    M: int
    families: List[np.ndarray]


def bad_set_plan(J: Sequence[int], mode="full", k_max: int | None = None, cap: int = FAMILY_CAP) -> List[BadSetLevel]:
    """Family enumerations and block bounds ``M_k = (k+1)^C_k J_k`` per level.

    ``mode`` is ``"full"`` or ``("sampled", count, seed)``; sampling applies to
    levels ``k >= 2`` only (level 1 is always enumerated).
    """
    k_max = len(J) if k_max is None else k_max
    if k_max < 1 or len(J) < k_max:
        raise ParameterError("need J_k for every level k <= k_max")
    if any(x >= y for x, y in zip(J, J[1:])):
        raise ParameterError("J must be increasing")
    sampled = mode != "full"
    if sampled:
        _, count, seed = mode
        rng = np.random.default_rng(seed)
    levels: List[BadSetLevel] = []
    for k in range(1, k_max + 1):
        Jk = int(J[k - 1])
        if Jk < 1:
            raise ParameterError("block lengths must be positive")
        if sampled and k >= 2:
            fam = _sampled_family(Jk, int(count), rng)
        else:
            C = full_family_count(Jk)
            if C > cap:
                raise BudgetError(
                    f"level {k}: {C} subsets of [0,{Jk}) exceed the cap {cap}; use sampled mode"
                )
            fam = [_mask_members(m) for m in _full_family(Jk)]
        C = len(fam)
        if k >= 2 and Jk < 2 * levels[-1].M:
            raise ParameterError(f"J_{k}={Jk} must be >= 2*M_{k - 1}={2 * levels[-1].M}")
        levels.append(BadSetLevel(k, Jk, C, (k + 1) ** C * Jk, fam))
    return levels


def build_bad_set(J: Sequence[int], mode="full", k_max: int | None = None, horizon: int | None = None,
                  cap: int = FAMILY_CAP) -> IndexSet:
    """Union of the level sets ``A_k``; default horizon is ``M_{k_max} - 1``."""
    levels = bad_set_plan(J, mode, k_max, cap)
    if horizon is None:
        horizon = levels[-1].M - 1
    mask = np.zeros(horizon + 1, dtype=bool)
    prev_M = 0
    for lv in levels:
        base = lv.k + 1
        mask[prev_M : min(lv.J, horizon + 1)] = True
        for j, fam in enumerate(lv.families):
            start = base**j * lv.J
            if start > horizon:
                break
            s_hi = min(base ** (j + 1), horizon // lv.J + 1)
            s = np.arange(base**j, s_hi, dtype=np.int64)
            idx = (s[:, None] * lv.J + fam[None, :]).ravel()
            mask[idx[idx <= horizon]] = True
        prev_M = lv.M
        if prev_M > horizon:
            break
    return IndexSet(mask)


def bad_set_from_json(block: dict) -> IndexSet:
    mode = block.get("mode", "full")
    if isinstance(mode, dict):
        smp = mode["sampled"]
        mode = ("sampled", int(smp["count"]), int(smp["seed"]))
    elif mode != "full":
        raise ParameterError("mode must be 'full' or {'sampled': {count, seed}}")
    return build_bad_set(block["J"], mode, block.get("k_max"), block.get("horizon"))

