"""Explicit frequently hypercyclic vectors for weighted shifts, and rank-one interpolation.

The vector ``x = sum_p sum_{n in B_p} S^n x_p`` has coordinates that grow
like ``W(k)``, so it is stored scaled: ``y_k = W(k) x_k``.  Then
``(T^n x)_j = y_{n+j} / W(j)`` and nothing overflows.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from .density import DensityProfile, IndexSet, density_profile, orbit as _orbit
from .errors import ParameterError, RankError
from .linop import SparseOperator, as_exact, exact_rank, solve_exact
from .sets import disjointify
from .shifts import WeightSystem


def default_eps(alpha: Sequence[float]) -> List[float]:
    return [min(a, 2.0**-p) / (2 * (p + 1)) for p, a in enumerate(alpha, start=1)]


def plan_inequality(eps: Sequence[float], alpha: Sequence[float]) -> List[bool]:
    """``p eps_p + sum_{q > p+1} eps_q < alpha_p`` for each materialized ``p``."""
    out = []
    for p in range(1, len(eps) + 1):
        out.append(p * eps[p - 1] + sum(eps[p + 1:]) < alpha[p - 1])
    return out


def _support(x: Sequence[float]) -> Dict[int, float]:
    return {k: float(v) for k, v in enumerate(x) if v != 0}


def _log2W(wsys: WeightSystem, k):
    return np.asarray(wsys.log2W, dtype=float)[k]


def s_tail(wsys: WeightSystem, x: Dict[int, float], N: int, c: float) -> float:
    """Upper bound on ``sum_{n >= N} ||S^n x||_sup`` (exact for constant weights)."""
    if not x:
        return 0.0
    ks = np.fromiter(x.keys(), dtype=np.int64)
    if ks.max() + N > wsys.H:
        raise ParameterError("tail index beyond the weight horizon")
    vals = np.abs(np.fromiter(x.values(), dtype=float))
    head = np.max(vals * np.exp2(_log2W(wsys, ks) - _log2W(wsys, ks + N)))
    return float(head * c / (c - 1))


@dataclass
class FHCCPlan:
    targets: List[Dict[int, float]]
    degrees: List[int]
    alpha: List[float]
    eps: List[float]
    N: List[int]
    B: List[IndexSet]
    K: int
    orbit_horizon: int
    burn_in: int
    y: np.ndarray  # scaled coordinates W(k) x_k
    wsys: WeightSystem = field(repr=False)
    split_le: List[float]
    split_gt: List[float]
    slack: float
    inequality: List[bool]

    def coords(self, n: int) -> np.ndarray:
        """``T^n x`` on coordinates ``0..K-n-1``."""
        L = self.wsys.log2W[: self.K - n]
        if self.wsys.dyadic:
            return np.ldexp(self.y[n:], -L)
        return self.y[n:] * np.exp2(-np.asarray(L, float))

    def orbit(self, horizon: int | None = None) -> Iterator[Tuple[int, np.ndarray]]:
        for n in range((self.orbit_horizon if horizon is None else horizon) + 1):
            yield n, self.coords(n)

    def error(self, n: int, p: int) -> float:
        """``||T^n x - x_p||_sup``."""
        v = self.coords(n).copy()
        for k, a in self.targets[p - 1].items():
            v[k] -= a
        return float(np.max(np.abs(v))) if v.size else 0.0

    def manifest(self, directory: str | None = None) -> dict:
        files = {}
        if directory:
            os.makedirs(directory, exist_ok=True)
            for p, b in enumerate(self.B, start=1):
                name = f"B_{p}.txt"
                with open(os.path.join(directory, name), "w") as fh:
                    fh.write(b.to_text())
                files[p] = name
        return {
            "targets": [{str(k): v for k, v in t.items()} for t in self.targets],
            "alpha": self.alpha,
            "eps": self.eps,
            "N": self.N,
            "K": self.K,
            "orbit_horizon": self.orbit_horizon,
            "burn_in": self.burn_in,
            "B_files": files,
            "B_sizes": [len(b) for b in self.B],
            "split_le": self.split_le,
            "split_gt": self.split_gt,
            "dropped_tail_bound": self.slack,
        }

    def to_json(self, directory: str | None = None) -> str:
        return json.dumps(self.manifest(directory), sort_keys=True, indent=1)


def fhcc_vector(wsys: WeightSystem, targets: Sequence[Sequence[float]], A: Sequence[IndexSet],
                alpha: Sequence[float], K: int, orbit_horizon: int, burn_in: int = 1000) -> FHCCPlan:
    P = len(targets)
    if not (len(A) == len(alpha) == P) or P == 0:
        raise ParameterError("targets, A and alpha need equal non-zero length")
    tg = [_support(t) for t in targets]
    if any(not t for t in tg):
        raise ParameterError("targets must be non-zero")
    deg = [max(t) for t in tg]
    if K < orbit_horizon + max(deg) + 1:
        raise ParameterError(f"K={K} is below orbit horizon + target degree; truncation would corrupt the orbit")
    if K > wsys.H:
        raise ParameterError("K exceeds the weight horizon")
    c = float(wsys.weights[:K].min())
    if c <= 1:
        raise ParameterError(f"weights must exceed 1 on the used range (min {c})")
    alpha = [float(a) for a in alpha]
    if any(a <= 0 for a in alpha):
        raise ParameterError("radii must be positive")
    eps = default_eps(alpha)
    ineq = plan_inequality(eps, alpha)
    if not all(ineq):
        raise ParameterError(f"tolerance rule violates the plan inequality at p={ineq.index(False) + 1}")

    tail_room = wsys.H - max(deg)
    N = []
    for p in range(1, P + 1):
        n = max(deg[:p]) + 1
        while max(s_tail(wsys, tg[i], n, c) for i in range(p)) > eps[p - 1]:
            n += 1
            if n > tail_room:
                raise ParameterError(f"no tail threshold for p={p} within the weight horizon")
        N.append(n)

    dplan = disjointify(list(A), N, burn_in)
    B = dplan.B

    # scaled coordinates: S^n x_p contributes W(k) x_{p,k} at index k + n
    y = np.zeros(K)
    L = np.asarray(wsys.log2W, dtype=float)
    for p in range(P):
        members = B[p].members
        members = members[members <= K - 1 - deg[p]]
        for k, a in tg[p].items():
            np.add.at(y, members + k, a * np.exp2(L[k]))

    # partial sums of the error decomposition, from closed-form tails
    split_le, split_gt = [], []
    for p in range(1, P + 1):
        split_le.append(sum(s_tail(wsys, tg[q - 1], N[p - 1] + N[q - 1], c) for q in range(1, p + 1)))
        split_gt.append(sum(s_tail(wsys, tg[q - 1], N[q - 1], c) for q in range(p + 1, P + 1)))
    # terms S^n x_q with n beyond the truncation still reach T^m x for m <= horizon
    slack = sum(s_tail(wsys, tg[q], max(K - deg[q] - orbit_horizon, 1), c) for q in range(P))
    return FHCCPlan(tg, deg, alpha, eps, N, B, K, orbit_horizon, burn_in, y, wsys, split_le, split_gt, slack, ineq)


@dataclass
class VisitReport:
    visits: List[IndexSet]
    profiles: List[DensityProfile]


def orbit_density_report(T, x, targets: Sequence[Sequence[float]], radii: Sequence[float], A: Sequence[IndexSet],
                         horizon: int, burn_in: int, orbit: Iterable | None = None) -> VisitReport:
    """Visit sets ``{n : ||T^n x - target_i||_sup < r_i}`` intersected with ``A_i``, in one orbit pass.

    ``orbit`` may supply precomputed ``(n, T^n x)`` pairs (for example
    :meth:`FHCCPlan.orbit`); otherwise ``T`` is applied repeatedly to ``x``.
    """
    if not (len(targets) == len(radii) == len(A)):
        raise ParameterError("targets, radii and A need equal length")
    if orbit is None:
        if len(getattr(x, "coords", x)) != T.dim:
            raise ParameterError("dimension mismatch")
        orbit = _orbit(T, x, horizon)
    tg = [np.asarray(t, dtype=float) for t in targets]
    masks = [np.zeros(horizon + 1, dtype=bool) for _ in tg]
    for n, v in orbit:
        if n > horizon:
            break
        v = np.asarray(getattr(v, "coords", v), dtype=float)
        for i, t in enumerate(tg):
            m = max(v.size, t.size)
            diff = np.zeros(m)
            diff[: v.size] += v
            diff[: t.size] -= t
            if (np.max(np.abs(diff)) if m else 0.0) < radii[i]:
                masks[i][n] = True
    visits = []
    for mk, a in zip(masks, A):
        h = min(horizon, a.horizon)
        visits.append(IndexSet(mk).restrict(h) & a.restrict(h))
    return VisitReport(visits, [density_profile(v, min(burn_in, v.horizon)) for v in visits])


# -- rank-one interpolation -----------------------------------------------------------------------


@dataclass
class Interpolation:
    op: SparseOperator
    functionals: List[List[Fraction]]
    residual_norms: List[float]
    bound: float
    within_eps: bool


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b) if x and y)


def biorthogonal(z: Sequence[Sequence[Fraction]], l: int) -> List[Fraction]:
    """Least-norm ``f`` with ``f(z_s) = 0`` for ``s < l`` and ``f(z_l) = 1`` (0-based ``l``)."""
    Z = z[: l + 1]
    gram = [[_dot(a, b) for b in Z] for a in Z]
    rhs = [Fraction(0)] * l + [Fraction(1)]
    coef = solve_exact(gram, rhs)
    dim = len(z[0])
    return [sum(coef[s] * Z[s][k] for s in range(l + 1)) for k in range(dim)]


def similarity_interpolation(S: SparseOperator, pairs: Sequence[Tuple[Sequence, Sequence]], eps: float) -> Interpolation:
    """Rank-one updates ``L_l = L_{l-1} + f_l (x) (x_l - L_{l-1} z_l)`` so that ``L z_l = x_l``."""
    if not S.exact:
        raise ParameterError("interpolation runs in exact arithmetic")
    z = [[as_exact(v) for v in zz] for zz, _ in pairs]
    xs = [[as_exact(v) for v in xx] for _, xx in pairs]
    if any(len(v) != S.dim for v in z + xs):
        raise ParameterError("vector length differs from the operator dimension")
    if exact_rank(z) < len(z):
        raise RankError("the z vectors are linearly dependent")
    op = S
    funcs, res_norms, bound = [], [], 0.0
    for l in range(len(z)):
        f = biorthogonal(z, l)
        r = [a - b for a, b in zip(xs[l], op.apply(z[l]))]
        cols = {c: {k: fc * rk for k, rk in enumerate(r) if rk} for c, fc in enumerate(f) if fc}
        if any(r):
            op = op + SparseOperator(S.dim, cols, True)
        fn = float(np.sqrt(float(_dot(f, f))))
        rn = float(np.sqrt(float(_dot(r, r))))
        funcs.append(f)
        res_norms.append(rn)
        bound += fn * rn
    return Interpolation(op, funcs, res_norms, bound, bound < eps)
