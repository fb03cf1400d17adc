"""Block-structured C-type operators and their periodicity / projection checks.

Basis vectors are grouped into blocks ``[b_n, b_{n+1})``.  Inside a block the
operator is a forward weighted shift; the last vector of block ``n`` is sent
back to the start of block ``phi(n)`` (coefficient ``v_n``) and to the start
of its own block (coefficient minus the inverse weight product).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence

import numpy as np

from .errors import ArithmeticModeError, BudgetError, ConstructionError, ParameterError
from .linop import SparseOperator, as_exact

SPARSE_POWER_BUDGET = 50_000_000


@dataclass
class CTypeParams:
    """``v[n]`` and ``phi[n]`` for ``1 <= n < n_max`` (index 0 unused), ``w[j]`` for interior ``j``."""

    v: List[Fraction | None]
    w: List[Fraction]
    phi: List[int | None]
    b: List[int]
    n_max: int

    def __post_init__(self):
        self.validate()

    @property
    def dim(self) -> int:
        return self.b[self.n_max]

    def block_of(self, k: int) -> int:
        for n in range(self.n_max):
            if self.b[n] <= k < self.b[n + 1]:
                return n
        raise ParameterError(f"index {k} outside the materialized blocks")

    def block_size(self, n: int) -> int:
        return self.b[n + 1] - self.b[n]

    def weight_product(self, n: int) -> Fraction:
        prod = Fraction(1)
        for j in range(self.b[n] + 1, self.b[n + 1]):
            prod *= self.w[j]
        return prod

    def validate(self) -> None:
        b = self.b
        if self.n_max < 1 or len(b) < self.n_max + 1:
            raise ConstructionError("need b_0..b_{n_max} with n_max >= 1")
        if b[0] != 0 or any(x >= y for x, y in zip(b, b[1:])):
            raise ConstructionError("b must start at 0 and be strictly increasing")
        if len(self.w) < self.dim:
            raise ConstructionError("weights must cover every index below b_{n_max}")
        for n in range(1, self.n_max):
            f = self.phi[n]
            if f is None or not 0 <= f < n:
                raise ConstructionError(f"phi({n}) = {f} must lie in [0, {n})")
            if self.v[n] is None or self.v[n] == 0:
                raise ConstructionError(f"v_{n} must be non-zero")
            if self.block_size(n) % (2 * self.block_size(f)):
                raise ConstructionError(
                    f"block {n} size {self.block_size(n)} is not a multiple of 2*{self.block_size(f)}"
                )
        starts = set(b[: self.n_max])
        for j in range(self.dim):
            if j not in starts and not self.w[j] > 0:
                raise ConstructionError(f"weight w_{j} must be positive")


@dataclass(frozen=True)
class CPlusOneParams:
    Delta: tuple
    delta: tuple
    tau: tuple
    Delta0: int = 1

    def __post_init__(self):
        k_max = len(self.Delta)
        if not (len(self.delta) == len(self.tau) == k_max) or k_max == 0:
            raise ParameterError("Delta, delta and tau need equal non-zero length")
        for k in range(k_max):
            if not 0 <= self.delta[k] < self.Delta[k]:
                raise ParameterError(f"delta^({k + 1}) must lie in [0, Delta^({k + 1}))")
        for name, seq in (("delta", self.delta), ("tau", self.tau)):
            if any(x >= y for x, y in zip(seq, seq[1:])):
                raise ParameterError(f"{name} must be strictly increasing")
        prev = self.Delta0
        for k, d in enumerate(self.Delta, start=1):
            if d % (2 * prev):
                raise ParameterError(f"Delta^({k}) = {d} is not a multiple of 2*{prev}")
            prev = d

    @property
    def k_max(self) -> int:
        return len(self.Delta)

    def to_json(self) -> str:
        return json.dumps(
            {"Delta0": self.Delta0, "Delta": list(self.Delta), "delta": list(self.delta),
             "tau": list(self.tau), "k_max": self.k_max},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str | dict) -> "CPlusOneParams":
        d = json.loads(text) if isinstance(text, str) else dict(text)
        k = d.get("k_max", len(d["Delta"]))
        return cls(tuple(d["Delta"][:k]), tuple(d["delta"][:k]), tuple(d["tau"][:k]), d.get("Delta0", 1))


def level_of(n: int) -> int:
    """The ``k`` with ``n`` in ``[2^(k-1), 2^k)``."""
    return n.bit_length()


def cplus1_params(p: CPlusOneParams) -> CTypeParams:
    n_max = 1 << p.k_max
    b = [0, p.Delta0]
    v: List[Fraction | None] = [None]
    phi: List[int | None] = [None]
    for n in range(1, n_max):
        k = level_of(n)
        b.append(b[-1] + p.Delta[k - 1])
        v.append(Fraction(1, 1 << p.tau[k - 1]))
        phi.append(n - (1 << (k - 1)))
    w = [Fraction(1)] * b[-1]
    for n in range(1, n_max):
        k = level_of(n)
        for i in range(1, p.Delta[k - 1]):
            w[b[n] + i] = Fraction(2) if i <= p.delta[k - 1] else Fraction(1)
    return CTypeParams(v, w, phi, b, n_max)


def build_ctype(params: CTypeParams) -> SparseOperator:
    params.validate()
    cols: Dict[int, Dict[int, Fraction]] = {}
    ends = {params.b[n + 1] - 1: n for n in range(params.n_max)}
    for k in range(params.dim):
        n = ends.get(k)
        if n is None:
            cols[k] = {k + 1: as_exact(params.w[k + 1])}
            continue
        back = -1 / params.weight_product(n)
        if n == 0:
            cols[k] = {0: back}
        else:
            col = {params.b[n]: back}
            tgt = params.b[params.phi[n]]
            col[tgt] = col.get(tgt, 0) + as_exact(params.v[n])
            cols[k] = col
    return SparseOperator(params.dim, cols, exact=True)


def check_truncation(T: SparseOperator, params: CTypeParams) -> bool:
    """Every column of block ``n`` stays inside ``[0, b_{n+1})``."""
    for k in range(T.dim):
        top = params.b[params.block_of(k) + 1]
        if any(r >= top for r in T.column(k)):
            return False
    return True


def _require_exact(T: SparseOperator) -> None:
    if not T.exact:
        raise ArithmeticModeError("periodicity and identity checks need exact arithmetic")


def check_periodicity(T: SparseOperator, params: CTypeParams, n: int) -> bool:
    """``T^(2(b_{n+1}-b_n)) e_k == e_k`` exactly for every ``k`` in block ``n``."""
    _require_exact(T)
    if not 0 <= n < params.n_max:
        raise ParameterError(f"block {n} not materialized")
    period = 2 * params.block_size(n)
    for k in range(params.b[n], params.b[n + 1]):
        if T.power_column(k, period) != {k: Fraction(1)}:
            return False
    return True


def finite_period(params: CTypeParams, blocks: int) -> int:
    """``2 * lcm`` of the sizes of blocks ``0..blocks-1``."""
    return 2 * math.lcm(*(params.block_size(n) for n in range(blocks)))


@dataclass
class ProjectionReport:
    n: int
    K: int
    J: int
    identity_pass: bool
    norms: List[Fraction | float]
    j_max: int
    bound_pass: bool
    first_failure: int | None
    worst_column: int | None
    substitution: str
    mode: str


def check_nothfhc(T: SparseOperator, params: CTypeParams, n_list: Sequence[int], j_max: int, p: float = 1,
                  samples: int = 64, seed: int = 0, budget: int = SPARSE_POWER_BUDGET) -> List[ProjectionReport]:
    """Projection conditions with ``K_n = b_{2^n}`` and ``J_n = 2 * (size of block 2^(n-1))``.

    For ``p = 1`` the operator norm is computed exactly as a max column sum;
    otherwise the inequality is tested on ``samples`` seeded random vectors.
    """
    _require_exact(T)
    reports = []
    for n in n_list:
        if n < 1 or (1 << n) >= params.n_max:
            raise ParameterError(f"n={n} needs blocks up to 2^{n}, only {params.n_max} materialized")
        K = params.b[1 << n]
        J = 2 * params.block_size(1 << (n - 1))
        cost = (j_max + J) * (T.dim - K)
        if cost > budget:
            raise BudgetError(f"about {cost} sparse column steps exceed the budget of {budget}")
        identity = all(T.power_column(k, J) == {k: Fraction(1)} for k in range(K))
        if p == 1:
            norms = [Fraction(0)] * (j_max + 1)
            arg = [None] * (j_max + 1)
            for c in range(K, T.dim):
                vec = {c: Fraction(1)}
                for j in range(1, j_max + 1):
                    vec = T.apply_sparse(vec)
                    mass = sum(abs(x) for r, x in vec.items() if r < K)
                    if mass > norms[j]:
                        norms[j], arg[j] = mass, c
            mode = "exact column sums"
        else:
            rng = np.random.default_rng(seed)
            Tf = T.to_float().csr()
            norms, arg = [0.0] * (j_max + 1), [None] * (j_max + 1)
            for s in range(samples):
                x = np.zeros(T.dim)
                x[K:] = rng.standard_normal(T.dim - K)
                base = np.sum(np.abs(x) ** p) ** (1 / p)
                y = x
                for j in range(1, j_max + 1):
                    y = Tf @ y
                    r = np.sum(np.abs(y[:K]) ** p) ** (1 / p) / base
                    if r > norms[j]:
                        norms[j], arg[j] = float(r), s
            mode = f"{samples} sampled vectors, p={p}"
        fail = next((j for j, v in enumerate(norms) if v > 1), None)
        reports.append(
            ProjectionReport(
                n, K, J, identity, norms, j_max, fail is None, fail,
                arg[fail] if fail is not None else None,
                f"j in [0, {j_max}] substituted for [0, (n+1)^(2^J_n) J_n] with J_n={J}",
                mode,
            )
        )
    return reports


# -- parameter schedule ----------------------------------------------------------------------


@dataclass
class ScheduleReport:
    Delta: List[int]
    delta: List[int]
    tau: List[int]
    p: float
    gamma: List[Fraction | float]
    beta: Dict[int, Fraction | float]
    gamma_decreasing: bool
    gamma_failures: List[int]
    summability: List[Fraction | float]
    summability_pass: List[bool]
    truncated: bool
    ratios: List[Fraction]
    ratio_pass: bool
    block_checks: int
    block_worst: float
    block_pass: bool
    notes: List[str] = field(default_factory=list)


def _gamma(delta_prev: int, tau: int, Delta: int, p: float):
    if p == 1:
        return Fraction(2) ** (delta_prev - tau)
    return 2.0 ** (delta_prev - tau) * Delta ** (1 - 1 / p)


def block_estimate_check(params: CTypeParams, Tf, p: float, bounds: Dict[int, float], Delta: Sequence[int],
                         delta: Sequence[int], samples: int, seed: int):
    """Sampled ``||P_m T^j P_l x|| <= (beta_l / 4) ||P_l x||`` with ``j <= Delta - delta``."""
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(samples):
        l = rng.randrange(1, params.n_max)
        k = level_of(l)
        m = rng.randrange(0, l)
        j = rng.randint(0, Delta[k - 1] - delta[k - 1])
        x = np.zeros(params.dim)
        lo, hi = params.b[l], params.b[l + 1]
        x[lo:hi] = [rng.uniform(-1, 1) for _ in range(hi - lo)]
        y = x
        for _ in range(j):
            y = Tf @ y
        part = y[params.b[m]:params.b[m + 1]]
        lhs = np.sum(np.abs(part) ** p) ** (1 / p)
        rhs = np.sum(np.abs(x) ** p) ** (1 / p)
        worst = max(worst, lhs / (bounds[l] * rhs))
    return worst


def ctypeex_schedule(Delta: Sequence[int], p: float = 1, k_max: int | None = None, samples: int = 200,
                     seed: int = 0) -> ScheduleReport:
    Delta = list(Delta)[: k_max or len(Delta)]
    for k, d in enumerate(Delta, start=1):
        if d <= 0 or d % 8:
            raise ParameterError(f"Delta^({k}) = {d} is not a positive multiple of 8")
        if k > 1 and d % (2 * Delta[k - 2]):
            raise ParameterError(f"Delta^({k}) = {d} is not a multiple of 2*Delta^({k - 1})")
    delta = [d // 4 for d in Delta]
    tau = [d // 8 for d in Delta]
    K = len(Delta)
    gamma = [_gamma(delta[k - 2] if k > 1 else 0, tau[k - 1], Delta[k - 1], p) for k in range(1, K + 1)]
    fails = [k + 1 for k in range(1, K) if not gamma[k] < gamma[k - 1]]
    beta = {l: 4 * gamma[level_of(l) - 1] for l in range(1, 1 << K)}
    summ = [(2**n) * sum(2 ** (k - 1) * gamma[k - 1] for k in range(n + 1, K + 1)) for n in range(K)]
    ratios = [Fraction(delta[k] - tau[k], Delta[k]) for k in range(K)]
    notes = ["sums over k run only up to k_max", "delta^(0) taken as 0 for gamma_1"]

    params = cplus1_params(CPlusOneParams(tuple(Delta), tuple(delta), tuple(tau)))
    Tf = build_ctype(params).to_float().csr()
    bounds = {l: float(beta[l]) / 4 for l in beta}
    worst = block_estimate_check(params, Tf, p, bounds, Delta, delta, samples, seed) if samples else 0.0
    return ScheduleReport(
        Delta, delta, tau, p, gamma, beta, not fails, fails, summ, [s <= 1 for s in summ], True,
        ratios, all(r == Fraction(1, 8) for r in ratios), samples, worst, worst <= 1 + 1e-12, notes,
    )
