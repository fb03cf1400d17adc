"""Named experiment pipelines.

Each pipeline takes a parameter dict and returns a :class:`Result` holding
assertions and text artifacts.  Pipelines never write files themselves.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List

import numpy as np

from . import ctype, dsum, fhcc, sets, shifts
from .density import IndexSet, density_profile, syndetic_gap
from .errors import ArithmeticModeError, ParameterError
from .linop import SparseOperator, exact_rank


@dataclass
class Assertion:
    name: str
    operation: str
    anchor: str
    passed: bool
    detail: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "operation": self.operation, "anchor": self.anchor,
                "passed": bool(self.passed), "detail": self.detail}


@dataclass
class Result:
    assertions: List[Assertion] = field(default_factory=list)
    artifacts: Dict[str, str] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)

    def check(self, name, operation, anchor, passed, **detail) -> bool:
        self.assertions.append(Assertion(name, operation, anchor, bool(passed), detail))
        return bool(passed)


def _s(x) -> Any:
    """JSON-friendly scalar."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


@dataclass(frozen=True)
class Context:
    arithmetic: str
    seed: int
    threads: int


# -- densities ----------------------------------------------------------------------------


def _named_set(params) -> IndexSet:
    h = params["horizon"]
    kind = params.get("set", "evens")
    if kind == "evens":
        return IndexSet.progression(2, h)
    if kind == "odds":
        return IndexSet.progression(2, h, offset=1)
    if kind == "progression":
        return IndexSet.progression(params.get("step", 3), h, offset=params.get("offset", 0))
    if kind == "layer":
        return sets.dyadic_layer(params.get("k", 1), h)
    if kind == "empty":
        return IndexSet.empty(h)
    raise ParameterError(f"unknown set {kind!r}")


def run_densities(params, ctx: Context) -> Result:
    res = Result()
    s = _named_set(params)
    burn = params.get("burn_in", min(100, s.horizon))
    prof = density_profile(s, burn)
    recount = np.cumsum(s.mask)
    res.check("ratio equals recount", "density_profile", "counting ratio #(A in [0,N])/(N+1)",
              bool(np.all(prof.counts == recount)))
    res.check("ratios in [0,1] and tail_min <= tail_max", "density_profile", "lower/upper density at finite horizon",
              bool(prof.ratios.min() >= 0 and prof.ratios.max() <= 1 and prof.tail_min <= prof.tail_max))
    expected = params.get("expect_density")
    if expected is not None:
        tol = params.get("tolerance", 1e-2)
        res.check("tail density near expected value", "density_profile", "natural density",
                  abs(prof.tail_min - expected) <= tol and abs(prof.tail_max - expected) <= tol,
                  expected=expected, tolerance=tol)
    if len(s):
        res.summary["syndetic_gap"] = syndetic_gap(s).gap
    res.summary.update(size=len(s), tail_min=prof.tail_min, tail_max=prof.tail_max, burn_in=burn)
    res.artifacts["set.txt"] = s.to_text()
    res.artifacts["profile.csv"] = prof.to_csv()
    return res


# -- counterexample shifts ----------------------------------------------------------------------


def run_counterexample(params, ctx: Context) -> Result:
    res = Result()
    a = Fraction(params.get("a", 8))
    eps = Fraction(params.get("eps", "1/8"))
    p_max = params.get("p_max", 3)
    H = params.get("H", 10**6)
    burn = params.get("burn_in", 1000)
    rule = params.get("b_rule", "default")
    if rule != "default":
        raise ParameterError("only b_rule 'default' (4^q (2q+1)) is supported")
    ic = sets.verify_interval_conditions(a, eps)
    res.check("interval conditions", "verify_interval_conditions", "interval conditions for (a, eps)", ic.passed)
    pair = shifts.counterexample_pair(a, eps, None, p_max, H)
    for name, ws in (("w", pair.w), ("w_prime", pair.w_prime)):
        vals = sorted(set(ws.weights.tolist()))
        res.check(f"{name} weights in {{1/2,1,2}}", "counterexample_pair", "weights between 1/2 and 2",
                  set(vals) <= {0.5, 1.0, 2.0}, values=vals)
    for name, ws, fam in (("w", pair.w, pair.E), ("w_prime", pair.w_prime, pair.F)):
        rep = shifts.check_fhc_shift(ws, fam, H=H)
        res.check(f"{name} separation", "check_fhc_shift", "shift criterion condition (b): W(m-n) >= max(M(p),M(q))",
                  rep.separation_pass, pairs=rep.pairs_checked, first_violation=rep.first_violation)
        res.check(f"{name} windowed minima non-decreasing", "check_fhc_shift",
                  "shift criterion condition (a), finite-horizon surrogate",
                  all(rep.nondecreasing.values()),
                  minima={str(p): v for p, v in rep.window_minima.items()})
    g_bound = params.get("g2_bound", 0.02)
    for p in range(1, p_max + 1):
        g = shifts.gp_inclusion_check(pair.w, pair.w_prime, p, H, pair.b, p_max, burn)
        res.check(f"G_{p} inclusion", "gp_inclusion_check", "G_p inside union of b_q N + [-q, q], q >= p",
                  g.included and g.monotone, size=len(g.G), tail_max=g.tail_max, bound=g.bound)
        if p == 2:
            res.check("G_2 upper density", "gp_inclusion_check", "upper density of G_p is small",
                      g.tail_max <= g_bound, tail_max=g.tail_max, limit=g_bound)
    pd = params.get("defect_p", min(3, p_max))
    if pd >= 1:
        d = shifts.transitivity_defect(pair.w, 2.0**pd, H, burn)
        bound = shifts.defect_bound(a, eps, pair.b, pd)
        res.check(f"C_{{2^{pd}}} upper density below 0.95", "transitivity_defect",
                  "set C_M of large cumulative weights has upper density < 1",
                  d.profile.tail_max <= 0.95, tail_max=d.profile.tail_max, closed_form_bound=bound)
    res.summary.update(b=pair.b, E_sizes=[len(e) for e in pair.E], F_sizes=[len(f) for f in pair.F],
                       max_log2W=[int(pair.w.log2W.max()), int(pair.w_prime.log2W.max())])
    if params.get("export_weights", False):
        res.artifacts["w.csv"] = pair.w.to_csv()
        res.artifacts["w_prime.csv"] = pair.w_prime.to_csv()
    return res


# -- bad set ---------------------------------------------------------------------------------


def run_bad_set(params, ctx: Context) -> Result:
    res = Result()
    block = dict(params)
    if "J1" in block:
        block.setdefault("J", [block.pop("J1")])
    block.setdefault("J", [4])
    block.setdefault("mode", "full")
    block.setdefault("k_max", len(block["J"]))
    s = sets.bad_set_from_json(block)
    prof = density_profile(s, 0)
    counts = prof.counts
    n = np.arange(s.horizon + 1)
    ok = bool(np.all(4 * counts >= n + 1))
    worst = int(np.argmin(counts / (n + 1)))
    res.check("r(N) >= 1/4 for every N", "build_bad_set", "counting ratio of the bad set is at least 1/4",
              ok, horizon=s.horizon, min_ratio=str(Fraction(int(counts[worst]), worst + 1)), at=worst)
    res.summary.update(horizon=s.horizon, size=len(s))
    res.artifacts["set.txt"] = s.to_text()
    res.artifacts["profile.csv"] = prof.to_csv()
    return res


# -- C-type operators --------------------------------------------------------------------------

PRESETS = {
    "delta-8-32": {"Delta0": 1, "Delta": [8, 32], "delta": [2, 8], "tau": [1, 4]},
    "delta-8-32-64": {"Delta0": 1, "Delta": [8, 32, 64], "delta": [2, 8, 16], "tau": [1, 4, 8]},
}


def _require_exact(ctx: Context, name: str):
    if ctx.arithmetic != "exact":
        raise ArithmeticModeError(f"{name} runs in exact arithmetic only")


def run_ctype(params, ctx: Context) -> Result:
    _require_exact(ctx, "ctype-check")
    res = Result()
    spec = dict(PRESETS[params.get("preset", "delta-8-32")])
    spec.update({k: params[k] for k in ("Delta0", "Delta", "delta", "tau", "k_max") if k in params})
    cp = ctype.CPlusOneParams.from_json(spec)
    params_ct = ctype.cplus1_params(cp)
    T = ctype.build_ctype(params_ct)
    res.check("finite spans invariant", "build_ctype", "truncation to the first blocks is exact",
              ctype.check_truncation(T, params_ct))
    blocks = range(params_ct.n_max)
    with ThreadPoolExecutor(max_workers=ctx.threads) as ex:
        per = list(ex.map(lambda n: ctype.check_periodicity(T, params_ct, n), blocks))
    res.check("periodicity of every block", "check_periodicity",
              "T^(2(b_(n+1)-b_n)) e_k = e_k on block n", all(per), per_block=per)
    j_max = params.get("j_max", 200)
    n_list = params.get("n_list", [1])
    for r in ctype.check_nothfhc(T, params_ct, n_list, j_max):
        res.check(f"condition (a), n={r.n}", "check_nothfhc", "T^(J_n) fixes span(e_k, k < K_n)",
                  r.identity_pass, K=r.K, J=r.J)
        res.check(f"condition (b), n={r.n}", "check_nothfhc",
                  "||pi_K T^j (I - pi_K)||_(l1->l1) <= 1 for j <= j_max",
                  r.bound_pass, substitution=r.substitution, first_failure=r.first_failure,
                  worst_column=r.worst_column, max_norm=_s(max(r.norms)),
                  norm_at_failure=_s(r.norms[r.first_failure]) if r.first_failure is not None else None)
        guaranteed = 3 * cp.Delta[r.n] // 4 if r.n < cp.k_max else None
        if guaranteed is not None:
            ok = all(v <= 1 for v in r.norms[: min(guaranteed, j_max) + 1])
            res.check(f"condition (b) on the guaranteed range, n={r.n}", "check_nothfhc",
                      "block estimate range j <= 3/4 Delta^(n+1)", ok, j_range=[0, guaranteed])
    sched = ctype.ctypeex_schedule(cp.Delta, 1, samples=params.get("samples", 200), seed=ctx.seed)
    res.check("schedule ratio 1/8", "ctypeex_schedule", "(delta-tau)/Delta = 1/8 > 0",
              sched.ratio_pass, ratios=[str(r) for r in sched.ratios])
    res.check("block estimate spot check", "ctypeex_schedule", "||P_m T^j P_l x|| <= (beta_l/4)||P_l x||",
              sched.block_pass, samples=sched.block_checks, worst_ratio=sched.block_worst)
    res.summary.update(b=params_ct.b, gamma=[str(g) for g in sched.gamma],
                       summability=[str(s) for s in sched.summability], summability_truncated=True,
                       gamma_decreasing=sched.gamma_decreasing)
    res.artifacts["operator.csv"] = "\n".join(T.coo_lines()) + "\n"
    res.artifacts["params.json"] = cp.to_json() + "\n"
    return res


# -- FHCC orbit ----------------------------------------------------------------------------------


def run_fhcc(params, ctx: Context) -> Result:
    if ctx.arithmetic != "float":
        raise ArithmeticModeError("fhcc-orbit runs in float mode only; pass --float")
    res = Result()
    K = params.get("K", 20000)
    horizon = params.get("orbit_horizon", 10000)
    burn = params.get("burn_in", 1000)
    mod = params.get("modulus", 4)
    targets = params.get("targets", [[1], [1, 1]])
    alpha = params.get("alpha", [0.125] * len(targets))
    weight = params.get("weight", 2)
    w = shifts.WeightSystem.constant(weight, K + 64)
    A = []
    for p in range(1, len(targets) + 1):
        a = IndexSet.progression(mod, horizon, offset=(p - 1) % mod)
        A.append(a - IndexSet.from_members([0], horizon))
    plan = fhcc.fhcc_vector(w, targets, A, alpha, K, horizon, burn)
    worst = []
    ok = True
    for p in range(1, len(targets) + 1):
        errs = [plan.error(int(n), p) for n in plan.B[p - 1].members if n <= horizon]
        limit = 3 * plan.alpha[p - 1] + plan.slack
        worst.append(max(errs, default=0.0))
        ok &= all(e < limit for e in errs)
    res.check("orbit error below 3 alpha_p + slack on B_p", "fhcc_vector", "||T^n x - x_p|| < 3 alpha_p for n in B_p",
              ok, worst=worst, slack=plan.slack)
    res.check("error split", "fhcc_vector", "p eps_p + sum eps_q < alpha_p",
              all(le <= p * e + 1e-15 for p, (le, e) in enumerate(zip(plan.split_le, plan.eps), start=1))
              and all(plan.inequality), split_le=plan.split_le, split_gt=plan.split_gt)
    radii = [3 * a + plan.slack for a in plan.alpha]
    rep = fhcc.orbit_density_report(None, None, targets, radii, A, horizon, burn, orbit=plan.orbit())
    tails = [p.tail_min for p in rep.profiles]
    res.check("visit densities positive", "orbit_density_report", "visit set meets A_p in positive lower density",
              all(t > 0 for t in tails), tail_min=tails, B_min=[b.min() if b else None for b in plan.B])
    res.summary.update(N=plan.N, eps=plan.eps, B_sizes=[len(b) for b in plan.B])
    res.artifacts["plan.json"] = plan.to_json() + "\n"
    for p, b in enumerate(plan.B, start=1):
        res.artifacts[f"B_{p}.txt"] = b.to_text()
    return res


# -- block-space operators -----------------------------------------------------------------------


def run_dsum(params, ctx: Context) -> Result:
    _require_exact(ctx, "dsum-check")
    res = Result()
    space = dsum.DSumSpace.from_json({"L": params.get("L", 8), "K": params.get("K", 64),
                                      "eps_rule": params.get("eps_rule", "dyadic")})
    rng = random.Random(ctx.seed)
    inter = dsum.check_intertwining(space)
    res.check("intertwining", "check_intertwining", "T1 D = D T", inter.passed,
              per_block={str(k): v for k, v in inter.per_block.items()})
    n = params.get("samples", 100)
    worst = Fraction(0)
    ok = True
    for _ in range(n):
        x = dsum.random_dyadic_vector(space, rng, m=rng.choice([1, 2, 3]))
        r = dsum.crucial_estimate_check(space, x, rng.randint(1, space.L))
        ok &= r.passed
        worst = max(worst, r.max_ratio)
    res.check("decay estimate", "crucial_estimate_check", "|delta(k)| <= 2^-k ||x(1)||_1 / |x_m(1)|",
              ok, samples=n, max_ratio=float(worst))
    ops = dsum.build_dsum_ops(space)
    ranks, exact = [], True
    for _ in range(params.get("pairs", 10)):
        u = dsum.random_dyadic_vector(space, rng)
        while u[0] == 0:
            u[0] = Fraction(rng.randint(-8, 8), 2)
        v = dsum.random_dyadic_vector(space, rng)
        R = dsum.build_R(space, u, v)
        exact &= R.apply(u) == v
        ranks.append((R - ops["R0"]).rank())
    res.check("R u = v", "build_R", "R(u) = v", exact)
    res.check("R - R0 has rank one", "build_R", "rank-one perturbation of R0", all(r == 1 for r in ranks), ranks=ranks)
    vn = dsum.v_norm(space)
    r0 = dsum.block_norm_bound(ops["R0"], space)
    res.check("R0 norm bound", "build_dsum_ops", "||R0|| <= max eps_l ||V||",
              r0 <= max(space.eps_seq) * vn, R0=float(r0), V=float(vn))
    c = params.get("c")
    if c is not None:
        inv = dsum.invertibility(R.to_float(), float(c))
        res.check("cI + R invertible", "build_R", "cI + R invertible for the chosen c", inv["invertible"], **inv)
    return res


# -- interpolation ---------------------------------------------------------------------------------


def run_interpolate(params, ctx: Context) -> Result:
    _require_exact(ctx, "interpolate")
    res = Result()
    rng = random.Random(ctx.seed)
    dim = params.get("dim", 16)
    L = params.get("L", 4)
    eps = params.get("eps", 1.0)
    S = SparseOperator.identity(dim)
    for i in range(dim - 1):
        S = S.with_entry(i, i + 1, Fraction(1, 2))
    while True:
        z = [[Fraction(rng.randint(-3, 3)) for _ in range(dim)] for _ in range(L)]
        if exact_rank(z) == L:
            break
    xs = [[a + Fraction(rng.randint(-4, 4), 64) for a in S.apply(zz)] for zz in z]
    out = fhcc.similarity_interpolation(S, list(zip(z, xs)), eps)
    res.check("L z_l = x_l", "similarity_interpolation", "L_l z_l = x_l", all(out.op.apply(zz) == xx for zz, xx in zip(z, xs)))
    res.check("rank(L - S) <= L", "similarity_interpolation", "rank-one updates", (out.op - S).rank() <= L)
    same = fhcc.similarity_interpolation(S, [(zz, S.apply(zz)) for zz in z], eps)
    res.check("identity case", "similarity_interpolation", "x_l = S z_l gives S", same.op == S)
    res.summary.update(bound=out.bound, within_eps=out.within_eps)
    return res


PIPELINES: Dict[str, Callable[[dict, Context], Result]] = {
    "densities": run_densities,
    "counterexample-shifts": run_counterexample,
    "bad-set": run_bad_set,
    "ctype-check": run_ctype,
    "fhcc-orbit": run_fhcc,
    "dsum-check": run_dsum,
    "interpolate": run_interpolate,
}
