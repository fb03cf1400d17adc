"""Command line entry point: ``lindyn run <experiment>`` and ``lindyn validate <file>``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
import scipy

from . import __version__
from .errors import LindynError
from .experiments import PIPELINES, Context

log = logging.getLogger("lindyn")

THREADS_ENV = "LINDYN_THREADS"

# per experiment: key -> (accepted types, check or None, message)
_pos_int = (lambda v: isinstance(v, int) and not isinstance(v, bool) and v > 0, "must be a positive integer")
_nonneg_int = (lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 0, "must be a non-negative integer")
_pos_num = (lambda v: isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0, "must be a positive number")
_int_list = (lambda v: isinstance(v, list) and v and all(isinstance(x, int) and x > 0 for x in v),
             "must be a non-empty list of positive integers")
_any = (lambda v: True, "")
_bool = (lambda v: isinstance(v, bool), "must be true or false")

SCHEMAS: Dict[str, Dict[str, tuple]] = {
    "densities": {
        "set": (lambda v: v in {"evens", "odds", "progression", "layer", "empty"},
                "must be one of evens, odds, progression, layer, empty"),
        "horizon": _nonneg_int, "burn_in": _nonneg_int, "step": _pos_int, "offset": _nonneg_int, "k": _pos_int,
        "expect_density": (lambda v: isinstance(v, (int, float)) and 0 <= v <= 1, "must lie in [0, 1]"),
        "tolerance": _pos_num,
    },
    "counterexample-shifts": {
        "a": _pos_num, "eps": _any, "b_rule": (lambda v: v == "default", "only 'default' is supported"),
        "p_max": _nonneg_int, "H": _pos_int, "burn_in": _nonneg_int, "g2_bound": _pos_num,
        "defect_p": _nonneg_int, "export_weights": _bool,
    },
    "bad-set": {
        "J": _int_list, "J1": _pos_int, "k_max": _pos_int, "horizon": _nonneg_int,
        "mode": (lambda v: v == "full" or (isinstance(v, dict) and "sampled" in v),
                 "must be 'full' or {'sampled': {'count': n, 'seed': s}}"),
    },
    "ctype-check": {
        "preset": (lambda v: v in {"delta-8-32", "delta-8-32-64"}, "must be delta-8-32 or delta-8-32-64"),
        "Delta0": _pos_int, "Delta": _int_list, "delta": _int_list, "tau": _int_list, "k_max": _pos_int,
        "j_max": _nonneg_int, "n_list": _int_list, "samples": _nonneg_int,
    },
    "fhcc-orbit": {
        "K": _pos_int, "orbit_horizon": _pos_int, "burn_in": _nonneg_int, "modulus": _pos_int,
        "targets": (lambda v: isinstance(v, list) and v and all(isinstance(t, list) and t for t in v),
                    "must be a list of coordinate lists"),
        "alpha": (lambda v: isinstance(v, list) and all(isinstance(a, (int, float)) and a > 0 for a in v),
                  "must be a list of positive radii"),
        "weight": _pos_num,
    },
    "dsum-check": {"L": _pos_int, "K": _pos_int, "eps_rule": _any, "samples": _nonneg_int, "pairs": _nonneg_int,
                   "c": _pos_num},
    "interpolate": {"dim": _pos_int, "L": _pos_int, "eps": _pos_num},
}

REQUIRED = {"densities": ["horizon"]}


class ConfigError(LindynError, ValueError):
    def __init__(self, violations: List[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass
class ExperimentConfig:
    experiment: str
    params: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = "out"
    arithmetic: str = "exact"
    seed: int = 0
    threads: int | str = "auto"

    def echo(self) -> dict:
        return {"experiment": self.experiment, "params": self.params, "arithmetic": self.arithmetic,
                "seed": self.seed}


def _violations(d: dict) -> List[str]:
    out = []
    exp = d.get("experiment")
    if exp not in PIPELINES:
        out.append(f"experiment {exp!r} unknown; valid options: {', '.join(sorted(PIPELINES))}")
    params = d.get("params", {})
    if not isinstance(params, dict):
        out.append("params must be an object")
        params = {}
    if d.get("arithmetic", "exact") not in ("exact", "float"):
        out.append("arithmetic must be 'exact' or 'float'")
    seed = d.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        out.append("seed must be an integer")
    th = d.get("threads", "auto")
    if th != "auto" and not (isinstance(th, int) and th > 0):
        out.append("threads must be a positive integer or 'auto'")
    unknown_top = set(d) - {"experiment", "params", "output_dir", "arithmetic", "seed", "threads"}
    for k in sorted(unknown_top):
        out.append(f"unknown top-level key {k!r}")
    if exp in SCHEMAS:
        schema = SCHEMAS[exp]
        for k in REQUIRED.get(exp, []):
            if k not in params:
                out.append(f"params.{k} is required")
        for k, v in params.items():
            if k not in schema:
                out.append(f"params.{k} is not a parameter of {exp} (known: {', '.join(sorted(schema))})")
            elif not schema[k][0](v):
                out.append(f"params.{k} {schema[k][1]} (got {v!r})")
    return out


def validate_config(raw: str | dict) -> ExperimentConfig:
    """Parse and check a config; raises :class:`ConfigError` listing every violation."""
    if isinstance(raw, str):
        try:
            d = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigError([f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}"]) from None
    else:
        d = raw
    if not isinstance(d, dict):
        raise ConfigError(["config must be a JSON object"])
    bad = _violations(d)
    if bad:
        raise ConfigError(bad)
    return ExperimentConfig(d["experiment"], dict(d.get("params", {})), d.get("output_dir", "out"),
                            d.get("arithmetic", "exact"), d.get("seed", 0), d.get("threads", "auto"))


def resolve_threads(flag, env=None) -> int:
    env = os.environ if env is None else env
    value = flag if flag not in (None, "auto") else env.get(THREADS_ENV, "auto")
    if value in (None, "auto"):
        return 1
    n = int(value)
    if n < 1:
        raise ConfigError(["threads must be positive"])
    return n


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (int, float, str, bool)) or x is None:
        return x
    return str(x)


def run(config: ExperimentConfig) -> int:
    """Run one experiment, write its manifest and artifacts, return the exit status."""
    os.makedirs(config.output_dir, exist_ok=True)
    threads = resolve_threads(config.threads)
    ctx = Context(config.arithmetic, config.seed, threads)
    manifest = {"config": config.echo(), "versions": {"lindyn": __version__, "numpy": np.__version__,
                                                      "scipy": scipy.__version__}}
    t0 = time.perf_counter()
    try:
        result = PIPELINES[config.experiment](config.params, ctx)
        error = None
    except LindynError as e:
        result, error = None, f"{type(e).__name__}: {e}"
    elapsed = time.perf_counter() - t0
    if result is not None:
        for name, text in sorted(result.artifacts.items()):
            with open(os.path.join(config.output_dir, name), "w") as fh:
                fh.write(text)
        asserts = [a.as_dict() for a in result.assertions]
        failing = next((a for a in asserts if not a["passed"]), None)
        manifest.update(assertions=asserts, summary=result.summary, artifacts=sorted(result.artifacts),
                        passed=failing is None, first_failure=failing["name"] if failing else None)
    else:
        manifest.update(assertions=[], passed=False, error=error, first_failure=error)
    with open(os.path.join(config.output_dir, "manifest.json"), "w") as fh:
        json.dump(_jsonable(manifest), fh, indent=1, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(config.output_dir, "timings.json"), "w") as fh:
        json.dump({"seconds": elapsed, "threads": threads,
                   "finished": time.strftime("%Y-%m-%dT%H:%M:%S")}, fh, indent=1)
        fh.write("\n")
    if error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    for a in manifest["assertions"]:
        print(f"{'PASS' if a['passed'] else 'FAIL'}  {a['name']}")
    return 0 if manifest["passed"] else 1


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_params(extra: List[str]) -> Dict[str, Any]:
    params: Dict[str, Any] = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError([f"unexpected argument {tok!r}"])
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        elif i + 1 < len(extra) and not extra[i + 1].startswith("--"):
            val = extra[i + 1]
            i += 2
        else:
            raise ConfigError([f"parameter --{key} needs a value"])
        params[key.replace("-", "_") if key not in ("J1",) else key] = _coerce(val)
    return params


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lindyn", description="Finite-horizon linear dynamics experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a named experiment")
    r.add_argument("experiment")
    r.add_argument("--config", help="JSON config file")
    r.add_argument("--out", help="output directory")
    mode = r.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="arithmetic", action="store_const", const="exact")
    mode.add_argument("--float", dest="arithmetic", action="store_const", const="float")
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int)
    v = sub.add_parser("validate", help="check a config file")
    v.add_argument("file")
    return ap


def main(argv: List[str] | None = None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "validate":
            with open(args.file) as fh:
                cfg = validate_config(fh.read())
            print(f"ok: {cfg.experiment}")
            return 0
        if extra and args.command != "run":
            ap.error(f"unrecognized arguments: {' '.join(extra)}")
        raw: Dict[str, Any] = {}
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigError([f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}"]) from None
            if "experiment" not in raw:
                raw = {"params": raw}
            if raw.get("experiment", args.experiment) != args.experiment:
                raise ConfigError([f"config is for {raw['experiment']!r}, not {args.experiment!r}"])
        raw["experiment"] = args.experiment
        raw["params"] = {**raw.get("params", {}), **_parse_params(extra)}
        if args.out:
            raw["output_dir"] = args.out
        if args.arithmetic:
            raw["arithmetic"] = args.arithmetic
        elif args.experiment == "fhcc-orbit":
            raw.setdefault("arithmetic", "float")
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.threads is not None:
            raw["threads"] = args.threads
        cfg = validate_config(raw)
    except ConfigError as e:
        print("invalid configuration:", file=sys.stderr)
        for v in e.violations:
            print(f"  - {v}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
