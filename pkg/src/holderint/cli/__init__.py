"""Command-line front end.

Every command prints one JSON document (or CSV rows for sweeps with
``--format csv``). Exit status: 0 success, 2 configuration error,
3 exponent sum too small, 4 tolerance not met within the level budget (the
best value is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from .. import currents, oracle, sharpness, youngint
from ..geometry import BoxDomain
from ..holder import FieldTuple, inf_convolution
from .config import ConfigError, RunConfig, build_field, parse_chain, parse_floats, parse_range
from .expr import ExprError, parse_field_expr

EXIT_OK, EXIT_CONFIG, EXIT_EXPONENT, EXIT_BUDGET = 0, 2, 3, 4

COMMANDS = ("integrate", "boundary", "approx", "oracle", "stokes", "sharpness", "koch", "chain",
            "bounds")


class _BudgetExit(Exception):
    def __init__(self, payload):
        self.payload = payload


# ---------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", "--n", dest="dim", type=int, help="dimension n")
    p.add_argument("--domain", help='box bounds "a,b;c,d" (axes separated by ";")')
    p.add_argument("--f", help="integrand expression")
    p.add_argument("--g", action="append", help="integrator expression (repeat per component)")
    p.add_argument("--alpha", type=float, help="Hölder exponent of f")
    p.add_argument("--beta", help="Hölder exponents of g, comma separated")
    p.add_argument("--holder-f", type=float, help="declared Hölder bound of f")
    p.add_argument("--holder-g", help="declared Hölder bounds of g, comma separated")
    p.add_argument("--tol", type=float)
    p.add_argument("--k-max", type=int)
    p.add_argument("--workers", type=int, help="worker threads (default $SNOWFLAKE_WORKERS or 1)")
    p.add_argument("--output", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--config", help="load a RunConfig JSON file; flags override it")
    p.add_argument("--emit-config", action="store_true", help="print the resolved config and exit")


EXTRA_FLAGS = {
    "integrate": [("--mode", dict(choices=("auto", "certified", "heuristic"))),
                  ("--k-min", dict(type=int))],
    "boundary": [("--level", dict(type=int))],
    "approx": [("--eps", dict(type=float)), ("--search-step", dict(type=float)),
               ("--samples", dict(type=int))],
    "oracle": [("--method", dict(choices=("det", "brute"))), ("--resolution", dict(type=int)),
               ("--cells", dict(type=int)), ("--seed", dict(type=int))],
    "stokes": [("--resolution", dict(type=int))],
    "sharpness": [("--m", dict()), ("--resolution", dict(type=int))],
    "koch": [("--levels", dict()), ("--level-k", dict(type=int)),
             ("--certificate", dict(choices=("snowflake", "lipschitz")))],
    "chain": [("--chain", dict()), ("--method", dict(choices=("direct", "approx"))),
              ("--m-max", dict(type=int)), ("--resolution", dict(type=int))],
    "bounds": [("--k-range", dict()), ("--diam", dict(type=float)), ("--sup-f", dict(type=float))],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holderint",
        description="Dyadic Riemann sums for integrals of Hölder fields over boxes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _common(p)
        for flag, kw in EXTRA_FLAGS[name]:
            p.add_argument(flag, **kw)
    return parser


_COMMON_KEYS = ("dim", "domain", "f", "alpha", "tol", "k_max", "workers", "output", "format")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = RunConfig.from_json(fh.read())
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from None
        cfg.command = args.command
    else:
        cfg = RunConfig(args.command)
        env = os.environ.get("SNOWFLAKE_WORKERS")
        if env:
            try:
                cfg.workers = int(env)
            except ValueError:
                raise ConfigError(f"SNOWFLAKE_WORKERS={env!r} is not an integer") from None
    for key in _COMMON_KEYS:
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    if args.g is not None:
        cfg.g = list(args.g)
    if args.beta is not None:
        cfg.beta = parse_floats(args.beta)
    if args.holder_f is not None:
        cfg.holder_f = args.holder_f
    if args.holder_g is not None:
        cfg.holder_g = parse_floats(args.holder_g)
    for flag, _ in EXTRA_FLAGS[args.command]:
        key = flag.lstrip("-").replace("-", "_")
        val = getattr(args, key)
        if val is not None:
            cfg.extras[key] = val
    if args.domain is None and not args.config and args.dim and args.dim > 1:
        cfg.domain = ";".join(["0,1"] * args.dim)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# field helpers


def _per_component(values: list, n: int, what: str) -> list:
    if not values:
        return [None] * n
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise ConfigError(f"need 1 or {n} values for {what}, got {len(values)}")
    return list(values)


def _fields(cfg: RunConfig, box: BoxDomain, default_f: str = "1", need_f: bool = True):
    n = box.dim
    g_text = cfg.g or [f"x{i + 1}" for i in range(n)]
    if len(g_text) != n:
        raise ConfigError(f"need {n} --g expressions, got {len(g_text)}")
    betas = _per_component(cfg.beta, n, "--beta")
    bounds = _per_component(cfg.holder_g, n, "--holder-g")
    g = FieldTuple(tuple(build_field(t, n, box, b, c) for t, b, c in zip(g_text, betas, bounds)))
    f = None
    if need_f:
        f = build_field(cfg.f or default_f, n, box, cfg.alpha, cfg.holder_f)
    return f, g


def _result_payload(res: youngint.IntegralResult) -> dict:
    return {
        "value": res.value,
        "apriori": res.apriori,
        "aposteriori": res.aposteriori,
        "level": res.level,
        "evaluations": res.evaluations,
        "criterion": res.criterion,
        "gamma": res.constants.gamma,
    }


# ---------------------------------------------------------------------------
# commands


def cmd_integrate(cfg: RunConfig) -> dict:
    box = cfg.box()
    f, g = _fields(cfg, box)
    if cfg.tol is None and cfg.k_max is None:
        raise ConfigError("integrate needs --tol or --k-max")
    res = youngint.integrate(f, g, box, tol=cfg.tol, k_max=cfg.k_max,
                             k_min=cfg.extras.get("k_min", 0),
                             mode=cfg.extras.get("mode", "auto"), workers=cfg.workers)
    payload = _result_payload(res)
    payload["certified_constants"] = f.certified and g.certified
    if res.criterion == "budget":
        raise _BudgetExit(payload)
    return payload


def cmd_boundary(cfg: RunConfig) -> dict:
    box = cfg.box()
    _, g = _fields(cfg, box, need_f=False)
    level = cfg.extras.get("level", 0)
    value = youngint.boundary_integral(box, g, level, workers=cfg.workers)
    return {"value": value, "level": level}


def cmd_approx(cfg: RunConfig) -> dict:
    box = cfg.box()
    f, _ = _fields(cfg, box, default_f="x1")
    eps = cfg.extras.get("eps", 0.25)
    approx = inf_convolution(f, eps, cfg.extras.get("search_step"), host=box)
    # checks on the search grid, where the guarantees hold exactly
    samples = cfg.extras.get("samples", 10000)
    nodes = [c for c in approx.field.func.coords]
    pts = np.stack(np.meshgrid(*nodes, indexing="ij"), axis=-1).reshape(-1, box.dim)
    if len(pts) > samples:
        pts = pts[np.random.default_rng(0).choice(len(pts), samples, replace=False)]
    fv, ev = f(pts), approx(pts)
    gu = approx.guarantee
    return {
        "epsilon": eps,
        "search_step": approx.search_step,
        "guarantee": {"lip_bound": gu.lip_bound, "sup_error": gu.sup_error,
                      "holder_bound_out": gu.holder_bound_out, "grid_error": gu.grid_error},
        "measured_sup_error": float(np.max(np.abs(fv - ev))),
        "input_label": f.label,
        "samples": int(len(pts)),
    }


def cmd_oracle(cfg: RunConfig) -> dict:
    box = cfg.box()
    f, g = _fields(cfg, box)
    method = cfg.extras.get("method", "det")
    if method == "det":
        spec = oracle.QuadratureSpec(cfg.extras.get("resolution", 128))
        return {"method": "det", "value": oracle.det_quadrature_integral(f, g, box, spec),
                "resolution": spec.resolution}
    if box.dim != 1:
        raise ConfigError("the brute-force sum is one-dimensional")
    cells = cfg.extras.get("cells", 1 << 14)
    rng = np.random.default_rng(cfg.extras.get("seed", 0))
    (s, t), = box.bounds
    x = s + (t - s) * np.arange(cells + 1) / cells
    xi = x[:-1] + rng.random(cells) * np.diff(x)
    value = oracle.stieltjes_1d_brute(f, g[0], (s, t), x, xi)
    out = {"method": "brute", "value": value, "cells": cells}
    if f.certified and g.certified and f.exponent + g[0].exponent > 1:
        out["young_loeve_bound"] = oracle.young_loeve_bound(
            x, f.exponent, g[0].exponent, f.holder_bound, g[0].holder_bound)
    return out


def cmd_stokes(cfg: RunConfig) -> dict:
    box = cfg.box()
    _, g = _fields(cfg, box, need_f=False)
    spec = oracle.QuadratureSpec(cfg.extras.get("resolution", 128))
    k_max = cfg.k_max if cfg.k_max is not None else min(8, youngint.default_max_level(box.dim))
    rep = oracle.stokes_check(g, box, cfg.tol, k_max, spec)
    return rep.as_dict()


def cmd_sharpness(cfg: RunConfig) -> dict:
    n = cfg.dim
    alpha = 0.5 if cfg.alpha is None else cfg.alpha
    betas = _per_component(cfg.beta or [0.5], n, "--beta")
    rows = sharpness.divergence_sweep(n, alpha, betas, parse_range(cfg.extras.get("m", "1..6")),
                                      cfg.extras.get("resolution"))
    return {"rows": [r.__dict__ for r in rows], "gamma": alpha + sum(betas)}


def cmd_koch(cfg: RunConfig) -> dict:
    levels = parse_range(cfg.extras.get("levels", "0..4"))
    box = BoxDomain(((-1.0, 2.0), (-1.0, 2.0)))
    cfg_f = cfg.f or "x2"
    cfg_g = cfg.g or ["x1"]
    if len(cfg_g) != 1:
        raise ConfigError("koch takes exactly one --g expression")
    f = build_field(cfg_f, 2, box, cfg.alpha, cfg.holder_f)
    betas = _per_component(cfg.beta, 1, "--beta")
    bounds = _per_component(cfg.holder_g, 1, "--holder-g")
    g = build_field(cfg_g[0], 2, box, betas[0], bounds[0])
    k = cfg.extras.get("level_k", 20)
    rows = []
    for i in levels:
        res = currents.koch_boundary_evaluate(f, [g], i, k_max=k, k_min=k,
                                              certified=cfg.extras.get("certificate", "snowflake"),
                                              workers=cfg.workers)
        _, rep = currents.koch_parametrization(i)
        rows.append({"level": i, "value": res.value, "apriori": res.apriori,
                     "area": rep.area, "segments": rep.segments,
                     "sampled_quotient": rep.sampled_quotient, "evaluations": res.evaluations})
    return {"rows": rows, "alpha": currents.KOCH_ALPHA}


def cmd_chain(cfg: RunConfig) -> dict:
    spec = cfg.extras.get("chain")
    if not spec:
        raise ConfigError("chain needs --chain")
    chain = parse_chain(spec, cfg.dim)
    host = chain.bounding_box(margin=0.5)
    f, g = _fields(cfg, host)
    mass, bmass = currents.chain_norms(chain)
    if cfg.extras.get("method", "direct") == "direct":
        res = currents.chain_evaluate(chain, f, g, cfg.tol, k_max=cfg.k_max, workers=cfg.workers)
        payload = _result_payload(res)
        payload.update(mass=mass, boundary_mass=bmass)
        if res.criterion == "budget":
            raise _BudgetExit(payload)
        return payload
    trace = currents.evaluate_via_approximation(
        chain, f, g, cfg.extras.get("m_max", 5), resolution=cfg.extras.get("resolution", 64),
        engine_level=cfg.k_max)
    out = trace.as_dict()
    out.update(mass=mass, boundary_mass=bmass)
    return out


def cmd_bounds(cfg: RunConfig) -> dict:
    n = cfg.dim
    alpha = 1.0 if cfg.alpha is None else cfg.alpha
    betas = _per_component(cfg.beta or [1.0], n, "--beta")
    consts = youngint.error_constants(n, alpha, betas)
    diam = cfg.extras.get("diam", math.sqrt(n))
    H_f = 1.0 if cfg.holder_f is None else cfg.holder_f
    H_g = [1.0 if h is None else h for h in _per_component(cfg.holder_g, n, "--holder-g")]
    rows = [{"k": k, "apriori": youngint.apriori_bound(consts, k, diam, H_f, H_g),
             "cauchy": youngint.cauchy_bound(consts, k, diam, H_f, H_g)}
            for k in parse_range(cfg.extras.get("k_range", "0..8"))]
    unit = BoxDomain.unit(n)
    return {"cprime": consts.cprime, "csum": consts.csum, "gamma": consts.gamma,
            "thin_box_bound_unit": youngint.thin_box_bound(
                unit, consts, cfg.extras.get("sup_f", 1.0), H_f, H_g),
            "rows": rows}


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


# ---------------------------------------------------------------------------
# output


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render(command: str, cfg: RunConfig, payload: dict, runtime_ms: float) -> str:
    if cfg.format == "csv":
        rows = payload.get("rows") or payload.get("steps") or [payload]
        buf = io.StringIO()
        keys = list(rows[0])
        writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: _clean(v) for k, v in r.items()})
        return buf.getvalue()
    doc = {"command": command, "config_echo": json.loads(cfg.to_json())}
    doc.update(payload)
    doc.setdefault("runtime_ms", runtime_ms)
    return json.dumps(_clean(doc), indent=2, sort_keys=False)


def run(command: str, config: RunConfig, stream=None) -> int:
    """Execute ``command`` with ``config``; returns the exit status."""
    stream = stream or sys.stdout
    start = time.perf_counter()
    status = EXIT_OK
    try:
        payload = HANDLERS[command](config)
    except _BudgetExit as exc:
        payload, status = exc.payload, EXIT_BUDGET
    except youngint.ExponentSumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXPONENT
    except (ConfigError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render(command, config, payload, (time.perf_counter() - start) * 1e3)
    if config.output:
        with open(config.output, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        stream.write(text if text.endswith("\n") else text + "\n")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.emit_config:
        print(cfg.to_json())
        return EXIT_OK
    return run(args.command, cfg)


__all__ = ["RunConfig", "ConfigError", "build_parser", "main", "parse_field_expr", "run"]
