"""Command-line front end: run verification suites, inspect the registries and
evaluate single operators at a point.

Exit codes: 0 all checks passed (skips allowed), 1 at least one check failed,
2 usage or configuration error.  The JSON report layout is
{meta, scenarios:[{scenario, checks:[{name, anchor, residual, tolerance,
status, witness, ...}]}]} with floats printed to 17 significant digits so that
identical config + seed gives byte-identical output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np
import sympy as sp

from . import backend as bk
from .curvature import ric_P
from .diffops import div_P
from .fields import evaluate
from .fixtures import fixture_names, get_manifold
from .structure import build_structure, structure_names, K_BUILDERS
from .verification import (ConfigError, Scenario, check_catalog,
                           default_scenarios, run_suite)


# ---------------------------------------------------------------------------
# serialization


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _emit(obj, parts, indent):
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            parts.append(pad + "  " + json.dumps(k) + ": ")
            _emit(v, parts, indent + 2)
            parts.append(",\n" if i + 1 < len(obj) else "\n")
        parts.append(pad + "}")
    elif isinstance(obj, list):
        if not obj:
            parts.append("[]")
            return
        parts.append("[\n")
        for i, v in enumerate(obj):
            parts.append(pad + "  ")
            _emit(v, parts, indent + 2)
            parts.append(",\n" if i + 1 < len(obj) else "\n")
        parts.append(pad + "]")
    elif isinstance(obj, float):
        parts.append("null" if obj != obj else format(obj, ".17g"))
    else:
        parts.append(json.dumps(obj))


def dumps_report(d: dict) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    parts = []
    _emit(_jsonable(d), parts, 0)
    parts.append("\n")
    return "".join(parts)


def format_text(d: dict) -> str:
    lines = []
    meta = d.get("meta", {})
    lines.append(f"seed {meta.get('seed')}  scenarios {meta.get('scenario_count')}")
    npass = nfail = nskip = 0
    for sc in d["scenarios"]:
        lines.append("")
        lines.append(f"scenario {sc['scenario']}  [{sc['backend']}]")
        for c in sc["checks"]:
            if c["status"] == "skip":
                nskip += 1
                lines.append(f"  SKIP  {c['name']:34s} [{c['anchor']}]  "
                             f"hypothesis {c['skip_reason']} failed")
                continue
            if c["status"] == "pass":
                npass += 1
            else:
                nfail += 1
            lines.append(f"  {c['status'].upper():4s}  {c['name']:34s} "
                         f"[{c['anchor']}]  residual {c['residual']:.3e}  "
                         f"tol {c['tolerance']:.1e}")
    lines.append("")
    lines.append(f"{npass} passed, {nfail} failed, {nskip} skipped")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# config handling


def _scenario_from_shorthand(spec: str) -> dict:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"scenario shorthand must be fixture:P:K, got {spec!r}")
    return {"fixture": parts[0], "p": parts[1], "k": parts[2]}


def _scenario_from_dict(d: dict) -> Scenario:
    known = {"fixture", "p", "k", "degrees", "grid", "quad_grid", "backend",
             "tolerances", "checks"}
    extra = set(d) - known
    if extra:
        raise ConfigError(f"unknown scenario keys {sorted(extra)}")
    for key in ("fixture", "p", "k"):
        if key not in d:
            raise ConfigError(f"scenario entry missing {key!r}")
    kwargs = {}
    for key in ("degrees", "checks"):
        if key in d:
            kwargs[key] = tuple(d[key])
    for key in ("grid", "quad_grid", "backend", "tolerances"):
        if key in d:
            kwargs[key] = d[key]
    return Scenario(d["fixture"], d["p"], d["k"], **kwargs)


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def build_scenarios(args, cfg: dict) -> list:
    raw = []
    if args.scenario:
        raw = [_scenario_from_shorthand(s) for s in args.scenario]
    elif "scenarios" in cfg:
        for entry in cfg["scenarios"]:
            if isinstance(entry, str):
                raw.append(_scenario_from_shorthand(entry))
            elif isinstance(entry, dict):
                raw.append(entry)
            else:
                raise ConfigError(f"bad scenario entry {entry!r}")
    if not raw:
        return [dataclasses.replace(sc) for sc in default_scenarios()]
    out = []
    for d in raw:
        if "tolerances" in cfg and "tolerances" not in d:
            d = dict(d, tolerances=cfg["tolerances"])
        out.append(_scenario_from_dict(d) if isinstance(d, dict) else d)
    return out


def _thread_cap() -> int:
    raw = os.environ.get("BOCHNERLAB_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"BOCHNERLAB_THREADS must be an integer, got {raw!r}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    scenarios = build_scenarios(args, cfg)
    for sc in scenarios:
        if args.grid:
            sc.grid = args.grid
        if args.backend:
            sc.backend = args.backend
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    fmt = args.format or cfg.get("format", "text")
    if fmt not in ("text", "json"):
        raise ConfigError(f"unknown format {fmt!r}")
    out_path = args.out or cfg.get("out")

    report = run_suite(scenarios, seed=seed, max_workers=_thread_cap())
    body = report.to_dict()
    text = dumps_report(body) if fmt == "json" else format_text(body)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    failed = report.failed
    if failed:
        for c in failed:
            print(f"check failed: {c.name} [{c.anchor}] "
                  f"residual {c.residual:.6e} > tol {c.tolerance:.1e}",
                  file=sys.stderr)
        return 1
    return 0


def cmd_list(args) -> int:
    if args.what == "fixtures":
        print(", ".join(fixture_names()))
    elif args.what == "checks":
        for name, anchor in check_catalog():
            print(f"{name:36s} [{anchor}]")
    else:
        names = structure_names()
        for p in names["P"]:
            print(f"P  {p:12s} (no parameters)")
        for k in names["K"]:
            nargs = K_BUILDERS[k][1]
            schema = ("one parameter per dimension" if nargs < 0
                      else f"{nargs} parameters")
            print(f"K  {k:12s} ({schema})")
    return 0


def _parse_point(man, text: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad point {text!r}")
    if len(vals) != man.dim:
        raise ConfigError(f"point needs {man.dim} coordinates, got {len(vals)}")
    return np.asarray([vals], dtype=float)


def parse_field(man, backend, text: str) -> np.ndarray:
    """Vector field from a 1-form expression like "sinx*dx_vec" (raised with g)."""
    local = {}
    basis = {}
    for i, c in enumerate(man.coords):
        local[str(c)] = c
        local[f"sin{c}"] = sp.sin(c)
        local[f"cos{c}"] = sp.cos(c)
        b = sp.Symbol(f"d{c}_vec")
        local[str(b)] = b
        basis[i] = b
    try:
        expr = sp.sympify(text, locals=local)
    except (sp.SympifyError, SyntaxError) as exc:
        raise ConfigError(f"cannot parse field {text!r}: {exc}")
    n = man.dim
    coeffs = [expr.coeff(basis[i]) for i in range(n)]
    if sp.simplify(expr - sum(c * basis[i] for i, c in enumerate(coeffs))) != 0:
        raise ConfigError(f"field {text!r} is not linear in the d*_vec basis")
    ginv = man.metric.inv()
    comps = [sp.simplify(sum(ginv[i, a] * coeffs[a] for a in range(n)))
             for i in range(n)]
    return backend.array(comps)


def cmd_eval(args) -> int:
    try:
        man = get_manifold(args.fixture)
    except KeyError as exc:
        raise ConfigError(str(exc))
    backend = man.backend(args.backend)
    parts = args.structure.split(":")
    if len(parts) != 2:
        raise ConfigError(f"structure must be P:K, got {args.structure!r}")
    try:
        ps = build_structure(man, backend, parts[0], parts[1])
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc))
    pt = _parse_point(man, args.point)

    if args.op == "ricP":
        vals = evaluate(ric_P(ps), pt)[..., 0]
        for row in vals:
            print("  ".join(format(v, ".12g") for v in row))
    elif args.op == "divP":
        if not args.field:
            raise ConfigError("divP needs --field")
        X = parse_field(man, backend, args.field)
        v = bk.value(div_P(ps, X), pt)[0]
        print(format(v, ".12g"))
    elif args.op == "frakD":
        if args.field:
            X = parse_field(man, backend, args.field)
            Y = parse_field(man, backend, args.field2 or "")
        else:
            n = man.dim
            X = backend.array([1] + [0] * (n - 1))
            Y = backend.array([0, 1] + [0] * (n - 2))
        D = evaluate(ps.frak_D, pt)[..., 0]
        Xv = evaluate(X, pt)[..., 0]
        Yv = evaluate(Y, pt)[..., 0]
        out = np.einsum("iab,a,b->i", D, Xv, Yv)
        print("  ".join(format(v, ".12g") for v in out))
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bochnerlab",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="run the identity suite")
    pv.add_argument("--config", help="JSON config file")
    pv.add_argument("--scenario", action="append",
                    help="fixture:P:K shorthand, repeatable")
    pv.add_argument("--grid", type=int)
    pv.add_argument("--backend", choices=("analytic", "fd"))
    pv.add_argument("--seed", type=int)
    pv.add_argument("--format", choices=("text", "json"))
    pv.add_argument("--out")
    pv.set_defaults(fn=cmd_verify)

    pl = sub.add_parser("list", help="show registries")
    pl.add_argument("what", choices=("fixtures", "checks", "structures"))
    pl.set_defaults(fn=cmd_list)

    pe = sub.add_parser("eval", help="evaluate one operator at a point")
    pe.add_argument("op", choices=("ricP", "divP", "frakD"))
    pe.add_argument("--fixture", required=True)
    pe.add_argument("--structure", required=True, help="P-spec:K-spec")
    pe.add_argument("--point", required=True, help="comma-separated coordinates")
    pe.add_argument("--field", help='1-form expression, e.g. "sinx*dx_vec"')
    pe.add_argument("--field2", help="second field for frakD")
    pe.add_argument("--backend", choices=("analytic", "fd"), default="analytic")
    pe.set_defaults(fn=cmd_eval)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
