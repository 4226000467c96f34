"""Command-line surface with machine-readable outputs.

Exit codes: 0 = computed result (infeasible/infinite results included),
1 = I/O or parse failure, 2 = domain/validation/convergence failure
(argparse usage errors also exit 2).  Numeric output carries 12
significant digits with the literal ``inf`` for infinities; files are
written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import design, instances
from .clearing import clear
from .design import (
    EXPOSURE_PROPORTIONAL,
    MARGIN_THEN_LOSS,
    OPT_LOSS,
    OPT_MARGIN,
    UNIFORM,
    budget_certificate,
    default_margin,
    insolvency_margin,
    max_default_margin,
    min_loss,
)
from .errors import (
    BufferNetError,
    NoConvergence,
    ParseError,
    SchemaVersionError,
    StructuralError,
    ZeroMass,
)
from .instances import (
    CorePeripheryParams,
    MarginalData,
    _atomic_write,
    assemble_from_marginals,
    generate_core_periphery,
    load_instance,
    save_instance,
)
from .network import derive, validate

_IO_ERRORS = (OSError, ParseError, SchemaVersionError, json.JSONDecodeError)


# -- rendering -------------------------------------------------------------------

def _num(x):
    """12-significant-digit float, with infinities as 'inf'/'-inf' strings."""
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(f"{x:.12g}")


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (np.floating, float)):
        return _num(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def _csv_scalar(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = _num(value)
    return v if isinstance(v, str) else f"{v:.12g}"


def _flatten_csv(result: dict) -> str:
    """Flatten a result dict to key,value rows (vectors expand to key_i)."""
    lines = ["key,value"]
    for key, value in result.items():
        if isinstance(value, (list, tuple, np.ndarray)):
            seq = value.tolist() if isinstance(value, np.ndarray) else list(value)
            for i, v in enumerate(seq):
                lines.append(f"{key}_{i + 1},{_csv_scalar(v)}")
        else:
            lines.append(f"{key},{_csv_scalar(value)}")
    return "\n".join(lines) + "\n"


def _emit(result: dict, args, default_format="json"):
    fmt = args.format or default_format
    if fmt == "csv":
        text = _flatten_csv(_jsonable(result))
    else:
        text = json.dumps(_jsonable(result), indent=2) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _sweep_csv(rows, n_banks: int) -> str:
    header = "budget,policy,metric,value,spend," + ",".join(
        f"b_{i + 1}" for i in range(n_banks))
    lines = [header]
    for row in rows:
        cells = [_csv_scalar(row.budget), row.policy, row.metric,
                 _csv_scalar(row.value), _csv_scalar(row.spend)]
        if row.buffer is None:
            cells.extend("" for _ in range(n_banks))
        else:
            cells.extend(_csv_scalar(v) for v in row.buffer)
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


# -- input helpers -----------------------------------------------------------------

def _load_vector(path, n, what):
    """Read a length-n JSON vector, bare or wrapped as {what: [...]}."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc.msg}") from None
    if isinstance(doc, dict):
        doc = doc.get(what, doc.get("values"))
    if not isinstance(doc, list):
        raise ParseError(f"{path}: expected a JSON array (or object with '{what}')")
    vec = np.array([float(v) for v in doc], dtype=float)
    if vec.size != n:
        raise ParseError(f"{path}: expected {n} entries, got {vec.size}")
    return vec


def _read_named_csv(path):
    rows = instances._read_csv_rows(path)
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = []
    for i, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise ParseError(f"{path}: row {i + 2} has {len(row)} fields, expected {len(header)}")
        body.append(row)
    return header, body


def _column(path, header, body, name):
    if name not in header:
        raise ParseError(f"{path}: missing required column '{name}'")
    j = header.index(name)
    return [row[j] for row in body]


def _load_marginals_csv(path) -> MarginalData:
    header, body = _read_named_csv(path)
    names = _column(path, header, body, "name")
    assets = [instances._parse_float(v, f"{path}: interbank_assets") for v in
              _column(path, header, body, "interbank_assets")]
    liabs = [instances._parse_float(v, f"{path}: interbank_liabilities") for v in
             _column(path, header, body, "interbank_liabilities")]
    return MarginalData(np.array(assets), np.array(liabs), names)


def _load_holdings_csv(path):
    header, body = _read_named_csv(path)
    names = _column(path, header, body, "name")
    cols = [h for h in header if h.startswith("holding_")]
    if not cols:
        raise ParseError(f"{path}: no holding_* columns found")
    data = np.array([[instances._parse_float(row[header.index(c)], f"{path}: {c}")
                      for c in cols] for row in body])
    return names, data


def _load_named_values_csv(path, column):
    header, body = _read_named_csv(path)
    names = _column(path, header, body, "name")
    vals = [instances._parse_float(v, f"{path}: {column}") for v in
            _column(path, header, body, column)]
    return names, np.array(vals)


def _sweep_workers():
    raw = os.environ.get("BUFFERNET_THREADS", "0")
    try:
        k = int(raw)
    except ValueError:
        k = 0
    if k <= 0:
        return max(1, os.cpu_count() or 1)
    return k


# -- subcommands -------------------------------------------------------------------

def _cmd_validate(args):
    instance = load_instance(args.instance)
    try:
        report = validate(instance)
    except StructuralError as exc:
        result = {"structurally_valid": False, "violations": exc.violations}
        _emit(result, args)
        return 2
    result = {
        "structurally_valid": True,
        "r_positive": report.r_positive,
        "nominal_margin": report.nominal_margin,
    }
    return _emit(result, args)


def _cmd_clearing(args):
    instance = load_instance(args.instance)
    c = instance.external.copy()
    if args.buffer:
        c = c + _load_vector(args.buffer, instance.n, "buffer")
    if args.shock:
        c = c + _load_vector(args.shock, instance.n, "shock")
    res = clear(instance, c)
    result = {
        "feasible": res.feasible,
        "systemic_loss": res.systemic_loss,
        "default_set": res.default_set,
    }
    if res.clearing_vector is not None:
        result["clearing_vector"] = res.clearing_vector
    return _emit(result, args)


def _cmd_margin(args):
    instance = load_instance(args.instance)
    b = (_load_vector(args.buffer, instance.n, "buffer")
         if args.buffer else np.zeros(instance.n))
    if args.insolvency:
        value = insolvency_margin(instance, b, args.norm)
        metric = "insolvency_margin"
    else:
        value = default_margin(instance, b, args.norm)
        metric = "default_margin"
    return _emit({"norm": args.norm, "metric": metric, "margin": value}, args)


def _cmd_design(args):
    if args.mode == "loss" and args.radius is None:
        raise BufferNetError("design loss requires --radius")
    instance = load_instance(args.instance)
    if args.mode == "loss":
        res = min_loss(instance, args.radius, args.budget, args.norm)
    else:
        res = max_default_margin(instance, args.budget, args.norm)
    result = {
        "mode": args.mode,
        "norm": args.norm,
        "budget": args.budget,
        "status": res.status,
        "objective": res.objective,
        "spend": res.spend,
    }
    if args.radius is not None:
        result["radius"] = args.radius
    if res.buffer is not None:
        result["buffer"] = res.buffer
        result["active_banks"] = res.diagnostics.get("active_banks", [])
    return _emit(result, args)


def _cmd_certificate(args):
    instance = load_instance(args.instance)
    b_def, buffer = budget_certificate(instance, args.radius, args.norm)
    result = {
        "norm": args.norm,
        "radius": args.radius,
        "budget": b_def,
        "buffer": buffer,
    }
    return _emit(result, args)


def _parse_budget_grid(text):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise BufferNetError("--budgets range must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise BufferNetError("--budgets step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + step * i for i in range(max(count, 1))]
    return [float(p) for p in text.split(",") if p != ""]


_POLICY_TOKENS = {"opt", "margin", "uniform", "expprop"}


def _resolve_policies(tokens, radius):
    policies = []
    for tok in tokens:
        if tok == "opt":
            policies.append(OPT_LOSS if radius is not None else OPT_MARGIN)
        elif tok == "margin":
            if radius is None:
                raise BufferNetError("policy 'margin' (margin-then-loss) requires --radius")
            policies.append(MARGIN_THEN_LOSS)
        elif tok == "uniform":
            policies.append(UNIFORM)
        elif tok == "expprop":
            policies.append(EXPOSURE_PROPORTIONAL)
        else:
            raise BufferNetError(
                f"unknown policy '{tok}' (choose from {sorted(_POLICY_TOKENS)})")
    return policies


def _cmd_sweep(args):
    budgets = _parse_budget_grid(args.budgets)
    tokens = [t.strip() for t in args.policies.split(",") if t.strip()]
    policies = _resolve_policies(tokens, args.radius)
    instance = load_instance(args.instance)
    rows = design.sweep(instance, budgets, args.norm, policies,
                        radius=args.radius, max_workers=_sweep_workers())
    fmt = args.format or "csv"
    if fmt == "csv":
        text = _sweep_csv(rows, instance.n)
        if args.out:
            _atomic_write(args.out, text)
        else:
            sys.stdout.write(text)
        return 0
    result = {"rows": [{
        "budget": r.budget, "policy": r.policy, "metric": r.metric,
        "value": r.value, "spend": r.spend,
        "buffer": r.buffer if r.buffer is not None else None,
    } for r in rows]}
    return _emit(result, args)


def _cmd_generate(args):
    params = {}
    if args.config:
        with open(args.config) as fh:
            try:
                params.update(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ParseError(f"{args.config}: invalid JSON: {exc.msg}") from None
    for key, flag in (("n", args.n), ("core_size", args.core), ("m", args.assets),
                      ("seed", args.seed),
                      ("core_core_density", args.core_core_density),
                      ("core_periphery_density", args.core_periphery_density),
                      ("periphery_periphery_density", args.periphery_periphery_density),
                      ("liability_scale_core", args.scale_core),
                      ("liability_scale_periphery", args.scale_periphery),
                      ("margin_level", args.margin_level)):
        if flag is not None:
            params[key] = flag
    try:
        cp = CorePeripheryParams(**params)
    except (TypeError, ValueError) as exc:
        raise BufferNetError(str(exc)) from None
    instance = generate_core_periphery(cp)
    save_instance(instance, args.out)
    report = validate(instance)
    summary = {
        "path": args.out,
        "n": instance.n,
        "m": instance.m,
        "seed": cp.seed,
        "r_positive": report.r_positive,
        "r_min": float(report.nominal_margin.min()),
    }
    sys.stdout.write(json.dumps(_jsonable(summary), indent=2) + "\n")
    return 0


def _cmd_calibrate(args):
    marginals = _load_marginals_csv(args.marginals)
    hnames, holdings = _load_holdings_csv(args.holdings)
    enames, externals = _load_named_values_csv(args.externals, "external")
    cnames, costs = _load_named_values_csv(args.costs, "cost")
    for path, names in ((args.holdings, hnames), (args.externals, enames),
                        (args.costs, cnames)):
        if names != marginals.names:
            raise ParseError(f"{path}: bank names disagree with {args.marginals}")
    instance = assemble_from_marginals(marginals, holdings, externals, costs)
    save_instance(instance, args.out)
    summary = {"path": args.out, "n": instance.n, "m": instance.m}
    sys.stdout.write(json.dumps(_jsonable(summary), indent=2) + "\n")
    return 0


# -- parser ------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="buffernet",
        description="Exact pre-shock buffer design for financial contagion networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="json"):
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=["json", "csv"], default=None,
                       help=f"output format (default: {fmt_default})")

    p = sub.add_parser("validate", help="structural validation report")
    p.add_argument("instance")
    common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("clearing", help="maximal clearing vector and loss")
    p.add_argument("instance")
    p.add_argument("--buffer", help="JSON vector of per-bank buffers")
    p.add_argument("--shock", help="JSON vector of per-bank inflow shocks")
    common(p)
    p.set_defaults(func=_cmd_clearing)

    p = sub.add_parser("margin", help="default or insolvency resilience margin")
    p.add_argument("instance")
    p.add_argument("--norm", choices=["linf", "l1"], required=True)
    p.add_argument("--buffer", help="JSON vector of per-bank buffers")
    p.add_argument("--insolvency", action="store_true",
                   help="report the insolvency margin instead of the default margin")
    common(p)
    p.set_defaults(func=_cmd_margin)

    p = sub.add_parser("design", help="optimal buffer design at a budget")
    p.add_argument("mode", choices=["margin", "loss"])
    p.add_argument("instance")
    p.add_argument("--norm", choices=["linf", "l1"], required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--radius", type=float, help="stress radius (loss mode)")
    common(p)
    p.set_defaults(func=_cmd_design)

    p = sub.add_parser("certificate", help="minimal budget certifying a radius")
    p.add_argument("instance")
    p.add_argument("--norm", choices=["linf", "l1"], required=True)
    p.add_argument("--radius", type=float, required=True)
    common(p)
    p.set_defaults(func=_cmd_certificate)

    p = sub.add_parser("sweep", help="policy comparison over a budget grid")
    p.add_argument("instance")
    p.add_argument("--norm", choices=["linf", "l1"], required=True)
    p.add_argument("--budgets", required=True,
                   help="grid as start:stop:step or a comma list")
    p.add_argument("--radius", type=float,
                   help="stress radius; switches the sweep to loss metrics")
    p.add_argument("--policies", default=None,
                   help="comma list from opt,margin,uniform,expprop")
    common(p, fmt_default="csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("generate", help="generate a synthetic instance")
    p.add_argument("kind", choices=["cp"], help="generator family (core-periphery)")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON file of generator parameters")
    p.add_argument("--n", type=int)
    p.add_argument("--core", type=int)
    p.add_argument("--assets", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--core-core-density", type=float, dest="core_core_density")
    p.add_argument("--core-periphery-density", type=float, dest="core_periphery_density")
    p.add_argument("--periphery-periphery-density", type=float,
                   dest="periphery_periphery_density")
    p.add_argument("--scale-core", type=float, dest="scale_core")
    p.add_argument("--scale-periphery", type=float, dest="scale_periphery")
    p.add_argument("--margin-level", type=float, dest="margin_level")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("calibrate", help="assemble an instance from marginal data")
    p.add_argument("--marginals", required=True)
    p.add_argument("--holdings", required=True)
    p.add_argument("--externals", required=True)
    p.add_argument("--costs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "policies", "missing") is None:
        args.policies = "opt,margin,uniform,expprop" if args.radius is not None \
            else "opt,uniform,expprop"
    try:
        return args.func(args)
    except _IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (StructuralError, NoConvergence, ZeroMass, BufferNetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
