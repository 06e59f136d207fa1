"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import batch as batch_mod
from .core import KernelParams
from .measures import record_from_trace
from .plotting import PLOT_KINDS, plot_records, plot_sweep
from .scenario import (
    CONDITIONS,
    EXTERNAL_WIDTH,
    ModelParams,
    NumericalAbort,
    ScenarioConfig,
    ScenarioError,
    build_condition,
    load_scenario,
    run_simulation,
    serialize_scenario,
)
from .stats import context_regression, signflip_magnitude_check, spearman, summarize

EXIT_OK, EXIT_USAGE, EXIT_ABORT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Help(argparse.ArgumentDefaultsHelpFormatter):
    # flags whose help already states a default keep it as written
    def _get_help_string(self, action):
        if "(default:" in (action.help or ""):
            return action.help
        return super()._get_help_string(action)


_DEF = ModelParams()
_K = KernelParams()
# (flag, dest, default shown in help, help)
_OVERRIDES = [
    ("--q", "q", _DEF.ca.q, "noise strength of both fields"),
    ("--q-node", "q_node", _DEF.node_q, "noise strength of the node"),
    ("--tau", "tau", _DEF.ca.tau, "field time constant"),
    ("--h", "h", _DEF.ca.h, "field resting level"),
    ("--beta", "beta", _DEF.ca.beta, "sigmoid steepness"),
    ("--tau-node", "tau_node", _DEF.node_tau, "node time constant"),
    ("--c-exc", "c_exc", _K.c_exc, "kernel excitation strength"),
    ("--sigma-exc", "sigma_exc", _K.sigma_exc, "kernel excitation width"),
    ("--c-inh", "c_inh", _K.c_inh, "kernel inhibition strength"),
    ("--sigma-inh", "sigma_inh", _K.sigma_inh, "kernel inhibition width"),
    ("--c-glob", "c_glob", _K.c_glob, "global inhibition"),
    ("--c-dnf", "c_dnf", 0.35, "field-to-field coupling gain"),
    ("--dt", "dt", _DEF.dt, "Euler step size"),
]


def _model_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model parameters")
    for flag, dest, default, text in _OVERRIDES:
        g.add_argument(flag, dest=dest, type=float, default=None, metavar="X",
                       help=f"{text} (default: {default:g})")
    g.add_argument("--input-width", type=float, default=None, metavar="W",
                   help=f"width of the external field inputs of built-in conditions (default: {EXTERNAL_WIDTH:g})")
    return p


def _apply(config: ScenarioConfig, a) -> ScenarioConfig:
    p = config.params
    kern = {k: getattr(a, k) for k in ("c_exc", "sigma_exc", "c_inh", "sigma_inh", "c_glob") if getattr(a, k) is not None}
    fld = {k: getattr(a, k) for k in ("q", "tau", "h", "beta") if getattr(a, k) is not None}
    fields = {}
    for name in ("ca", "conn"):
        fp = p.field_params(name)
        if kern:
            fld_k = replace(fp.kernel, **kern)
            fp = replace(fp, kernel=fld_k)
        fields[name] = replace(fp, **fld)
    p = replace(p, ca=fields["ca"], conn=fields["conn"])
    if a.q_node is not None:
        p = replace(p, node_q=a.q_node)
    if a.tau_node is not None:
        p = replace(p, node_tau=a.tau_node)
    if a.dt is not None:
        p = replace(p, dt=a.dt)
    if a.c_dnf is not None:
        p = replace(p, graph=p.graph.with_c_dnf(a.c_dnf))
    return replace(config, params=p)


def _config(name: str, a) -> ScenarioConfig:
    if name not in CONDITIONS:
        raise UsageError(f"unknown condition {name!r}; valid choices: {', '.join(CONDITIONS)}")
    width = EXTERNAL_WIDTH if a.input_width is None else a.input_width
    return _apply(build_condition(name, ModelParams(), width), a)


def _scenario(a) -> ScenarioConfig:
    if getattr(a, "scenario", None):
        if a.input_width is not None:
            raise UsageError("--input-width applies to built-in conditions only")
        return _apply(load_scenario(Path(a.scenario).read_text()), a)
    return _config(a.condition, a)


def _write(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def cmd_simulate(a) -> int:
    cfg = _scenario(a)
    trace = run_simulation(cfg, a.seed)
    _write(a.out, trace.to_csv())
    rec = record_from_trace(trace, cfg)
    print(json.dumps(_jsonable(rec.as_dict()), sort_keys=True))
    return EXIT_OK


def _batch_summary(records) -> dict:
    out = {"conditions": summarize(records)}
    for ctx in ("adjacency", "possession"):
        rows = [r for r in records if r.condition == ctx and r.rt is not None and r.acceptability is not None]
        try:
            rho, p = spearman([r.acceptability for r in rows], [r.rt for r in rows])
            out.setdefault("spearman", {})[ctx] = {"rho": rho, "p": p, "n": len(rows)}
        except ValueError as e:
            out.setdefault("spearman", {})[ctx] = {"error": str(e)}
    for key, fn in (("regression", context_regression), ("signflip", signflip_magnitude_check)):
        try:
            out[key] = fn(records).as_dict()
        except (ValueError, ArithmeticError) as e:
            out[key] = {"error": str(e)}
    return out


def cmd_batch(a) -> int:
    configs = [_config(c, a) for c in a.conditions]
    res = batch_mod.run_batch(configs, a.n, a.seed, a.workers)
    if a.format == "csv":
        _write(a.out, batch_mod.records_to_csv(res.records))
    else:
        _write(a.out, "".join(json.dumps(_jsonable(r.as_dict()), sort_keys=True) + "\n" for r in res.records))
    summary = dict(master_seed=a.seed, n=res.n, **_batch_summary(res.records))
    text = json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n"
    if a.summary:
        Path(a.summary).write_text(text)
    elif a.out not in (None, "-"):
        sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(a) -> int:
    configs = [_config(c, a) for c in a.conditions]
    rows = batch_mod.sweep_cdnf(a.values, a.n, a.seed, configs, a.workers)
    _write(a.out, batch_mod.sweep_to_csv(rows))
    if a.plot:
        Path(a.plot).write_text(plot_sweep(rows))
    return EXIT_OK


def cmd_export(a) -> int:
    _write(a.out, serialize_scenario(_config(a.condition, a)))
    return EXIT_OK


def cmd_plot(a) -> int:
    try:
        text = Path(a.records).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {a.records}: {e.strerror}") from None
    records = batch_mod.records_from_csv(text)
    if not records:
        raise UsageError("no rows")
    _write(a.out, plot_records(records, a.kind))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    model = _model_flags()
    ap = _Parser(prog="dnflex", description="Dynamic neural field simulations of English 'have'.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = _Help

    s = sub.add_parser("simulate", parents=[model], formatter_class=fmt,
                       help="run one simulation, write its trace and print its record")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--condition", default="canonical", help=f"built-in condition ({', '.join(CONDITIONS)})")
    src.add_argument("--scenario", help="JSON scenario file instead of a built-in condition")
    s.add_argument("--seed", type=int, default=0, help="noise seed")
    s.add_argument("--out", default="trace.csv", help="trace CSV path, '-' for stdout")
    s.set_defaults(func=cmd_simulate)

    workers_help = f"worker processes (default: ${batch_mod.WORKERS_ENV} or 1)"
    b = sub.add_parser("batch", parents=[model], formatter_class=fmt,
                       help="run many simulations per condition and analyse them")
    b.add_argument("--conditions", nargs="+", default=["adjacency", "possession"], help="conditions to run")
    b.add_argument("--n", type=int, default=1000, help="simulations per condition")
    b.add_argument("--seed", type=int, default=0, help="master seed")
    b.add_argument("--out", default="records.csv", help="records path, '-' for stdout")
    b.add_argument("--format", choices=("csv", "json"), default="csv", help="records format")
    b.add_argument("--summary", default=None, help="summary JSON path (printed to stdout if omitted)")
    b.add_argument("--workers", type=int, default=None, help=workers_help)
    b.set_defaults(func=cmd_batch)

    w = sub.add_parser("sweep", parents=[model], formatter_class=fmt,
                       help="mean acceptability across coupling gains")
    w.add_argument("--values", nargs="+", type=float, default=list(batch_mod.DEFAULT_SWEEP), help="c_DNF values")
    w.add_argument("--conditions", nargs="+", default=["adjacency", "possession"], help="conditions to run")
    w.add_argument("--n", type=int, default=1000, help="simulations per cell")
    w.add_argument("--seed", type=int, default=0, help="master seed")
    w.add_argument("--out", default="sweep.csv", help="sweep CSV path, '-' for stdout")
    w.add_argument("--plot", default=None, help="also write an SVG line chart here")
    w.add_argument("--workers", type=int, default=None, help=workers_help)
    w.set_defaults(func=cmd_sweep)

    e = sub.add_parser("export-scenario", parents=[model], formatter_class=fmt,
                       help="write a built-in condition as a JSON scenario file")
    e.add_argument("--condition", default="canonical", help=f"built-in condition ({', '.join(CONDITIONS)})")
    e.add_argument("--out", default="-", help="output path, '-' for stdout")
    e.set_defaults(func=cmd_export)

    p = sub.add_parser("plot", formatter_class=fmt, help="SVG figure from a records CSV")
    p.add_argument("records", help="records CSV written by 'batch'")
    p.add_argument("--kind", choices=PLOT_KINDS, default="peak-hist", help="figure type")
    p.add_argument("--out", default="-", help="SVG path, '-' for stdout")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalAbort as e:
        print(f"dnflex: numerical abort: {e}", file=sys.stderr)
        return EXIT_ABORT
    except (UsageError, ScenarioError, ValueError, OSError) as e:
        print(f"dnflex: error: {e}", file=sys.stderr)
        return EXIT_USAGE


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
