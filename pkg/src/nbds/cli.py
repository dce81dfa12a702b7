"""
Command-line front end.

Subcommands: ``list``, ``synth``, ``sim``, ``compare`` and ``mc``.
Exit codes: 0 success, 1 comparison outside tolerance, 2 usage or
validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import fields

from .core import time_rescale
from .dsl import BUILTINS, builtin, parse
from .errors import (DenominatorUnderflow, NBDSError, NonFinite, OutOfRange, ParseError,
                     ValidationError)
from .sim import (SimConfig, compare, integrate_circuit, integrate_math, monte_carlo,
                  waveform_csv, write_projections)
from .synth import emit, lower

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


# -- configuration ------------------------------------------------------------------

def read_params_file(path):
    """Flat ``key=value`` device parameters; ``#`` comments allowed."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read params file {path}: {exc.strerror}") from None
    for n, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        try:
            out[k] = float(v)
        except ValueError:
            raise UsageError(f"{path}:{n}: {k}: not a number: {v!r}") from None
    return out


def apply_params(system, params):
    allowed = {f.name for f in fields(system.device)}
    unknown = sorted(set(params) - allowed)
    if unknown:
        raise UsageError(f"unknown device parameter(s) for {system.regime}: "
                         f"{', '.join(unknown)} (allowed: {', '.join(sorted(allowed))})")
    return system.replace(device=system.device.replace(**params)) if params else system


def load_system(args):
    sel = args.system
    if sel in BUILTINS:
        kw = {}
        if getattr(args, "init_outside", False):
            if sel != "hopf":
                raise UsageError("--init-outside applies to the hopf system only")
            kw["init_outside"] = True
        system = builtin(sel, **kw)
    elif os.path.isfile(sel):
        if getattr(args, "init_outside", False):
            raise UsageError("--init-outside applies to the hopf system only")
        with open(sel, encoding="utf-8") as fh:
            system = parse(fh.read())
    else:
        raise UsageError(f"unknown system {sel!r}: not a builtin ({', '.join(BUILTINS)}) "
                         f"and no such file")
    params_path = args.params or os.environ.get("NBDS_PARAMS")
    if params_path:
        system = apply_params(system, read_params_file(params_path))
    return system


def sim_config(args):
    return SimConfig(dt=args.dt, t_end=args.t_end, integrator=args.integrator,
                     record_stride=args.stride, clipping=args.clipping)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# -- commands -----------------------------------------------------------------------

def cmd_list(args=None):
    width = max(len(n) for n in BUILTINS)
    return "".join(f"{n:<{width}}  {desc}\n" for n, (_, desc) in BUILTINS.items())


def cmd_synth(args):
    system = load_system(args)
    net = lower(system, mapping_constant=args.mapping)
    if args.out:
        _write(emit(net), args.out)
    return net.summary() + "\n" + net.wiring_summary() + "\n"


def _run_mode(system, mode, cfg, mapping):
    if mode == "math":
        return integrate_math(system, cfg)
    return integrate_circuit(lower(system, mapping_constant=mapping), cfg)


def cmd_sim(args):
    system = load_system(args)
    cfg = sim_config(args)
    w = _run_mode(system, args.mode, cfg, args.mapping)
    if args.projections:
        if not {"x", "y", "z"} <= set(w.states):
            raise UsageError("--projections needs states named x, y and z")
        write_projections(w, args.projections, prefix=f"{system.name}_{args.mode}")
    _write(waveform_csv(w), args.out)
    return ""


def run_compare(system, cfg, mapping="paper", rescale="auto", c_scale=1.0):
    """Math reference and circuit run; the circuit is rescaled in time when
    the paper mapping constant makes it run fast."""
    cfg = cfg.resolved([s.tau for s in system.states])
    ref = integrate_math(system, cfg)
    net = lower(system, mapping_constant=mapping)
    if c_scale != 1.0:
        net = net.with_capacitance_scale(c_scale)
    r = time_rescale(system.device, mapping) if rescale == "auto" else 1.0
    circ = integrate_circuit(net, cfg.replace(dt=cfg.dt * r, t_end=cfg.t_end * r))
    if r != 1.0:
        circ = circ.rescaled(r)
    return ref, circ, r


def _num(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


def cmd_compare(args):
    system = load_system(args)
    ref, circ, r = run_compare(system, sim_config(args), args.mapping, args.rescale,
                               args.c_scale)
    metrics = compare(circ, ref)
    ok = all(m.nrmse <= args.max_nrmse for m in metrics.values())
    rows = {}
    for s, m in metrics.items():
        rows[s] = {"nrmse": m.nrmse, "rmse": m.rmse,
                   "amplitude_error_pct": _num(100 * m.extra["amplitude_error"])
                   if m.extra else None,
                   "period_error_pct": _num(100 * m.extra["period_error"])
                   if m.extra else None}
    if args.format == "json":
        doc = {"system": system.name, "mapping": args.mapping, "rescale": r,
               "c_scale": args.c_scale, "max_nrmse": args.max_nrmse, "states": rows,
               "pass": ok}
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        lines = [f"system={system.name} mapping={args.mapping} rescale={r!r} "
                 f"c_scale={args.c_scale!r}"]
        for s, row in rows.items():
            amp = row["amplitude_error_pct"]
            per = row["period_error_pct"]
            lines.append(f"{s}: nrmse={row['nrmse']:.6e} "
                         f"amplitude_error={'n/a' if amp is None else f'{amp:.4f}%'} "
                         f"period_error={'n/a' if per is None else f'{per:.4f}%'}")
        lines.append(f"{'PASS' if ok else 'FAIL'} (max nrmse {args.max_nrmse:g})")
        text = "\n".join(lines) + "\n"
    return text, (EXIT_OK if ok else EXIT_FAIL)


def cmd_mc(args):
    if args.seed is None:
        raise UsageError("mc requires --seed for reproducibility")
    system = load_system(args)
    net = lower(system, mapping_constant=args.mapping)
    res = monte_carlo(net, sim_config(args), args.sigma, args.runs, args.seed, args.state)
    if args.format == "json":
        doc = {"system": system.name, "runs": res.runs, "sigma": res.sigma,
               "seed": res.seed, "state": res.state,
               "nominal": {"peak_to_peak": res.nominal[0], "period": res.nominal[1]},
               "amplitude": {"mean": _num(res.mean_amplitude()),
                             "std": _num(res.std_amplitude())},
               "period": {"mean": _num(res.mean_period()), "std": _num(res.std_period())},
               "success": res.success}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    return res.report() + "\n"


# -- argument parsing ---------------------------------------------------------------

def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _add_system(p):
    p.add_argument("--system", required=True,
                   help="builtin name (see 'list') or path to a DSL file")
    p.add_argument("--mapping", choices=("paper", "derived"), default="paper",
                   help="strong-inversion mapping constant (default: paper)")


def _add_sim(p):
    p.add_argument("--dt", type=float, default=None, help="time step [s] (default tau_min/2000)")
    p.add_argument("--t-end", type=float, default=None,
                   help="simulated time [s] (default 40 tau_max)")
    p.add_argument("--integrator", choices=("RK4", "Euler"), default="RK4")
    p.add_argument("--stride", type=int, default=1, help="record every N-th step")
    p.add_argument("--clipping", action="store_true",
                   help="clip capacitor voltages to the core's operating window")
    p.add_argument("--init-outside", action="store_true",
                   help="hopf: start outside the unstable limit cycle")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="nbds", description="Synthesize and simulate nonlinear bilateral dynamical systems.")
    ap.add_argument("--params", default=None,
                    help="device parameter file (key=value lines); falls back to $NBDS_PARAMS")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list builtin systems")

    p = sub.add_parser("synth", help="lower a system to a netlist")
    _add_system(p)
    p.add_argument("--out", default=None, help="netlist JSON path")

    p = sub.add_parser("sim", help="simulate the mathematical system or its circuit")
    _add_system(p)
    _add_sim(p)
    p.add_argument("--mode", choices=("math", "circuit"), default="math")
    p.add_argument("--out", default=None, help="waveform CSV path (default stdout)")
    p.add_argument("--projections", default=None, metavar="DIR",
                   help="also write x-y, z-y, z-x projection CSVs into DIR")

    p = sub.add_parser("compare", help="circuit vs mathematical run")
    _add_system(p)
    _add_sim(p)
    p.add_argument("--rescale", choices=("auto", "none"), default="auto",
                   help="undo the strong-inversion paper-constant speed-up (default auto)")
    p.add_argument("--c-scale", type=_positive_float, default=1.0,
                   help="multiply every core capacitor (mis-sizing experiment)")
    p.add_argument("--max-nrmse", type=float, default=1e-3)
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("mc", help="device-parameter Monte Carlo")
    _add_system(p)
    _add_sim(p)
    p.add_argument("--seed", type=int, default=None, help="required")
    p.add_argument("--sigma", type=float, default=0.02,
                   help="relative std of the lognormal factors")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--state", default=None, help="state to measure (default: first)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        code = EXIT_OK
        if args.command == "list":
            out = cmd_list(args)
        elif args.command == "synth":
            out = cmd_synth(args)
        elif args.command == "sim":
            out = cmd_sim(args)
        elif args.command == "compare":
            out, code = cmd_compare(args)
        else:
            out = cmd_mc(args)
    except (NonFinite, DenominatorUnderflow, OutOfRange) as exc:
        print(f"nbds: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ParseError, ValidationError, NBDSError) as exc:
        print(f"nbds: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
