"""
Straight-line simulation kernels
================================

A system (or a netlist) is turned into the Python source of a right-hand
side function with every expression node or block output as a local
variable, plus a fixed-step driver loop.  The source is compiled with
numba when it is importable (set ``NBDS_JIT=0`` to force the plain
Python path) and cached by source text, so Monte Carlo runs that only
change device parameters reuse one compiled kernel.

Kernel calling convention::

    rhs(t, x, dx, dk, da, P, lo, hi, clip) -> flags
    run(x0, t0, dt, nsteps, stride, method, dk, da, P, lo, hi, clip,
        out_t, out_x, out_sat) -> (status, n_recorded, t_fail)

``flags`` bits: 1 exponent clamped, 2 denominator underflow, 4 device
off (strong inversion), 8 clipping engaged.  ``status``: 0 ok,
1 non-finite state, 2 denominator underflow.
"""
from __future__ import annotations

import math
import os

import numpy as np

from ..core import DENOMINATOR_FLOOR, STRONG_INVERSION
from ..device import EXP_CLAMP, StrongInversionParams, beta_sub
from ..dsl.ir import (Add, Const, DivByConst, InputRef, Mul, Neg, Square, StateRef, Sub)

FLAG_EXP = 1
FLAG_UNDERFLOW = 2
FLAG_OFF = 4
FLAG_CLIP = 8

STATUS_OK = 0
STATUS_NONFINITE = 1
STATUS_UNDERFLOW = 2

DRIVE_CODES = {"constant": 0, "step": 1, "pulse": 2, "ramp": 3, "pwl": 4}
PARAMS_PER_CORE = 6


def jit_enabled():
    if os.environ.get("NBDS_JIT", "1").strip().lower() in ("0", "false", "no", "off"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _njit(fn):
    if not jit_enabled():
        return fn
    import numba
    return numba.njit(cache=False, fastmath=False)(fn)


def drive_value(k, a, t):
    if k == 0:
        return a[0]
    if k == 1:
        return a[1] if t >= a[0] else 0.0
    if k == 2:
        return a[2] if (t >= a[0] and t < a[0] + a[1]) else 0.0
    if k == 3:
        return a[0] * t
    n = int(a[0])
    if t <= a[1]:
        return a[2]
    if t >= a[2 * n - 1]:
        return a[2 * n]
    for i in range(1, n):
        t1 = a[2 * i + 1]
        if t < t1:
            t0 = a[2 * i - 1]
            v0 = a[2 * i]
            v1 = a[2 * i + 2]
            return v0 + (t - t0) * (v1 - v0) / (t1 - t0)
    return a[2 * n]


def encode_drives(drives):
    """Pack ``DriveSpec`` objects into ``(codes, args)`` arrays for kernels."""
    rows = []
    for d in drives:
        if d.kind == "pwl":
            flat = [float(len(d.args))]
            for t, v in d.args:
                flat += [t, v]
            rows.append(flat)
        else:
            rows.append(list(d.args))
    width = max([len(r) for r in rows] + [1])
    da = np.zeros((max(len(rows), 1), width))
    for i, r in enumerate(rows):
        da[i, :len(r)] = r
    dk = np.array([DRIVE_CODES[d.kind] for d in drives] or [0], dtype=np.int64)
    return dk, da


_RUN_SOURCE = '''
def run(x0, t0, dt, nsteps, stride, method, dk, da, P, lo, hi, clip, out_t, out_x, out_sat):
    n = x0.shape[0]
    x = x0.copy()
    k1 = np.zeros(n)
    k2 = np.zeros(n)
    k3 = np.zeros(n)
    k4 = np.zeros(n)
    xs = np.zeros(n)
    out_t[0] = t0
    for j in range(n):
        out_x[0, j] = x[j]
    out_sat[0] = False
    rec = 1
    sat = False
    for i in range(nsteps):
        t = t0 + i * dt
        if method == 0:
            f = rhs(t, x, k1, dk, da, P, lo, hi, clip)
            if f & 2:
                return 2, rec, t
            for j in range(n):
                xs[j] = x[j] + 0.5 * dt * k1[j]
            f |= rhs(t + 0.5 * dt, xs, k2, dk, da, P, lo, hi, clip)
            for j in range(n):
                xs[j] = x[j] + 0.5 * dt * k2[j]
            f |= rhs(t + 0.5 * dt, xs, k3, dk, da, P, lo, hi, clip)
            for j in range(n):
                xs[j] = x[j] + dt * k3[j]
            f |= rhs(t + dt, xs, k4, dk, da, P, lo, hi, clip)
            if f & 2:
                return 2, rec, t
            for j in range(n):
                x[j] = x[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        else:
            f = rhs(t, x, k1, dk, da, P, lo, hi, clip)
            if f & 2:
                return 2, rec, t
            for j in range(n):
                x[j] = x[j] + dt * k1[j]
        if clip:
            for j in range(n):
                if x[j] < lo[j]:
                    x[j] = lo[j]
                    f |= 8
                elif x[j] > hi[j]:
                    x[j] = hi[j]
                    f |= 8
        if f & 13:
            sat = True
        for j in range(n):
            if not np.isfinite(x[j]):
                return 1, rec, t + dt
        if (i + 1) % stride == 0:
            out_t[rec] = t0 + (i + 1) * dt
            for j in range(n):
                out_x[rec, j] = x[j]
            out_sat[rec] = sat
            sat = False
            rec += 1
    return 0, rec, t0 + nsteps * dt
'''


class Kernel:
    """A compiled ``(rhs, run)`` pair with its generating source."""

    def __init__(self, source):
        self.source = source
        ns = {"np": np, "math": math, "drive_value": _DRIVE}
        exec(compile(source + _RUN_SOURCE, "<nbds-kernel>", "exec"), ns)
        self.rhs = _njit(ns["rhs"])
        ns["rhs"] = self.rhs
        self.run = _njit(ns["run"])


_DRIVE = _njit(drive_value)
_CACHE = {}


def get_kernel(source) -> Kernel:
    key = (source, jit_enabled())
    k = _CACHE.get(key)
    if k is None:
        k = _CACHE[key] = Kernel(source)
    return k


def _f(v):
    return repr(float(v))


# -- math kernel ----------------------------------------------------------------

class _ExprGen:
    def __init__(self, states, inputs, unit):
        self.idx = {n: i for i, n in enumerate(states)}
        self.inp = {n: i for i, n in enumerate(inputs)}
        self.unit = unit
        self.lines = []
        self.memo = {}

    def emit(self, e):
        if isinstance(e, StateRef):
            return f"x[{self.idx[e.name]}]"
        if isinstance(e, InputRef):
            return f"u{self.inp[e.name]}"
        if isinstance(e, Const):
            return f"({_f(e.value)})"
        if e in self.memo:
            return self.memo[e]
        if isinstance(e, Neg):
            code = f"-{self.emit(e.x)}"
        elif isinstance(e, Add):
            code = f"{self.emit(e.l)} + {self.emit(e.r)}"
        elif isinstance(e, Sub):
            code = f"{self.emit(e.l)} - {self.emit(e.r)}"
        elif isinstance(e, Mul):
            code = f"{self.emit(e.l)} * {self.emit(e.r)} / {_f(e.scale)}"
        elif isinstance(e, Square):
            a = self.emit(e.x)
            code = f"{a} * {a} / {_f(e.scale)}"
        elif isinstance(e, DivByConst):
            code = f"{self.emit(e.x)} * {_f(self.unit)} / {_f(e.scale)}"
        else:
            raise TypeError(type(e).__name__)
        name = f"e{len(self.memo)}"
        self.lines.append(f"    {name} = {code}")
        self.memo[e] = name
        return name


def math_source(sys) -> str:
    """Kernel source integrating ``tau_i * x_i' = F_i`` directly."""
    g = _ExprGen(sys.state_names, sys.input_names, sys.unit_current)
    body = [f"    u{i} = drive_value(dk[{i}], da[{i}], t)" for i in range(len(sys.inputs))]
    outs = []
    for i, s in enumerate(sys.states):
        F = g.emit(sys.equations[s.name])
        outs.append(f"    dx[{i}] = {F} / {_f(s.tau)}")
    lines = ["def rhs(t, x, dx, dk, da, P, lo, hi, clip):"] + body + g.lines + outs
    lines.append("    return 0")
    return "\n".join(lines) + "\n"


# -- circuit kernel -------------------------------------------------------------

def pack_device_params(netlist):
    """Per-core parameter array, ``PARAMS_PER_CORE`` slots per core.

    subthreshold: ``[beta, nVT, V_b, C, I_dc, 0]``;
    strong inversion: ``[k_n, 1 + beta_si, 2 V_th, V_b, C, I_dc]``.
    """
    P = np.zeros(PARAMS_PER_CORE * len(netlist.cores))
    for j, c in enumerate(netlist.cores):
        m = c.mapping
        d = m.device
        b = PARAMS_PER_CORE * j
        if isinstance(d, StrongInversionParams):
            P[b:b + 6] = [d.k_n, 1.0 + d.beta_si, 2.0 * d.V_th, d.V_b, m.C, m.I_dc]
        else:
            P[b:b + 6] = [beta_sub(d), d.nVT, d.V_b, m.C, m.I_dc, 0.0]
    return P


def _ep(name):
    """Python identifier for a netlist endpoint."""
    return "n_" + name.replace(":", "_").replace(".", "_")


def _block_lines(b, port):
    k = b.kind
    p = dict(b.params)
    o = _ep(b.id)
    if k in ("MULT1P", "MULT1N"):
        return [f"{o}_out = {port('a')} * {port('b')} / {_f(p['I3'])}"]
    if k == "SQ1":
        return [f"{o}_out = {port('x')} * {port('x')} / {_f(p['I_X'])}"]
    if k == "SQ2":
        s = _f(p["I_X"])
        return [f"{o}_a = {port('x.pos')}",
                f"{o}_b = {port('x.neg')}",
                f"{o}_out = ({o}_a * {o}_a / {s} + {o}_b * {o}_b / {s}) - 2 * ({o}_a * {o}_b / {s})",
                f"if {o}_out < 0.0:",
                f"    {o}_out = 0.0"]
    if k == "MULT2":
        s = _f(p["I_X"])
        return [f"{o}_c = {port('c')}",
                f"{o}_out_pos = {port('x.pos')} * {o}_c / {s}",
                f"{o}_out_neg = {port('x.neg')} * {o}_c / {s}"]
    if k in ("MULT3", "BMULT"):
        if k == "MULT3":
            num, s = "", _f(p["I_dc"])
        else:
            num, s = "2 * ", _f(p["I_b"])
        return [f"{o}_xp = {port('x.pos')}",
                f"{o}_xn = {port('x.neg')}",
                f"{o}_yp = {port('y.pos')}",
                f"{o}_yn = {port('y.neg')}",
                f"{o}_out_pos = {num}({o}_xp * {o}_yp + {o}_xn * {o}_yn) / {s}" if num else
                f"{o}_out_pos = {o}_xp * {o}_yp / {s} + {o}_xn * {o}_yn / {s}",
                f"{o}_out_neg = {num}({o}_xn * {o}_yp + {o}_xp * {o}_yn) / {s}" if num else
                f"{o}_out_neg = {o}_xp * {o}_yn / {s} + {o}_xn * {o}_yp / {s}"]
    if k == "SPLIT":
        return [f"{o}_in = {port('in')}",
                f"{o}_out_pos = {o}_in if {o}_in > 0.0 else 0.0",
                f"{o}_out_neg = -{o}_in if {o}_in < 0.0 else 0.0"]
    if k == "MIRROR":
        g = _f(p["gain"])
        return [f"{o}_out_pos = {g} * {port('in.pos')}",
                f"{o}_out_neg = {g} * {port('in.neg')}"]
    if k == "ROOTSQ":
        return [f"{o}_out = 2.0 * math.sqrt({port('in')} * {_f(p['I_b'])})"]
    if k == "MULTCORE":
        s = _f(p["I_b"])
        return [f"{o}_out = ({port('in')} + 0.5 * {s}) ** 2 / {s}"]
    raise ValueError(f"unknown block kind {k!r}")


def circuit_source(netlist) -> str:
    """Kernel source of the capacitor-voltage dynamics of a netlist.

    Device values are read from ``P`` so one kernel serves every
    parameter perturbation of the same netlist.
    """
    sinks = {}
    for net in netlist.nets:
        sinks.setdefault(net.dst, []).append(net.src)
    src_names = {}
    for i, name in enumerate(netlist.input_names):
        src_names[f"in:{name}"] = f"u{i}"
    consts = dict(netlist.consts)

    def ref(src):
        if src in consts:
            return f"({_f(consts[src])})"
        if src in src_names:
            return src_names[src]
        return _ep(src)

    def port_sum(dst):
        terms = sinks.get(dst, ())
        return "(" + " + ".join(ref(s) for s in terms) + ")" if terms else "0.0"

    si = netlist.regime == STRONG_INVERSION
    L = ["def rhs(t, x, dx, dk, da, P, lo, hi, clip):", "    flags = 0"]
    for i in range(len(netlist.inputs)):
        L.append(f"    u{i} = drive_value(dk[{i}], da[{i}], t)")
    for j, c in enumerate(netlist.cores):
        b = PARAMS_PER_CORE * j
        a, bb = f"IA{j}", f"IB{j}"
        L.append(f"    vc{j} = x[{j}]")
        if si:
            L += [f"    oda = (P[{b + 3}] - vc{j} - P[{b + 2}]) / P[{b + 1}]",
                  f"    odb = (vc{j} - P[{b + 2}]) / P[{b + 1}]",
                  "    if oda < 0.0:",
                  "        oda = 0.0",
                  "        flags |= 4",
                  "    if odb < 0.0:",
                  "        odb = 0.0",
                  "        flags |= 4",
                  f"    {a} = P[{b}] * oda * oda",
                  f"    {bb} = P[{b}] * odb * odb"]
        else:
            L += [f"    ea = (P[{b + 2}] - vc{j}) / P[{b + 1}]",
                  f"    eb = vc{j} / P[{b + 1}]",
                  f"    if ea > {EXP_CLAMP!r} or ea < -{EXP_CLAMP!r} "
                  f"or eb > {EXP_CLAMP!r} or eb < -{EXP_CLAMP!r}:",
                  "        flags |= 1",
                  f"        ea = min(max(ea, -{EXP_CLAMP!r}), {EXP_CLAMP!r})",
                  f"        eb = min(max(eb, -{EXP_CLAMP!r}), {EXP_CLAMP!r})",
                  f"    {a} = P[{b}] * math.exp(ea)",
                  f"    {bb} = P[{b}] * math.exp(eb)"]
        L.append(f"    {_ep(f'core:{c.name}.pos')} = {bb}")
        L.append(f"    {_ep(f'core:{c.name}.neg')} = {a}")
    blocks = {b.id: b for b in netlist.blocks}
    for bid in netlist.order:
        blk = blocks[bid]
        for line in _block_lines(blk, lambda p, bid=bid: port_sum(f"{bid}.{p}")):
            L.append("    " + line)
    for j, c in enumerate(netlist.cores):
        b = PARAMS_PER_CORE * j
        a, bb = f"IA{j}", f"IB{j}"
        C, idc = (f"P[{b + 4}]", f"P[{b + 5}]") if si else (f"P[{b + 3}]", f"P[{b + 4}]")
        den = f"math.sqrt({a}) + math.sqrt({bb})" if si else f"{a} + {bb}"
        L += [f"    den = {den}",
              f"    if den < {DENOMINATOR_FLOOR!r}:",
              "        return flags | 2",
              f"    fp = {port_sum(f'core:{c.name}.F.pos')}",
              f"    fn = {port_sum(f'core:{c.name}.F.neg')}",
              f"    dv = (fp * {idc} / den - fn * {idc} / den) / {C}",
              f"    if clip and ((vc{j} <= lo[{j}] and dv < 0.0) or (vc{j} >= hi[{j}] and dv > 0.0)):",
              "        dv = 0.0",
              "        flags |= 8",
              f"    dx[{j}] = dv"]
    L.append("    return flags")
    return "\n".join(L) + "\n"
