"""Intermediate representation of bilateral dynamical systems."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..blocks import ScaleCurrent
from ..device import params_for
from ..errors import ValidationError

CURRENT_UNITS = {"fA": 1e-15, "pA": 1e-12, "nA": 1e-9, "uA": 1e-6, "mA": 1e-3, "A": 1.0}
TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6}

DEFAULT_UNIT_CURRENT = {"subthreshold": 1e-9, "strong_inversion": 1e-6}


# -- expression tree --------------------------------------------------------

class Expr:
    __slots__ = ()

    def children(self):
        return ()


@dataclass(frozen=True)
class StateRef(Expr):
    name: str


@dataclass(frozen=True)
class InputRef(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Neg(Expr):
    x: Expr

    def children(self):
        return (self.x,)


@dataclass(frozen=True)
class Add(Expr):
    l: Expr
    r: Expr

    def children(self):
        return (self.l, self.r)


@dataclass(frozen=True)
class Sub(Expr):
    l: Expr
    r: Expr

    def children(self):
        return (self.l, self.r)


@dataclass(frozen=True)
class Mul(Expr):
    """``l * r / scale``."""
    l: Expr
    r: Expr
    scale: float

    def children(self):
        return (self.l, self.r)


@dataclass(frozen=True)
class Square(Expr):
    """``x * x / scale``."""
    x: Expr
    scale: float

    def children(self):
        return (self.x,)


@dataclass(frozen=True)
class DivByConst(Expr):
    """``x * I_unit / scale`` (a constant gain, current in, current out)."""
    x: Expr
    scale: float

    def children(self):
        return (self.x,)


def walk(e: Expr):
    """Post-order traversal."""
    for c in e.children():
        yield from walk(c)
    yield e


def names_in(e: Expr):
    states, inputs = set(), set()
    for node in walk(e):
        if isinstance(node, StateRef):
            states.add(node.name)
        elif isinstance(node, InputRef):
            inputs.add(node.name)
    return states, inputs


def depth(e: Expr) -> int:
    return 1 + max((depth(c) for c in e.children()), default=0)


def eval_expr(e: Expr, state_values: Mapping[str, float],
              input_values: Mapping[str, float] = None, unit_current=1e-9) -> float:
    """Reference real-valued semantics of an expression (rails ignored)."""
    ev = _EVAL[type(e)]
    return ev(e, state_values, input_values or {}, unit_current)


def _ev(e, s, i, u):
    return _EVAL[type(e)](e, s, i, u)


_EVAL = {
    StateRef: lambda e, s, i, u: s[e.name],
    InputRef: lambda e, s, i, u: i[e.name],
    Const: lambda e, s, i, u: e.value,
    Neg: lambda e, s, i, u: -_ev(e.x, s, i, u),
    Add: lambda e, s, i, u: _ev(e.l, s, i, u) + _ev(e.r, s, i, u),
    Sub: lambda e, s, i, u: _ev(e.l, s, i, u) - _ev(e.r, s, i, u),
    Mul: lambda e, s, i, u: _ev(e.l, s, i, u) * _ev(e.r, s, i, u) / e.scale,
    Square: lambda e, s, i, u: _ev(e.x, s, i, u) ** 2 / e.scale,
    DivByConst: lambda e, s, i, u: _ev(e.x, s, i, u) * u / e.scale,
}


# -- drives -----------------------------------------------------------------

DRIVE_KINDS = ("constant", "step", "pulse", "ramp", "pwl")


@dataclass(frozen=True)
class DriveSpec:
    """Time course of an external input current.

    ``constant(A)``, ``step(t0, A)``, ``pulse(t0, width, A)``,
    ``ramp(rate)`` in A/s, ``pwl(points)`` with ``points`` a tuple of
    ``(t, A)`` pairs held constant outside their span.
    """
    kind: str
    args: tuple

    def __post_init__(self):
        if self.kind not in DRIVE_KINDS:
            raise ValidationError(f"unknown drive kind {self.kind!r}")
        a = self.args
        if self.kind == "step" and a[0] < 0:
            raise ValidationError("step time must be non-negative")
        if self.kind == "pulse" and (a[0] < 0 or a[1] < 0):
            raise ValidationError("pulse times must be non-negative")
        if self.kind == "pwl":
            ts = [p[0] for p in a]
            if not ts or ts[0] < 0 or any(t1 <= t0 for t0, t1 in zip(ts, ts[1:])):
                raise ValidationError("pwl times must be non-negative and strictly increasing")

    @classmethod
    def constant(cls, amplitude):
        return cls("constant", (float(amplitude),))

    @classmethod
    def step(cls, t0, amplitude):
        return cls("step", (float(t0), float(amplitude)))

    @classmethod
    def pulse(cls, t0, width, amplitude):
        return cls("pulse", (float(t0), float(width), float(amplitude)))

    @classmethod
    def ramp(cls, rate):
        return cls("ramp", (float(rate),))

    @classmethod
    def pwl(cls, points):
        return cls("pwl", tuple((float(t), float(v)) for t, v in points))

    def __call__(self, t):
        k, a = self.kind, self.args
        if k == "constant":
            return a[0]
        if k == "step":
            return a[1] if t >= a[0] else 0.0
        if k == "pulse":
            return a[2] if a[0] <= t < a[0] + a[1] else 0.0
        if k == "ramp":
            return a[0] * t
        ts, vs = zip(*a)
        return float(np.interp(t, ts, vs))

    def time_scaled(self, r):
        """The same waveform played ``1/r`` times slower (``t -> t * r``)."""
        k, a = self.kind, self.args
        if k == "step":
            return DriveSpec.step(a[0] * r, a[1])
        if k == "pulse":
            return DriveSpec.pulse(a[0] * r, a[1] * r, a[2])
        if k == "ramp":
            return DriveSpec.ramp(a[0] / r)
        if k == "pwl":
            return DriveSpec.pwl((t * r, v) for t, v in a)
        return self

    def to_json(self):
        if self.kind == "pwl":
            return {"kind": "pwl", "points": [list(p) for p in self.args]}
        return {"kind": self.kind, "args": list(self.args)}

    @classmethod
    def from_json(cls, d):
        if d["kind"] == "pwl":
            return cls.pwl(d["points"])
        return cls(d["kind"], tuple(float(x) for x in d["args"]))


# -- system -----------------------------------------------------------------

@dataclass(frozen=True)
class StateDecl:
    name: str
    tau: float
    I_dc: float
    init: float = 0.0


@dataclass(frozen=True)
class DynSystem:
    name: str
    states: tuple
    inputs: tuple  # of (name, DriveSpec)
    equations: dict = field(hash=False)
    regime: str = "subthreshold"
    device: object = None
    unit_current: float = None

    def __post_init__(self):
        if self.device is None:
            object.__setattr__(self, "device", params_for(self.regime))
        if self.unit_current is None:
            object.__setattr__(self, "unit_current", DEFAULT_UNIT_CURRENT[self.regime])
        if self.device.regime != self.regime:
            raise ValidationError("device parameters do not match the regime")
        validate(self)

    @property
    def state_names(self):
        return [s.name for s in self.states]

    @property
    def input_names(self):
        return [n for n, _ in self.inputs]

    def state(self, name):
        for s in self.states:
            if s.name == name:
                return s
        raise KeyError(name)

    def drive(self, name):
        return dict(self.inputs)[name]

    def replace(self, **kw):
        d = dict(name=self.name, states=self.states, inputs=self.inputs,
                 equations=self.equations, regime=self.regime, device=self.device,
                 unit_current=self.unit_current)
        d.update(kw)
        return DynSystem(**d)

    def with_inits(self, **inits):
        states = tuple(StateDecl(s.name, s.tau, s.I_dc, inits.get(s.name, s.init))
                       for s in self.states)
        return self.replace(states=states)

    def with_drives(self, **drives):
        inputs = tuple((n, drives.get(n, d)) for n, d in self.inputs)
        return self.replace(inputs=inputs)

    def time_scaled(self, r):
        return self.replace(inputs=tuple((n, d.time_scaled(r)) for n, d in self.inputs))

    def rhs(self, state_values, input_values):
        """Evaluate every ``F_i`` (not divided by tau)."""
        return {s.name: eval_expr(self.equations[s.name], state_values,
                                  input_values, self.unit_current)
                for s in self.states}

    @property
    def tau_min(self):
        return min(s.tau for s in self.states)

    @property
    def tau_max(self):
        return max(s.tau for s in self.states)


def validate(sys: DynSystem):
    names = [s.name for s in sys.states]
    inputs = [n for n, _ in sys.inputs]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate state name")
    if len(set(inputs)) != len(inputs) or set(names) & set(inputs):
        raise ValidationError("duplicate input name")
    for s in sys.states:
        if not (s.tau > 0 and s.I_dc > 0):
            raise ValidationError(f"state {s.name}: tau and idc must be positive")
    if set(sys.equations) != set(names):
        missing = set(names) - set(sys.equations)
        extra = set(sys.equations) - set(names)
        if missing:
            raise ValidationError(f"no equation for state(s) {sorted(missing)}")
        raise ValidationError(f"equation for undeclared state(s) {sorted(extra)}")
    for name, e in sys.equations.items():
        for node in walk(e):
            if isinstance(node, StateRef) and node.name not in names:
                raise ValidationError(f"eq {name}: unresolved name {node.name!r}")
            if isinstance(node, InputRef) and node.name not in inputs:
                raise ValidationError(f"eq {name}: unresolved name {node.name!r}")
            if isinstance(node, (Mul, Square, DivByConst)):
                try:
                    ScaleCurrent(node.scale)
                except ValidationError:
                    raise ValidationError(
                        f"eq {name}: nonpositive scale current {node.scale!r}") from None


# -- rendering --------------------------------------------------------------

_RENDER_UNITS = ("nA", "pA", "uA", "fA", "mA")


def render_current(v: float) -> str:
    """Shortest unit form that parses back to exactly ``v``."""
    if v == 0:
        return "0nA"
    best = repr(float(v)) + "A"
    for unit in _RENDER_UNITS:
        m = CURRENT_UNITS[unit]
        s = repr(v / m)
        if "e" in s or "inf" in s or float(s) * m != v:
            continue
        s = s[:-2] if s.endswith(".0") else s
        if len(s) + len(unit) < len(best):
            best = s + unit
    return best


def render_time(t: float) -> str:
    s = repr(float(t))
    return (s[:-2] if s.endswith(".0") else s) + "s"


def _is_sum(e):
    return isinstance(e, (Add, Sub))


def _factor(e, unit):
    if isinstance(e, (StateRef, InputRef)):
        return e.name
    if isinstance(e, Const):
        return render_current(e.value)
    if isinstance(e, Neg):
        return "-" + _factor(e.x, unit)
    if isinstance(e, Square):
        return f"sq({_term(e.x, unit)} / {render_current(e.scale)})"
    return "(" + render_expr(e, unit) + ")"


def _term(e, unit):
    if isinstance(e, Mul):
        return f"{_term(e.l, unit)} * {_factor(e.r, unit)} / {render_current(e.scale)}"
    if isinstance(e, DivByConst):
        return f"{_term(e.x, unit)} / {render_current(e.scale)}"
    return _factor(e, unit)


def render_expr(e: Expr, unit=None) -> str:
    if isinstance(e, Add):
        r = _term(e.r, unit) if not _is_sum(e.r) else "(" + render_expr(e.r, unit) + ")"
        return f"{render_expr(e.l, unit)} + {r}"
    if isinstance(e, Sub):
        r = _term(e.r, unit) if not _is_sum(e.r) else "(" + render_expr(e.r, unit) + ")"
        return f"{render_expr(e.l, unit)} - {r}"
    return _term(e, unit)


def _render_drive(d: DriveSpec) -> str:
    a = d.args
    if d.kind == "constant":
        return f"constant {render_current(a[0])}"
    if d.kind == "step":
        return f"step {render_time(a[0])} {render_current(a[1])}"
    if d.kind == "pulse":
        return f"pulse {render_time(a[0])} {render_time(a[1])} {render_current(a[2])}"
    if d.kind == "ramp":
        return f"ramp {render_current(a[0])}/s"
    return "pwl " + " ".join(f"{render_time(t)}:{render_current(v)}" for t, v in a)


def render(sys: DynSystem) -> str:
    """Pretty-print a system in the DSL; ``parse(render(s)) == s``."""
    lines = [f"system {sys.name}", f"regime {sys.regime}"]
    dev = " ".join(f"{k}={v!r}" for k, v in sys.device.as_dict().items())
    lines.append(f"device {dev}")
    lines.append(f"unit {render_current(sys.unit_current)}")
    for s in sys.states:
        lines.append(f"state {s.name} tau={render_time(s.tau)} "
                     f"idc={render_current(s.I_dc)} init={render_current(s.init)}")
    for n, d in sys.inputs:
        lines.append(f"input {n} {_render_drive(d)}")
    for s in sys.states:
        lines.append(f"eq {s.name} = {render_expr(sys.equations[s.name])}")
    return "\n".join(lines) + "\n"
