"""Line-oriented parser for the system description language.

Grammar (``#`` starts a comment)::

    system <ident>
    regime subthreshold|strong_inversion
    device <key>=<num> ...                 (optional)
    unit <const>                           (optional)
    state <ident> tau=<num><s|ms|us> idc=<const> init=<const>
    input <ident> constant <const>
    input <ident> step <time> <const>
    input <ident> pulse <time> <time> <const>
    input <ident> ramp <const>/s
    input <ident> pwl <time>:<const> ...
    eq <ident> = <expr>

    expr   := term (('+'|'-') term)*
    term   := factor (('*' factor '/' const) | ('/' const))*
    factor := ident | const | '(' expr ')' | '-' factor | 'sq(' expr '/' const ')'
    const  := <num><fA|pA|nA|uA|mA|A>
"""
from __future__ import annotations

import re

from ..device import params_for
from ..errors import ParseError, ValidationError
from .ir import (CURRENT_UNITS, TIME_UNITS, Add, Const, DivByConst, DriveSpec,
                 DynSystem, InputRef, Mul, Neg, Square, StateDecl, StateRef, Sub)

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<const>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?(?:fA|pA|nA|uA|mA|A)(?![A-Za-z0-9_]))
  | (?P<sq>sq\()
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/()])
""", re.VERBOSE)

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _split_quantity(text, units, line, col, what):
    m = re.fullmatch(rf"({_NUM})([A-Za-z]+)", text)
    if not m or m.group(2) not in units:
        raise ParseError(line, col, f"expected {what}, got {text!r}")
    return float(m.group(1)) * units[m.group(2)]


def parse_current(text, line=0, col=0):
    return _split_quantity(text, CURRENT_UNITS, line, col, "a current like 1.5nA")


def parse_time(text, line=0, col=0):
    return _split_quantity(text, TIME_UNITS, line, col, "a time like 50ms")


# -- expressions --------------------------------------------------------------

class _Tokens:
    def __init__(self, text, line, col0):
        self.toks = []
        self.line = line
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ParseError(line, col0 + pos, f"unexpected character {text[pos]!r}")
            if m.lastgroup != "ws":
                self.toks.append((m.lastgroup, m.group(), col0 + pos))
            pos = m.end()
        self.i = 0
        self.end_col = col0 + len(text)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, self.end_col)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, kind, value=None, what=None):
        k, v, c = self.take()
        if k != kind or (value is not None and v != value):
            found = "end of line" if k is None else repr(v)
            raise ParseError(self.line, c, f"expected {what or value or kind}, found {found}")
        return v, c


def _parse_expr(ts, names):
    e = _parse_term(ts, names)
    while True:
        k, v, _ = ts.peek()
        if k == "op" and v in "+-":
            ts.take()
            r = _parse_term(ts, names)
            e = Add(e, r) if v == "+" else Sub(e, r)
        else:
            return e


def _scale_const(ts, what):
    k, v, c = ts.peek()
    sign = 1.0
    if k == "op" and v == "-":
        ts.take()
        sign = -1.0
        k, v, _ = ts.peek()
    if k != "const":
        raise ValidationError(f"line {ts.line}, col {c}: {what} requires a scale current")
    ts.take()
    s = sign * parse_current(v, ts.line, c)
    if not s > 0:
        raise ValidationError(f"line {ts.line}, col {c}: nonpositive scale {s:g} A")
    return s


def _parse_term(ts, names):
    e = _parse_factor(ts, names)
    while True:
        k, v, c = ts.peek()
        if k == "op" and v == "*":
            ts.take()
            r = _parse_factor(ts, names)
            k2, v2, c2 = ts.peek()
            if not (k2 == "op" and v2 == "/"):
                raise ValidationError(
                    f"line {ts.line}, col {c}: product requires a scale current")
            ts.take()
            e = Mul(e, r, _scale_const(ts, "product"))
        elif k == "op" and v == "/":
            ts.take()
            e = DivByConst(e, _scale_const(ts, "division"))
        else:
            return e


def _parse_factor(ts, names):
    k, v, c = ts.take()
    if k == "ident":
        if v not in names:
            raise ValidationError(f"line {ts.line}, col {c}: unresolved name {v!r}")
        return names[v](v)
    if k == "const":
        return Const(parse_current(v, ts.line, c))
    if k == "sq":
        # the trailing "/ const" parses as a division of the last term;
        # peel it off as the squarer's scale current
        x = _parse_expr(ts, names)
        if not isinstance(x, DivByConst):
            if isinstance(x, (Add, Sub)):
                raise ParseError(ts.line, c, "parenthesize a sum inside sq(): sq((a + b) / I)")
            raise ValidationError(f"line {ts.line}, col {c}: square requires a scale current")
        ts.expect("op", ")")
        return Square(x.x, x.scale)
    if k == "op" and v == "(":
        e = _parse_expr(ts, names)
        ts.expect("op", ")")
        return e
    if k == "op" and v == "-":
        x = _parse_factor(ts, names)
        if isinstance(x, Const):
            return Const(-x.value)
        return Neg(x)
    found = "end of line" if k is None else repr(v)
    raise ParseError(ts.line, c, f"expected a name, constant or '(', found {found}")


def parse_expr(text, states=(), inputs=(), line=1, col=1):
    """Parse a single right-hand side expression."""
    names = {n: StateRef for n in states}
    names.update({n: InputRef for n in inputs})
    ts = _Tokens(text, line, col)
    e = _parse_expr(ts, names)
    k, v, c = ts.peek()
    if k is not None:
        raise ParseError(line, c, f"unexpected {v!r} after expression")
    return e


# -- statements ---------------------------------------------------------------

def _kv(words, line, cols, keys):
    out = {}
    for w, c in zip(words, cols):
        if "=" not in w:
            raise ParseError(line, c, f"expected key=value, found {w!r}")
        k, v = w.split("=", 1)
        if k not in keys:
            raise ParseError(line, c, f"unknown key {k!r}")
        if k in out:
            raise ParseError(line, c, f"duplicate key {k!r}")
        out[k] = (v, c + len(k) + 1)
    missing = [k for k in keys if k not in out]
    return out, missing


def _parse_drive(kind, args, line, cols):
    def need(n):
        if len(args) != n:
            raise ParseError(line, cols[0] if cols else 1,
                             f"{kind} takes {n} argument(s), got {len(args)}")
    try:
        if kind == "constant":
            need(1)
            return DriveSpec.constant(parse_current(args[0], line, cols[0]))
        if kind == "step":
            need(2)
            return DriveSpec.step(parse_time(args[0], line, cols[0]),
                                  parse_current(args[1], line, cols[1]))
        if kind == "pulse":
            need(3)
            return DriveSpec.pulse(parse_time(args[0], line, cols[0]),
                                   parse_time(args[1], line, cols[1]),
                                   parse_current(args[2], line, cols[2]))
        if kind == "ramp":
            need(1)
            if not args[0].endswith("/s"):
                raise ParseError(line, cols[0], "ramp rate must be written as <current>/s")
            return DriveSpec.ramp(parse_current(args[0][:-2], line, cols[0]))
        if kind == "pwl":
            if not args:
                raise ParseError(line, 1, "pwl needs at least one point")
            pts = []
            for a, c in zip(args, cols):
                if ":" not in a:
                    raise ParseError(line, c, f"pwl point must be time:current, got {a!r}")
                t, v = a.split(":", 1)
                pts.append((parse_time(t, line, c), parse_current(v, line, c + len(t) + 1)))
            return DriveSpec.pwl(pts)
    except ValidationError as exc:
        raise ValidationError(f"line {line}: {exc}") from None
    raise ParseError(line, 1, f"unknown drive kind {kind!r}")


def _words(text):
    """Whitespace-separated words with their 1-based columns."""
    return [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", text)]


def parse(source: str) -> DynSystem:
    """Parse DSL text into a validated :class:`DynSystem`."""
    name = regime = None
    device_kw = {}
    unit = None
    states, inputs, eqs = [], [], []
    seen_line = 0
    for lineno, raw in enumerate(source.splitlines(), start=1):
        text = raw.split("#", 1)[0].rstrip()
        if not text.strip():
            continue
        seen_line = lineno
        words = _words(text)
        kw, kcol = words[0]
        rest = [w for w, _ in words[1:]]
        cols = [c for _, c in words[1:]]
        if kw == "system":
            if len(rest) != 1 or not _IDENT.match(rest[0]):
                raise ParseError(lineno, kcol, "expected 'system <name>'")
            if name is not None:
                raise ParseError(lineno, kcol, "duplicate system line")
            name = rest[0]
        elif kw == "regime":
            if len(rest) != 1 or rest[0] not in ("subthreshold", "strong_inversion"):
                raise ParseError(lineno, cols[0] if cols else kcol,
                                 "regime must be subthreshold or strong_inversion")
            regime = rest[0]
        elif kw == "device":
            for w, c in zip(rest, cols):
                if "=" not in w:
                    raise ParseError(lineno, c, f"expected key=value, found {w!r}")
                k, v = w.split("=", 1)
                try:
                    device_kw[k] = float(v)
                except ValueError:
                    raise ParseError(lineno, c + len(k) + 1, f"bad number {v!r}") from None
        elif kw == "unit":
            if len(rest) != 1:
                raise ParseError(lineno, kcol, "expected 'unit <current>'")
            unit = parse_current(rest[0], lineno, cols[0])
            if not unit > 0:
                raise ValidationError(f"line {lineno}: unit current must be positive")
        elif kw == "state":
            if not rest or not _IDENT.match(rest[0]):
                raise ParseError(lineno, cols[0] if cols else kcol, "expected a state name")
            kv, missing = _kv(rest[1:], lineno, cols[1:], ("tau", "idc", "init"))
            if missing:
                raise ParseError(lineno, kcol, f"state {rest[0]}: missing {', '.join(missing)}")
            tau = parse_time(kv["tau"][0], lineno, kv["tau"][1])
            idc = parse_current(kv["idc"][0], lineno, kv["idc"][1])
            init = parse_current(kv["init"][0], lineno, kv["init"][1])
            states.append(StateDecl(rest[0], tau, idc, init))
        elif kw == "input":
            if len(rest) < 2 or not _IDENT.match(rest[0]):
                raise ParseError(lineno, kcol, "expected 'input <name> <kind> <args>'")
            inputs.append((rest[0], _parse_drive(rest[1], rest[2:], lineno, cols[2:])))
        elif kw == "eq":
            m = re.match(r"\s*eq\s+([A-Za-z_][A-Za-z0-9_]*)\s*=", text)
            if not m:
                raise ParseError(lineno, kcol, "expected 'eq <state> = <expr>'")
            eqs.append((m.group(1), text[m.end():], m.end() + 1, lineno))
        else:
            raise ParseError(lineno, kcol, f"unknown statement {kw!r}")

    if name is None:
        raise ParseError(max(seen_line, 1), 1, "missing 'system <name>' line")
    regime = regime or "subthreshold"
    state_names = [s.name for s in states]
    input_names = [n for n, _ in inputs]
    equations = {}
    for sname, body, col, lineno in eqs:
        if sname in equations:
            raise ValidationError(f"line {lineno}: second equation for {sname!r}")
        if sname not in state_names:
            raise ValidationError(f"line {lineno}: unresolved name {sname!r}")
        equations[sname] = parse_expr(body, state_names, input_names, lineno, col)
    try:
        device = params_for(regime, **device_kw)
    except TypeError as exc:
        raise ValidationError(f"bad device parameter: {exc}") from None
    return DynSystem(name, tuple(states), tuple(inputs), equations, regime, device, unit)
