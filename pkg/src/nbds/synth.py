"""
Synthesis back end
==================

Lowers a :class:`~nbds.dsl.ir.DynSystem` to a netlist of NBDS cores,
translinear blocks, splitters and current mirrors, evaluates netlists
rail by rail, and serializes them to JSON.

Signals are carried as KCL sums of source endpoints on two rails.
Addition and subtraction therefore cost nothing: they concatenate (or
cross) the rail terms.  Every block input port and every core's
``I_Cin`` multiplier is a summing node fed by nets; a source endpoint
feeding more than one node is replicated by a unity-gain MIRROR per extra
consumer.

Endpoint names::

    core:<s>.pos / core:<s>.neg    core rails (I_B, I_A)
    core:<s>.F.pos / .F.neg        I_Cin+ / I_Cin- multiplier inputs
    core:<s>.den                   root-square denominator (strong inversion)
    in:<name>                      raw external input (signed)
    const:<k>                      bias current source
    b<k>.<port>                    block ports (out, out.pos, x.neg, ...)
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from graphlib import TopologicalSorter

from . import blocks as tl
from .blocks import BilateralSignal
from .core import STRONG_INVERSION, SUBTHRESHOLD, CoreMapping
from .device import params_for
from .dsl.ir import (Add, Const, DivByConst, DriveSpec, DynSystem, InputRef, Mul, Neg,
                     Square, StateRef, Sub, walk)
from .errors import LoweringError, ValidationError

SCHEMA = "nbds-netlist/1"

BLOCK_KINDS = ("MULT1P", "MULT1N", "SQ1", "SQ2", "MULT2", "MULT3", "SPLIT",
               "ROOTSQ", "MULTCORE", "BMULT", "MIRROR")

MENUS = {
    SUBTHRESHOLD: frozenset({"MULT1P", "MULT1N", "SQ1", "SQ2", "MULT2", "MULT3",
                             "SPLIT", "MIRROR"}),
    STRONG_INVERSION: frozenset({"ROOTSQ", "MULTCORE", "BMULT", "SPLIT", "MIRROR"}),
}

# census key order used in summaries
CENSUS_ORDER = ("cores", "sq1", "sq2", "mult3", "mult2", "mult1p", "mult1n",
                "bmult", "multcore", "rootsq")


# -- sign classification ------------------------------------------------------

SINGLE = "single_sided"
BILATERAL = "bilateral"


@dataclass(frozen=True)
class SignClass:
    cls: str
    polarity: int = 1  # +1 sourced / -1 sunk; meaningful for single-sided only

    @property
    def single(self):
        return self.cls == SINGLE


def _classify_node(e, sub):
    if isinstance(e, (StateRef, InputRef)):
        return SignClass(BILATERAL)
    if isinstance(e, Const):
        return SignClass(SINGLE, -1 if e.value < 0 else 1)
    if isinstance(e, Neg):
        c = sub(e.x)
        return SignClass(SINGLE, -c.polarity) if c.single else c
    if isinstance(e, (Add, Sub)):
        return SignClass(BILATERAL)
    if isinstance(e, Mul):
        a, b = sub(e.l), sub(e.r)
        if a.single and b.single:
            return SignClass(SINGLE, a.polarity * b.polarity)
        return SignClass(BILATERAL)
    if isinstance(e, Square):
        return SignClass(SINGLE, 1)
    if isinstance(e, DivByConst):
        return sub(e.x)
    raise LoweringError(f"cannot classify {type(e).__name__}")


def classify(e) -> dict:
    """Bottom-up sign class of every node of ``e`` (keyed by node)."""
    out = {}
    for node in walk(e):
        if node not in out:
            out[node] = _classify_node(node, out.__getitem__)
    return out


# -- netlist data -------------------------------------------------------------

@dataclass(frozen=True)
class CoreSpec:
    name: str
    mapping: CoreMapping
    init: float


@dataclass(frozen=True)
class Block:
    id: str
    kind: str
    params: tuple = ()  # sorted (name, value) pairs

    def param(self, name):
        return dict(self.params)[name]


@dataclass(frozen=True)
class Net:
    src: str
    dst: str
    role: str = "signal"  # "sense" for a mirror tapping its source


@dataclass(frozen=True)
class Netlist:
    system: str
    regime: str
    unit_current: float
    mapping_constant: str
    cores: tuple
    inputs: tuple
    consts: tuple
    blocks: tuple
    nets: tuple
    order: tuple = ()
    _plan: dict = field(default=None, compare=False, repr=False, hash=False)

    @property
    def state_names(self):
        return [c.name for c in self.cores]

    @property
    def input_names(self):
        return [n for n, _ in self.inputs]

    def core(self, name):
        for c in self.cores:
            if c.name == name:
                return c
        raise KeyError(name)

    def block(self, bid):
        for b in self.blocks:
            if b.id == bid:
                return b
        raise KeyError(bid)

    def census(self):
        counts = {"cores": len(self.cores)}
        for b in self.blocks:
            k = b.kind.lower()
            counts[k] = counts.get(k, 0) + 1
        return counts

    def summary(self):
        """Block census, e.g. ``cores=2 sq2=1 mult2=2``."""
        c = self.census()
        return " ".join(f"{k}={c[k]}" for k in CENSUS_ORDER if c.get(k))

    def wiring_summary(self):
        c = self.census()
        return f"split={c.get('split', 0)} mirror={c.get('mirror', 0)} nets={len(self.nets)}"

    def with_devices(self, devices):
        """Copy with per-core device records replaced (``devices[i]`` for core i)."""
        cores = tuple(CoreSpec(c.name, c.mapping.with_device(d), c.init)
                      for c, d in zip(self.cores, devices))
        return _replace(self, cores=cores)

    def with_capacitance_scale(self, k):
        """Copy with every core capacitor scaled by ``k`` (a deliberate mis-sizing)."""
        cores = tuple(CoreSpec(c.name, _replace_mapping(c.mapping, C=c.mapping.C * k), c.init)
                      for c in self.cores)
        return _replace(self, cores=cores)

    def with_drives(self, **drives):
        inputs = tuple((n, drives.get(n, d)) for n, d in self.inputs)
        return _replace(self, inputs=inputs)


def _replace(n: Netlist, **kw):
    d = {k: getattr(n, k) for k in ("system", "regime", "unit_current", "mapping_constant",
                                    "cores", "inputs", "consts", "blocks", "nets", "order")}
    d.update(kw)
    return Netlist(**d)


def _replace_mapping(m, **kw):
    from dataclasses import replace
    return replace(m, **kw)


# -- lowering -----------------------------------------------------------------

@dataclass(frozen=True)
class _Sig:
    pos: tuple
    neg: tuple
    cls: SignClass

    def swapped(self):
        pol = SignClass(self.cls.cls, -self.cls.polarity)
        return _Sig(self.neg, self.pos, pol if self.cls.single else self.cls)

    @property
    def rail(self):
        """Terms of a single-sided signal's only rail."""
        return self.pos if self.cls.polarity > 0 else self.neg


class _Lowerer:
    def __init__(self, sys: DynSystem, menu):
        self.sys = sys
        self.menu = menu
        self.blocks = []
        self.nets = []
        self.consts = []
        self.memo = {}
        self.splits = {}

    # bookkeeping
    def block(self, kind, **params):
        if kind not in self.menu:
            raise LoweringError(
                f"{self.sys.name}: needs a {kind} block, absent from the "
                f"{self.sys.regime} menu")
        bid = f"b{len(self.blocks)}"
        self.blocks.append(Block(bid, kind, tuple(sorted(params.items()))))
        return bid

    def connect(self, terms, dst):
        for src in terms:
            self.nets.append(Net(src, dst))

    def const(self, value):
        cid = f"const:k{len(self.consts)}"
        self.consts.append((cid, abs(value)))
        return cid

    # expression lowering
    def lower(self, e) -> _Sig:
        if isinstance(e, Const):
            pol = -1 if e.value < 0 else 1
            ep = (self.const(e.value),) if e.value != 0 else ()
            return _Sig(ep if pol > 0 else (), ep if pol < 0 else (), SignClass(SINGLE, pol))
        if isinstance(e, StateRef):
            return _Sig((f"core:{e.name}.pos",), (f"core:{e.name}.neg",), SignClass(BILATERAL))
        if e in self.memo:
            return self.memo[e]
        sig = self._lower(e)
        self.memo[e] = sig
        return sig

    def _lower(self, e):
        if isinstance(e, InputRef):
            bid = self.block("SPLIT")
            self.nets.append(Net(f"in:{e.name}", f"{bid}.in"))
            return _Sig((f"{bid}.out.pos",), (f"{bid}.out.neg",), SignClass(BILATERAL))
        if isinstance(e, Neg):
            return self.lower(e.x).swapped()
        if isinstance(e, (Add, Sub)):
            a = self.lower(e.l)
            b = self.lower(e.r)
            if isinstance(e, Sub):
                b = b.swapped()
            return _Sig(a.pos + b.pos, a.neg + b.neg, SignClass(BILATERAL))
        folded = _fold(e, self.sys.unit_current)
        if folded is not None:
            return self.lower(folded)
        if isinstance(e, DivByConst):
            return self.gain(self.lower(e.x), self.sys.unit_current / e.scale)
        if isinstance(e, Square):
            return self.square(e)
        if isinstance(e, Mul):
            return self.mul(e)
        raise LoweringError(f"no lowering for {type(e).__name__}")

    def gain(self, x: _Sig, g):
        """Ratioed mirror; one per rail in use."""
        bid = self.block("MIRROR", gain=float(g))
        if x.cls.single:
            port = "pos" if x.cls.polarity > 0 else "neg"
            self.connect(x.rail, f"{bid}.in.{port}")
            out = (f"{bid}.out.{port}",)
            return _Sig(out if port == "pos" else (), out if port == "neg" else (), x.cls)
        self.connect(x.pos, f"{bid}.in.pos")
        self.connect(x.neg, f"{bid}.in.neg")
        return _Sig((f"{bid}.out.pos",), (f"{bid}.out.neg",), x.cls)

    def _bilateral_inputs(self, bid, port, x: _Sig):
        self.connect(x.pos, f"{bid}.{port}.pos")
        self.connect(x.neg, f"{bid}.{port}.neg")

    def square(self, e: Square):
        x = self.lower(e.x)
        plus = SignClass(SINGLE, 1)
        if self.sys.regime == STRONG_INVERSION:
            bid = self.block("BMULT", I_b=2.0 * e.scale)
            self._bilateral_inputs(bid, "x", x)
            self._bilateral_inputs(bid, "y", x)
            # x*x has rails (x+^2 + x-^2, 2 x+ x-); value is non-negative
            return _Sig((f"{bid}.out.pos",), (f"{bid}.out.neg",), SignClass(BILATERAL))
        if x.cls.single:
            bid = self.block("SQ1", I_X=e.scale)
            self.connect(x.rail, f"{bid}.x")
        else:
            bid = self.block("SQ2", I_X=e.scale)
            self._bilateral_inputs(bid, "x", x)
        return _Sig((f"{bid}.out",), (), plus)

    def mul(self, e: Mul):
        a, b = self.lower(e.l), self.lower(e.r)
        if self.sys.regime == STRONG_INVERSION:
            for c, other in ((e.l, b), (e.r, a)):
                if isinstance(c, Const):
                    g = abs(c.value) / e.scale
                    out = self.gain(other, g)
                    return out.swapped() if c.value < 0 else out
            bid = self.block("BMULT", I_b=2.0 * e.scale)
            self._bilateral_inputs(bid, "x", a)
            self._bilateral_inputs(bid, "y", b)
            return _Sig((f"{bid}.out.pos",), (f"{bid}.out.neg",), SignClass(BILATERAL))
        if a.cls.single and b.cls.single:
            pol = a.cls.polarity * b.cls.polarity
            bid = self.block("MULT1P" if pol > 0 else "MULT1N", I3=e.scale)
            self.connect(a.rail, f"{bid}.a")
            self.connect(b.rail, f"{bid}.b")
            out = (f"{bid}.out",)
            return _Sig(out if pol > 0 else (), out if pol < 0 else (), SignClass(SINGLE, pol))
        if a.cls.single or b.cls.single:
            c, x = (a, b) if a.cls.single else (b, a)
            bid = self.block("MULT2", I_X=e.scale)
            self.connect(c.rail, f"{bid}.c")
            self._bilateral_inputs(bid, "x", x)
            out = _Sig((f"{bid}.out.pos",), (f"{bid}.out.neg",), SignClass(BILATERAL))
            return out if c.cls.polarity > 0 else out.swapped()
        bid = self.block("MULT3", I_dc=e.scale)
        self._bilateral_inputs(bid, "x", a)
        self._bilateral_inputs(bid, "y", b)
        return _Sig((f"{bid}.out.pos",), (f"{bid}.out.neg",), SignClass(BILATERAL))


def _fold(e, unit):
    """Constant-fold products and gains whose operands are all constants."""
    if isinstance(e, Mul) and isinstance(e.l, Const) and isinstance(e.r, Const):
        return Const(e.l.value * e.r.value / e.scale)
    if isinstance(e, Square) and isinstance(e.x, Const):
        return Const(e.x.value ** 2 / e.scale)
    if isinstance(e, DivByConst) and isinstance(e.x, Const):
        return Const(e.x.value * unit / e.scale)
    return None


def _fan_out(nets, blocks):
    """Give every source endpoint exactly one consumer; copies come from mirrors."""
    by_src = {}
    for i, n in enumerate(nets):
        if n.src.startswith(("const:", "in:")):
            continue
        by_src.setdefault(n.src, []).append(i)
    nets = list(nets)
    blocks = list(blocks)
    for src, idx in by_src.items():
        for i in idx[1:]:
            bid = f"b{len(blocks)}"
            blocks.append(Block(bid, "MIRROR", (("gain", 1.0),)))
            nets.append(Net(src, f"{bid}.in.pos", "sense"))
            nets[i] = Net(f"{bid}.out.pos", nets[i].dst)
    return nets, blocks


def _split_consts(nets, consts):
    """Each bias source drives one node; reused constants get their own source."""
    values = dict(consts)
    seen = set()
    consts = list(consts)
    out = []
    for n in nets:
        if n.src.startswith("const:"):
            if n.src in seen:
                cid = f"const:k{len(consts)}"
                consts.append((cid, values[n.src]))
                n = Net(cid, n.dst, n.role)
            seen.add(n.src)
        out.append(n)
    return out, consts


def _block_of(endpoint):
    head = endpoint.split(".", 1)[0]
    return head if head.startswith("b") and head[1:].isdigit() else None


def _topo_order(blocks, nets):
    ts = TopologicalSorter({b.id: set() for b in blocks})
    for n in nets:
        s, d = _block_of(n.src), _block_of(n.dst)
        if s and d:
            ts.add(d, s)
    # static_order is deterministic given insertion order
    return tuple(ts.static_order())


def lower(sys: DynSystem, mapping_constant="paper", menu=None) -> Netlist:
    """Compile a system to a netlist for its regime's block menu."""
    menu = MENUS[sys.regime] if menu is None else frozenset(menu)
    lw = _Lowerer(sys, menu)
    for s in sys.states:
        F = lw.lower(sys.equations[s.name])
        lw.connect(F.pos, f"core:{s.name}.F.pos")
        lw.connect(F.neg, f"core:{s.name}.F.neg")
    if sys.regime == STRONG_INVERSION:
        # I_Cin denominators: sqrt(I_A) + sqrt(I_B) from two root-square blocks
        for s in sys.states:
            for rail in ("neg", "pos"):
                bid = lw.block("ROOTSQ", I_b=s.I_dc)
                lw.nets.append(Net(f"core:{s.name}.{rail}", f"{bid}.in"))
                lw.nets.append(Net(f"{bid}.out", f"core:{s.name}.den"))
    nets, blocks = _fan_out(lw.nets, lw.blocks)
    nets, consts = _split_consts(nets, lw.consts)
    cores = tuple(CoreSpec(s.name, CoreMapping.build(s.tau, s.I_dc, sys.device,
                                                     mapping_constant), s.init)
                  for s in sys.states)
    order = _topo_order(blocks, nets)
    return Netlist(sys.name, sys.regime, sys.unit_current, mapping_constant, cores,
                   tuple(sys.inputs), tuple(consts), tuple(blocks), tuple(nets), order)


# -- evaluation -------------------------------------------------------------------

def _plan(n: Netlist):
    if n._plan is None:
        sinks = {}
        for net in n.nets:
            sinks.setdefault(net.dst, []).append(net.src)
        object.__setattr__(n, "_plan", {"sinks": sinks, "blocks": {b.id: b for b in n.blocks}})
    return n._plan


def _port(values, sinks, name):
    return sum((values[s] for s in sinks.get(name, ())), 0.0)


def _bil(values, sinks, name):
    return BilateralSignal(_port(values, sinks, name + ".pos"), _port(values, sinks, name + ".neg"))


def eval_block(b: Block, get):
    """Outputs of one block; ``get(port)`` returns the summed port current."""
    k = b.kind
    p = dict(b.params)
    bil = lambda name: BilateralSignal(get(name + ".pos"), get(name + ".neg"))
    if k in ("MULT1P", "MULT1N"):
        return {"out": tl.mult_type1(get("a"), get("b"), p["I3"])}
    if k == "SQ1":
        return {"out": tl.squarer_type1(get("x"), p["I_X"])}
    if k == "SQ2":
        return {"out": tl.squarer_type2(bil("x"), p["I_X"])}
    if k == "MULT2":
        r = tl.mult_type2(get("c"), bil("x"), p["I_X"])
        return {"out.pos": r.pos, "out.neg": r.neg}
    if k == "MULT3":
        r = tl.mult_type3(bil("x"), bil("y"), p["I_dc"])
        return {"out.pos": r.pos, "out.neg": r.neg}
    if k == "BMULT":
        r = tl.bilateral_mult_si(bil("x"), bil("y"), p["I_b"])
        return {"out.pos": r.pos, "out.neg": r.neg}
    if k == "SPLIT":
        r = tl.splitter(get("in"))
        return {"out.pos": r.pos, "out.neg": r.neg}
    if k == "MIRROR":
        g = p["gain"]
        return {"out.pos": g * get("in.pos"), "out.neg": g * get("in.neg")}
    if k == "ROOTSQ":
        return {"out": tl.root_square(get("in"), p["I_b"])}
    if k == "MULTCORE":
        return {"out": tl.mult_core(get("in"), p["I_b"])}
    raise LoweringError(f"unknown block kind {k!r}")


def eval_netlist(n: Netlist, core_readouts, input_values=None, extras=False):
    """One topological sweep from core rails and inputs to every F's rails.

    ``core_readouts`` maps state name to the core's output rails
    (``BilateralSignal(I_B, I_A)``).  Returns ``{state: BilateralSignal}``;
    with ``extras`` also the dict of every endpoint current.
    """
    plan = _plan(n)
    sinks = plan["sinks"]
    values = dict(n.consts)
    input_values = input_values or {}
    for name in n.input_names:
        values[f"in:{name}"] = input_values[name]
    for c in n.cores:
        r = core_readouts[c.name]
        values[f"core:{c.name}.pos"] = r.pos
        values[f"core:{c.name}.neg"] = r.neg
    blocks = plan["blocks"]
    for bid in n.order:
        b = blocks[bid]
        outs = eval_block(b, lambda port: _port(values, sinks, f"{bid}.{port}"))
        for port, v in outs.items():
            values[f"{bid}.{port}"] = v
    F = {c.name: _bil(values, sinks, f"core:{c.name}.F") for c in n.cores}
    if extras:
        for c in n.cores:
            if f"core:{c.name}.den" in sinks:
                values[f"core:{c.name}.den"] = _port(values, sinks, f"core:{c.name}.den")
        return F, values
    return F


# -- serialization ----------------------------------------------------------------

def _core_json(c: CoreSpec):
    m = c.mapping
    return {"name": c.name, "tau": m.tau, "C": m.C, "idc": m.I_dc, "init": c.init,
            "regime": m.regime, "mapping_constant": m.mapping_constant,
            "device": m.device.as_dict()}


def to_json(n: Netlist) -> dict:
    return {
        "schema": SCHEMA,
        "system": n.system,
        "regime": n.regime,
        "unit_current": n.unit_current,
        "mapping_constant": n.mapping_constant,
        "cores": [_core_json(c) for c in n.cores],
        "inputs": [{"name": name, "drive": d.to_json()} for name, d in n.inputs],
        "consts": [{"id": cid, "value": v} for cid, v in n.consts],
        "blocks": [{"id": b.id, "kind": b.kind, "params": dict(b.params)} for b in n.blocks],
        "nets": [{"src": x.src, "dst": x.dst, "role": x.role} for x in n.nets],
        "order": list(n.order),
        "census": n.census(),
    }


def emit(n: Netlist) -> str:
    """Deterministic JSON text for a netlist."""
    return json.dumps(to_json(n), sort_keys=True, indent=2) + "\n"


def load_netlist(text: str) -> Netlist:
    d = json.loads(text)
    if d.get("schema") != SCHEMA:
        raise ValidationError(f"unsupported netlist schema {d.get('schema')!r}")
    cores = []
    for c in d["cores"]:
        dev = params_for(c["regime"], **c["device"])
        m = CoreMapping(c["regime"], c["tau"], c["C"], c["idc"], dev, c["mapping_constant"])
        cores.append(CoreSpec(c["name"], m, c["init"]))
    blocks = tuple(Block(b["id"], b["kind"], tuple(sorted(b["params"].items())))
                   for b in d["blocks"])
    for b in blocks:
        if b.kind not in BLOCK_KINDS:
            raise ValidationError(f"unknown block kind {b.kind!r}")
    return Netlist(d["system"], d["regime"], d["unit_current"], d["mapping_constant"],
                   tuple(cores),
                   tuple((i["name"], DriveSpec.from_json(i["drive"])) for i in d["inputs"]),
                   tuple((k["id"], k["value"]) for k in d["consts"]),
                   blocks,
                   tuple(Net(x["src"], x["dst"], x["role"]) for x in d["nets"]),
                   tuple(d["order"]))
