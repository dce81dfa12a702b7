"""Random small subthreshold systems for semantic-preservation checks."""
import numpy as np

from nbds.dsl import (Add, Const, DivByConst, DriveSpec, DynSystem, InputRef, Mul, Neg,
                      Square, StateDecl, StateRef, Sub)

nA = 1e-9


def _scale(rng):
    return float(rng.choice([0.5, 1.0, 2.0, 3.0])) * nA


def random_expr(rng, states, inputs, depth):
    if depth <= 1 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.55:
            return StateRef(str(rng.choice(states)))
        if r < 0.75 and inputs:
            return InputRef(str(rng.choice(inputs)))
        return Const(float(rng.choice([-1, 1]) * rng.uniform(0.1, 2.0)) * nA)
    sub = lambda: random_expr(rng, states, inputs, depth - 1)
    k = rng.integers(7)
    if k == 0:
        return Add(sub(), sub())
    if k == 1:
        return Sub(sub(), sub())
    if k == 2:
        return Neg(sub())
    if k in (3, 4):
        return Mul(sub(), sub(), _scale(rng))
    if k == 5:
        return Square(sub(), _scale(rng))
    return DivByConst(sub(), _scale(rng))


def random_system(rng, name="rand"):
    n = int(rng.integers(1, 4))
    states = [f"x{i}" for i in range(n)]
    inputs = ["u"] if rng.random() < 0.5 else []
    eqs = {s: random_expr(rng, states, inputs, int(rng.integers(1, 5))) for s in states}
    decls = tuple(StateDecl(s, 0.1, 1e-10, 0.0) for s in states)
    return DynSystem(name, decls, tuple((u, DriveSpec.constant(nA)) for u in inputs), eqs)


def random_rails(rng, value, unit=nA):
    """A non-canonical rail pair carrying ``value``."""
    common = rng.uniform(0.0, 2.0) * unit
    return max(value, 0.0) + common, max(-value, 0.0) + common


def magnitude(e, rails, inputs, unit=nA):
    """Componentwise size of ``e``: the expression evaluated on absolute values,
    with each state counted as the sum of its two rails.

    Rounding in a rail network is bounded by eps times this quantity, so it is
    the scale for relative-error checks (cancellation inside a squarer or a
    product is otherwise invisible in the output rails).
    """
    m = lambda x: magnitude(x, rails, inputs, unit)
    if isinstance(e, StateRef):
        r = rails[e.name]
        return r.pos + r.neg
    if isinstance(e, InputRef):
        return abs(inputs[e.name])
    if isinstance(e, Const):
        return abs(e.value)
    if isinstance(e, Neg):
        return m(e.x)
    if isinstance(e, (Add, Sub)):
        return m(e.l) + m(e.r)
    if isinstance(e, Mul):
        return m(e.l) * m(e.r) / e.scale
    if isinstance(e, Square):
        return m(e.x) ** 2 / e.scale
    if isinstance(e, DivByConst):
        return m(e.x) * unit / e.scale
    raise TypeError(type(e).__name__)


def preservation_error(sys, net, sv, iv, rails):
    """Largest componentwise relative error of the netlist F against eval_expr."""
    from nbds.synth import eval_netlist
    F = eval_netlist(net, rails, iv)
    worst = 0.0
    for k, r in sys.rhs(sv, iv).items():
        scale = max(magnitude(sys.equations[k], rails, iv, sys.unit_current),
                    F[k].pos + F[k].neg)
        if scale:
            worst = max(worst, abs(F[k].value() - r) / scale)
    return worst
