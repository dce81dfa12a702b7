"""Built-in case-study systems.

Time constants follow from the circuit tables: a core with capacitance
``C`` and bias ``I_dc`` realizes ``tau = C * nVT / I_dc`` in subthreshold,
so the printed capacitances and bias currents fix every ``tau`` once the
device is chosen.
"""
from __future__ import annotations

from ..device import StrongInversionParams, SubthresholdParams
from ..errors import ValidationError
from .ir import (Add, Const, DivByConst, DriveSpec, DynSystem, InputRef, Mul, Neg,
                 Square, StateDecl, StateRef, Sub)

# FHN scale currents (subthreshold, V <=> nA)
FHN_I_B = 3e-9
FHN_I_C = 0.7e-9
FHN_I_D = 0.8e-9
FHN_I_X = 1e-9
FHN_I_DC_V = 80e-12
FHN_I_DC_W = 6.4e-12
FHN_C = 800e-12
FHN_DRIVE = 0.6e-9

LORENZ_I_RHO = 28e-9
LORENZ_I_BETA = 8 / 3 * 1e-9
LORENZ_I_X = 1e-9
LORENZ_I_DC = {"x": 20e-9, "y": 2e-9, "z": 2e-9}
LORENZ_C = 400e-12

HOPF_I_MU = -0.5e-9
HOPF_I_X = 1e-9
HOPF_I_DC = 0.5e-9
HOPF_C = 500e-12
HOPF_INSIDE = (0.5e-9, 0.0)
HOPF_OUTSIDE = (0.9e-9, 0.0)

SYNAPSE_TAU = 0.05
SYNAPSE_C = 800e-12
COUPLING = 0.01
NETWORK_INITS = ((-1.2e-9, -0.6e-9), (-0.9e-9, -0.4e-9), (-0.6e-9, -0.2e-9))

FHN_SI_I_DC_V = 80e-9
FHN_SI_I_DC_W = 6.4e-9
FHN_SI_C = 800e-12

SUB_DEVICE = SubthresholdParams()


def _tau(C, I_dc, device=SUB_DEVICE):
    return C * device.nVT / I_dc


def fhn_equations(v, w, i_ext, I_b, I_c, I_d, I_x):
    """``F_v = v - v^3/(I_b I_x) - w + I_ext``, ``F_w = v + I_c - I_d w / I_x``."""
    V, W = StateRef(v), StateRef(w)
    cube = Mul(Square(V, I_x), V, I_b)
    F_v = Add(Sub(Sub(V, cube), W), i_ext)
    F_w = Sub(Add(V, Const(I_c)), Mul(Const(I_d), W, I_x))
    return F_v, F_w


def builtin_fhn(drive=None, init=(-1.2e-9, -0.6e-9), V_b=1.2):
    """FitzHugh-Nagumo neuron, ``V <=> nA``; tonic 0.6 nA drive by default."""
    device = SubthresholdParams(V_b=V_b)
    drive = DriveSpec.constant(FHN_DRIVE) if drive is None else drive
    F_v, F_w = fhn_equations("v", "w", InputRef("I_ext"),
                             FHN_I_B, FHN_I_C, FHN_I_D, FHN_I_X)
    states = (StateDecl("v", _tau(FHN_C, FHN_I_DC_V, device), FHN_I_DC_V, init[0]),
              StateDecl("w", _tau(FHN_C, FHN_I_DC_W, device), FHN_I_DC_W, init[1]))
    return DynSystem("fhn", states, (("I_ext", drive),), {"v": F_v, "w": F_w},
                     "subthreshold", device)


def builtin_lorenz(init=(1e-9, 1e-9, 1e-9), V_b=1.5):
    device = SubthresholdParams(V_b=V_b)
    x, y, z = StateRef("x"), StateRef("y"), StateRef("z")
    eqs = {
        "x": Sub(y, x),
        "y": Sub(Mul(x, Sub(Const(LORENZ_I_RHO), z), LORENZ_I_X), y),
        "z": Sub(Mul(x, y, LORENZ_I_X), Mul(Const(LORENZ_I_BETA), z, LORENZ_I_X)),
    }
    states = tuple(StateDecl(n, _tau(LORENZ_C, LORENZ_I_DC[n], device),
                             LORENZ_I_DC[n], v0)
                   for n, v0 in zip("xyz", init))
    return DynSystem("lorenz", states, (), eqs, "subthreshold", device)


def builtin_hopf(init_outside=False, init=None, V_b=1.2):
    """Subcritical Hopf oscillator (``I_mu < 0``).

    The unstable cycle sits at radius ``sqrt(-I_mu * I_x)`` (0.707 nA) and
    the stable one at ``I_x``.  ``init_outside`` starts between the two.
    """
    device = SubthresholdParams(V_b=V_b)
    if init is None:
        init = HOPF_OUTSIDE if init_outside else HOPF_INSIDE
    X, Y = StateRef("x"), StateRef("y")
    x2, y2 = Square(X, HOPF_I_X), Square(Y, HOPF_I_X)
    growth = Add(Add(x2, y2), Const(HOPF_I_MU))
    shell = Sub(Sub(Const(HOPF_I_X), x2), y2)
    eqs = {
        "x": Add(Neg(Y), Mul(Mul(X, growth, HOPF_I_X), shell, HOPF_I_X)),
        "y": Add(X, Mul(Mul(Y, growth, HOPF_I_X), shell, HOPF_I_X)),
    }
    tau = _tau(HOPF_C, HOPF_I_DC, device)
    states = (StateDecl("x", tau, HOPF_I_DC, init[0]),
              StateDecl("y", tau, HOPF_I_DC, init[1]))
    return DynSystem("hopf", states, (), eqs, "subthreshold", device)


def builtin_synapse(drive=None, tau=SYNAPSE_TAU):
    """First-order low-pass ``tau * x' = -x + I``; 1 nA step at t=0 by default."""
    drive = DriveSpec.step(0.0, 1e-9) if drive is None else drive
    I_dc = SYNAPSE_C * SUB_DEVICE.nVT / tau
    eqs = {"x": Sub(InputRef("I"), StateRef("x"))}
    return DynSystem("synapse", (StateDecl("x", tau, I_dc, 0.0),), (("I", drive),),
                     eqs, "subthreshold", SUB_DEVICE)


TOPOLOGIES = ("a", "b", "c")


def coupling_sign(topology, i, j):
    """Sign of the synapse from neuron ``j`` onto neuron ``i`` (0-based)."""
    if topology == "a":
        return 1
    if topology == "c":
        return -1
    if topology == "b":
        return 1 if {i, j} == {0, 1} else -1
    raise ValidationError(f"unknown network topology {topology!r}")


def builtin_network(topology="a", coupling=COUPLING, drives=None, inits=NETWORK_INITS):
    """Three FHN neurons coupled all-to-all through low-pass synapses.

    Synapse ``s<i><j>`` filters neuron ``j``'s membrane current,
    ``tau_s * s' = -s + v_j``, and feeds ``+-coupling * s`` into neuron ``i``.
    Topology ``a`` is all excitatory, ``c`` all inhibitory and ``b`` has
    excitatory links between neurons 1 and 2 only.
    """
    if topology not in TOPOLOGIES:
        raise ValidationError(f"unknown network topology {topology!r}")
    if not coupling >= 0:
        raise ValidationError("coupling strength must be non-negative")
    drives = drives or [DriveSpec.constant(FHN_DRIVE)] * 3
    syn_idc = SYNAPSE_C * SUB_DEVICE.nVT / SYNAPSE_TAU
    states, inputs, eqs = [], [], {}
    syn_states = []
    for i in range(3):
        n = i + 1
        i_in = InputRef(f"I{n}")
        for j in range(3):
            if j == i or coupling == 0:
                continue
            # x * I_unit / (I_unit / g) == g * x
            term = DivByConst(StateRef(f"s{n}{j + 1}"), 1e-9 / coupling)
            if coupling_sign(topology, i, j) > 0:
                i_in = Add(i_in, term)
            else:
                i_in = Sub(i_in, term)
        F_v, F_w = fhn_equations(f"v{n}", f"w{n}", i_in,
                                 FHN_I_B, FHN_I_C, FHN_I_D, FHN_I_X)
        eqs[f"v{n}"], eqs[f"w{n}"] = F_v, F_w
        states.append(StateDecl(f"v{n}", _tau(FHN_C, FHN_I_DC_V), FHN_I_DC_V, inits[i][0]))
        states.append(StateDecl(f"w{n}", _tau(FHN_C, FHN_I_DC_W), FHN_I_DC_W, inits[i][1]))
        inputs.append((f"I{n}", drives[i]))
        for j in range(3):
            if j != i and coupling != 0:
                name = f"s{n}{j + 1}"
                syn_states.append(StateDecl(name, SYNAPSE_TAU, syn_idc, 0.0))
                eqs[name] = Sub(StateRef(f"v{j + 1}"), StateRef(name))
    return DynSystem(f"network_{topology}", tuple(states + syn_states), tuple(inputs),
                     eqs, "subthreshold", SUB_DEVICE)


def builtin_fhn_si(drive=None, init=(-1.2e-6, -0.6e-6), device=None):
    """Strong-inversion FHN, ``V <=> uA``.

    ``tau_v`` is chosen so the paper mapping constant with the default
    square-law device lands on an 800 pF capacitor.
    """
    device = device or StrongInversionParams()
    drive = DriveSpec.constant(0.6e-6) if drive is None else drive
    F_v, F_w = fhn_equations("v", "w", InputRef("I_ext"),
                             3e-6, 0.7e-6, 0.8e-6, 1e-6)
    d = 2.0 + device.beta_si
    k = device.k_n ** 0.5
    tau_v = FHN_SI_C * d / (2 * k * FHN_SI_I_DC_V)
    tau_w = FHN_SI_C * d / (2 * k * FHN_SI_I_DC_W)
    states = (StateDecl("v", tau_v, FHN_SI_I_DC_V, init[0]),
              StateDecl("w", tau_w, FHN_SI_I_DC_W, init[1]))
    return DynSystem("fhn_si", states, (("I_ext", drive),), {"v": F_v, "w": F_w},
                     "strong_inversion", device)


BUILTINS = {
    "fhn": (builtin_fhn, "FitzHugh-Nagumo neuron, subthreshold, 2 states"),
    "lorenz": (builtin_lorenz, "Lorenz attractor, subthreshold, 3 states"),
    "hopf": (builtin_hopf, "subcritical Hopf oscillator (bistable), subthreshold, 2 states"),
    "synapse": (builtin_synapse, "first-order synapse low-pass filter, 1 state"),
    "network-a": (lambda **kw: builtin_network("a", **kw),
                  "3 FHN neurons, all-excitatory synapses (synchronizes)"),
    "network-b": (lambda **kw: builtin_network("b", **kw),
                  "3 FHN neurons, 1<->2 excitatory, links to/from 3 inhibitory"),
    "network-c": (lambda **kw: builtin_network("c", **kw),
                  "3 FHN neurons, all-inhibitory synapses (splay state)"),
    "fhn-si": (builtin_fhn_si, "FitzHugh-Nagumo neuron, strong inversion, 2 states"),
}


def builtin(name, **kw):
    try:
        factory = BUILTINS[name][0]
    except KeyError:
        raise ValidationError(
            f"unknown system {name!r}; choose from {', '.join(BUILTINS)}") from None
    return factory(**kw)
