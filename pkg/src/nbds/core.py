"""
The per-state NBDS core: capacitor state, mapping and initialization.

A state variable ``I_out`` obeying ``tau * dI_out/dt = F`` is realized by
a core whose capacitor integrates ``I_Cin``.  Choosing ``C / I_dc`` per
regime and dividing ``F * I_dc`` by the core's own branch currents makes
the capacitor dynamics reproduce the target system exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import device as dev
from .blocks import BilateralSignal
from .device import StrongInversionParams, SubthresholdParams
from .errors import DenominatorUnderflow, OutOfRange, ValidationError

SUBTHRESHOLD = "subthreshold"
STRONG_INVERSION = "strong_inversion"
REGIMES = (SUBTHRESHOLD, STRONG_INVERSION)

# three decades below the femtoampere leakage scale
DENOMINATOR_FLOOR = 1e-18


def regime_of(device):
    if isinstance(device, SubthresholdParams):
        return SUBTHRESHOLD
    if isinstance(device, StrongInversionParams):
        return STRONG_INVERSION
    raise ValidationError(f"not a device parameter record: {device!r}")


def mapping_denominator(device, mapping_constant="paper"):
    """Divisor ``d`` in ``C / I_dc = tau * g / d`` for the regime.

    Subthreshold: ``C / I_dc = tau / nVT``.  Strong inversion:
    ``C / I_dc = 2 tau sqrt(k_n) / d`` with ``d = 2 + beta_si`` (paper
    constant) or ``d = 1 + beta_si`` (exact for the closed-form core).
    """
    if isinstance(device, SubthresholdParams):
        return device.nVT
    if mapping_constant == "paper":
        return 2.0 + device.beta_si
    if mapping_constant == "derived":
        return 1.0 + device.beta_si
    raise ValidationError(f"unknown mapping constant {mapping_constant!r}")


def solve_capacitor(tau, I_dc, device, mapping_constant="paper"):
    """Capacitance realizing time constant ``tau`` with bias ``I_dc``."""
    if not (tau > 0 and I_dc > 0):
        raise ValidationError("tau and I_dc must be positive")
    if isinstance(device, SubthresholdParams):
        return tau * I_dc / device.nVT
    d = mapping_denominator(device, mapping_constant)
    return 2.0 * tau * math.sqrt(device.k_n) * I_dc / d


def time_rescale(device, mapping_constant):
    """Circuit-to-math time factor; 1 unless the paper constant is used in SI.

    With the paper constant the circuit runs ``(2+b)/(1+b)`` times faster,
    so ``circuit(t * r) == math(t)`` with ``r = (1+b)/(2+b)``.
    """
    if isinstance(device, SubthresholdParams) or mapping_constant == "derived":
        return 1.0
    b = device.beta_si
    return (1.0 + b) / (2.0 + b)


@dataclass(frozen=True)
class CoreMapping:
    regime: str
    tau: float
    C: float
    I_dc: float
    device: object
    mapping_constant: str = "paper"

    @classmethod
    def build(cls, tau, I_dc, device, mapping_constant="paper"):
        C = solve_capacitor(tau, I_dc, device, mapping_constant)
        return cls(regime_of(device), tau, C, I_dc, device, mapping_constant)

    def ratio(self):
        return self.C / self.I_dc

    def with_device(self, device):
        return replace(self, device=device)


@dataclass
class CoreState:
    V_C: float
    saturation_flag: bool = False


def compute_icin(F_rails: BilateralSignal, I_A, I_B, I_dc, regime=SUBTHRESHOLD):
    """Capacitor input current from the F rails and the core's branch currents.

    The positive and negative rails go through separate multipliers
    (PMOS source / NMOS sink) and the results are differenced at the
    capacitor node.
    """
    if regime == SUBTHRESHOLD:
        den = I_A + I_B
    else:
        den = math.sqrt(I_A) + math.sqrt(I_B)
    if den < DENOMINATOR_FLOOR:
        raise DenominatorUnderflow(
            f"I_Cin denominator {den:.3g} below {DENOMINATOR_FLOOR:g} "
            f"(I_A={I_A:.3g} A, I_B={I_B:.3g} A)")
    return F_rails.pos * I_dc / den - F_rails.neg * I_dc / den


def core_derivative(state: CoreState, I_Cin, C, bounds=None):
    """``dV_C/dt``; with ``bounds`` set, outward motion at a bound is clamped."""
    dv = I_Cin / C
    if bounds is not None:
        lo, hi = bounds
        if (state.V_C <= lo and dv < 0) or (state.V_C >= hi and dv > 0):
            state.saturation_flag = True
            return 0.0
    return dv


def init_core(device, I_out_init) -> CoreState:
    """Preset the capacitor so the core starts at ``I_out_init``."""
    if isinstance(device, SubthresholdParams):
        v = dev.v_initial(device, I_out_init)
        if not (0.0 <= v <= device.V_DD):
            raise OutOfRange(
                f"I_out_init={I_out_init:.6g} A needs V_C={v:.4g} V outside "
                f"[0, {device.V_DD}] V")
        return CoreState(v)
    return CoreState(dev.v_initial_si(device, I_out_init))


def read_out(state: CoreState, device, regime=None):
    """Return ``(I_A, I_B, I_out, rails)`` with rails ``(I_B, I_A)``."""
    I_A, I_B = dev.branch_currents(device, state.V_C)
    return I_A, I_B, I_B - I_A, BilateralSignal(I_B, I_A)
