"""
Device equations for the NBDS main core
=======================================

Closed-form branch currents, dynamic-range limits and initial-value
presets for the four-transistor core in its two operating regimes:

- subthreshold (log-domain): exponential drain current with slope
  factors ``n_n``, ``n_p`` and leakage scales ``I_Sn``, ``I_Sp``;
- strong inversion: square-law drain current with gains ``k_n``,
  ``k_p`` and threshold ``V_th``.

All functions are pure and accept scalars or numpy arrays for the
capacitor voltage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import OutOfRange, ValidationError

# exponent arguments are clamped here before exponentiation
EXP_CLAMP = 200.0


@dataclass(frozen=True)
class SubthresholdParams:
    n_n: float = 1.3
    n_p: float = 1.2
    V_T: float = 0.026
    I_Sn: float = 1e-15
    I_Sp: float = 1e-15
    V_DD: float = 3.3
    V_b: float = 1.2

    regime = "subthreshold"

    def __post_init__(self):
        for name in ("n_n", "n_p", "V_T", "I_Sn", "I_Sp"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not 0 < self.V_b < self.V_DD:
            raise ValidationError("require 0 < V_b < V_DD")

    @property
    def nVT(self):
        """(n_n + n_p) * V_T, the voltage scale of the core."""
        return (self.n_n + self.n_p) * self.V_T

    @property
    def alpha(self):
        return self.n_p / self.n_n

    def replace(self, **kw):
        return replace(self, **kw)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class StrongInversionParams:
    k_n: float = 100e-6
    k_p: float = 100e-6
    V_th: float = 0.5
    V_DD: float = 3.3
    V_b: float = 3.3

    regime = "strong_inversion"

    def __post_init__(self):
        for name in ("k_n", "k_p", "V_th"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if not self.V_b > 2 * self.V_th:
            raise ValidationError("require V_b > 2 V_th")

    @property
    def beta_si(self):
        return math.sqrt(self.k_n / self.k_p)

    def replace(self, **kw):
        return replace(self, **kw)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def params_for(regime, **kw):
    """Default parameter record for ``regime`` with overrides."""
    if regime == "subthreshold":
        return SubthresholdParams(**kw)
    if regime == "strong_inversion":
        return StrongInversionParams(**kw)
    raise ValidationError(f"unknown regime {regime!r}")


# -- subthreshold -----------------------------------------------------------

def beta_sub(p: SubthresholdParams) -> float:
    """Effective leakage scale of the stacked pair.

    Reduces to ``I_Sn`` when ``I_Sn == I_Sp`` and to ``sqrt(I_Sn*I_Sp)``
    when the slope factors match.
    """
    expo = (p.n_n - p.n_p) / (2 * (p.n_n + p.n_p)) * math.log(p.I_Sn / p.I_Sp)
    return math.sqrt(p.I_Sn * p.I_Sp) * math.exp(expo)


def _clamped(arg):
    return np.clip(arg, -EXP_CLAMP, EXP_CLAMP)


def exp_saturated(p: SubthresholdParams, V_C):
    """True where evaluating the branch currents at ``V_C`` hits the clamp."""
    a = (p.V_b - np.asarray(V_C)) / p.nVT
    b = np.asarray(V_C) / p.nVT
    return (np.abs(a) > EXP_CLAMP) | (np.abs(b) > EXP_CLAMP)


def branch_currents_sub(p: SubthresholdParams, V_C):
    """Return ``(I_A, I_B)`` of the core at capacitor voltage ``V_C``.

    Exponents beyond +-200 are clamped (see :func:`exp_saturated`).
    """
    beta = beta_sub(p)
    nVT = p.nVT
    I_A = beta * np.exp(_clamped((p.V_b - V_C) / nVT))
    I_B = beta * np.exp(_clamped(V_C / nVT))
    if np.ndim(I_A) == 0:
        return float(I_A), float(I_B)
    return I_A, I_B


def i_out_sub(p: SubthresholdParams, V_C):
    I_A, I_B = branch_currents_sub(p, V_C)
    return I_B - I_A


def di_out_dvc_sub(p: SubthresholdParams, V_C):
    """Slope of the output current with respect to the capacitor voltage."""
    I_A, I_B = branch_currents_sub(p, V_C)
    return (I_A + I_B) / p.nVT


def v_c_min(p: SubthresholdParams) -> float:
    """Lowest capacitor voltage keeping M2 saturated."""
    a = p.alpha
    return ((1 + a) / 3 * 4 * p.V_T + (2 - a) / 3 * p.V_b
            + p.n_p * p.V_T * math.log(p.I_Sp / p.I_Sn))


def v_c_min_m4(p: SubthresholdParams) -> float:
    """Lowest capacitor voltage keeping M4 saturated."""
    a = p.alpha
    return (1 + a) / a * 4 * p.V_T + p.n_n * p.V_T * math.log(p.I_Sp / p.I_Sn)


def v_c_max(p: SubthresholdParams) -> float:
    return ((p.n_n + p.n_p) / (3 * p.n_p) * (p.V_DD - 4 * p.V_T)
            + p.n_n * p.V_T * math.log(p.I_Sp / p.I_Sn))


def gamma_sub(p: SubthresholdParams) -> float:
    # V_T-consistent form: the exponent is v_c_min's bias-free part over nVT
    a = p.alpha
    return math.exp((4.0 / 3.0 * (1 + a) + p.n_p * math.log(p.I_Sp / p.I_Sn))
                    / (p.n_n + p.n_p))


def i_out_min(p: SubthresholdParams) -> float:
    """Negative bound of the output dynamic range (output at ``v_c_min``)."""
    a = p.alpha
    g = gamma_sub(p)
    nVT = p.nVT
    return beta_sub(p) * (g * math.exp((2 - a) * p.V_b / (3 * nVT))
                          - math.exp((1 + a) * p.V_b / (3 * nVT)) / g)


def v_initial(p: SubthresholdParams, I_out_init):
    """Capacitor preset that makes the core output ``I_out_init``.

    Positive root of the quadratic in ``exp(V_C / nVT)``; exact inverse of
    :func:`i_out_sub`.
    """
    beta = beta_sub(p)
    nVT = p.nVT
    r = np.asarray(I_out_init, dtype=float) / beta
    c = math.exp(p.V_b / nVT)
    # numerically stable positive root for either sign of r
    disc = np.sqrt(r * r + 4 * c)
    zeta = np.where(r >= 0, 0.5 * (r + disc), 2 * c / (disc - r))
    V_C = nVT * np.log(zeta)
    return float(V_C) if np.ndim(V_C) == 0 else V_C


# -- strong inversion -------------------------------------------------------

def _overdrives_si(p: StrongInversionParams, V_C):
    s = 1.0 + p.beta_si
    od_a = (p.V_b - V_C - 2 * p.V_th) / s
    od_b = (V_C - 2 * p.V_th) / s
    return od_a, od_b


def device_off_si(p: StrongInversionParams, V_C):
    """True where either stack is below threshold (overdrive clamped to 0)."""
    od_a, od_b = _overdrives_si(p, np.asarray(V_C, dtype=float))
    return (od_a < 0) | (od_b < 0)


def branch_currents_si(p: StrongInversionParams, V_C):
    """Square-law branch currents ``(I_A, I_B)``.

    Both stacks share the gate drive ``V_b - V_C`` (resp. ``V_C``) minus
    two thresholds, split between the NMOS and PMOS overdrives in the
    ratio ``1 : sqrt(k_n/k_p)``.
    """
    od_a, od_b = _overdrives_si(p, V_C)
    I_A = p.k_n * np.maximum(od_a, 0.0) ** 2
    I_B = p.k_n * np.maximum(od_b, 0.0) ** 2
    if np.ndim(I_A) == 0:
        return float(I_A), float(I_B)
    return I_A, I_B


def i_out_si(p: StrongInversionParams, V_C):
    I_A, I_B = branch_currents_si(p, V_C)
    return I_B - I_A


def di_out_dvc_si(p: StrongInversionParams, V_C):
    I_A, I_B = branch_currents_si(p, V_C)
    return 2 * math.sqrt(p.k_n) / (1 + p.beta_si) * (np.sqrt(I_A) + np.sqrt(I_B))


def v_initial_si(p: StrongInversionParams, I_out_init: float, tol=1e-9) -> float:
    """Invert :func:`i_out_si` on ``[2 V_th, V_b - 2 V_th]``.

    Bisection to ``tol`` volts, then a few Newton steps on the analytic
    slope to bring the current error down to rounding level.
    """
    lo, hi = 2 * p.V_th, p.V_b - 2 * p.V_th
    f_lo = i_out_si(p, lo) - I_out_init
    f_hi = i_out_si(p, hi) - I_out_init
    if f_lo > 0 or f_hi < 0:
        raise OutOfRange(
            f"I_out_init={I_out_init:.6g} A outside "
            f"[{i_out_si(p, lo):.6g}, {i_out_si(p, hi):.6g}] A")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if i_out_si(p, mid) < I_out_init:
            lo = mid
        else:
            hi = mid
    v = 0.5 * (lo + hi)
    for _ in range(4):
        slope = di_out_dvc_si(p, v)
        if slope <= 0:
            break
        v_new = v - (i_out_si(p, v) - I_out_init) / slope
        if not (lo - tol <= v_new <= hi + tol):
            break
        v = v_new
    return float(v)


# -- regime dispatch --------------------------------------------------------

def branch_currents(p, V_C):
    if isinstance(p, SubthresholdParams):
        return branch_currents_sub(p, V_C)
    return branch_currents_si(p, V_C)


def i_out(p, V_C):
    I_A, I_B = branch_currents(p, V_C)
    return I_B - I_A


def operating_bounds(p):
    """Capacitor-voltage window used by the optional clipping model."""
    if isinstance(p, SubthresholdParams):
        return v_c_min(p), v_c_max(p)
    return 2 * p.V_th, p.V_b - 2 * p.V_th
