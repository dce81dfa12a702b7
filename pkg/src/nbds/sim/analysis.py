"""Waveform comparison and oscillation measurements."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import NoOscillation, ValidationError

DIVERGENCE_THRESHOLD = 1e-9  # 1 nA
HYSTERESIS = 0.1


@dataclass
class Metrics:
    rmse: float = math.nan
    nrmse: float = math.nan
    peak_to_peak: float = math.nan
    period: float = math.nan
    spike_count: int = 0
    phase_offsets: dict = field(default_factory=dict)
    divergence_time: float = math.nan
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.nrmse < 0:
            raise ValidationError("nrmse must be non-negative")
        if self.period <= 0:
            raise ValidationError("period must be positive when defined")


def _aligned(a, b, state):
    """Trace of ``a`` and of ``b`` resampled onto ``a``'s time grid.

    When the grids differ only the common time span is compared.
    """
    xa = a[state]
    if len(a.times) == len(b.times) and np.array_equal(a.times, b.times):
        return xa, b[state]
    # tolerate rounding at the span ends of rescaled grids
    slack = 1e-9 * (b.times[-1] - b.times[0])
    m = (a.times >= b.times[0] - slack) & (a.times <= b.times[-1] + slack)
    if not np.any(m):
        raise ValidationError("waveforms do not overlap in time")
    return xa[m], np.interp(a.times[m], b.times, b[state])


def rmse(a, b, state) -> float:
    """Root-mean-square difference of ``a`` and the reference ``b``."""
    xa, xb = _aligned(a, b, state)
    return float(np.sqrt(np.mean((xa - xb) ** 2)))


def nrmse(a, b, state) -> float:
    """RMSE normalized by the range of the reference waveform ``b``."""
    _, xb = _aligned(a, b, state)
    rng = float(np.max(xb) - np.min(xb))
    e = rmse(a, b, state)
    if rng == 0:
        return 0.0 if e == 0 else math.inf
    return e / rng


def _tail(w, state, fraction):
    t = w.times
    m = t >= t[0] + (1.0 - fraction) * (t[-1] - t[0])
    return t[m], w[state][m]


def _rising(t, x, level):
    """Linearly interpolated times where ``x`` crosses ``level`` upward."""
    k = np.nonzero((x[:-1] < level) & (x[1:] >= level))[0]
    frac = (level - x[k]) / (x[k + 1] - x[k])
    return t[k] + frac * (t[k + 1] - t[k])


def oscillation_metrics(w, state, fraction=0.5):
    """``(peak_to_peak, period)`` over the final ``fraction`` of the trace.

    The period is the mean spacing of rising crossings of the midrange;
    fewer than three crossings raises :class:`NoOscillation`.
    """
    t, x = _tail(w, state, fraction)
    if len(x) < 3:
        raise NoOscillation(f"{state}: too few samples")
    hi, lo = float(np.max(x)), float(np.min(x))
    ptp = hi - lo
    ups = _rising(t, x, 0.5 * (hi + lo)) if ptp > 0 else np.empty(0)
    if len(ups) < 3:
        raise NoOscillation(f"{state}: {len(ups)} midrange crossings in the analysis window")
    return ptp, float(np.mean(np.diff(ups)))


def detect_spikes(w, state, threshold=0.0, hysteresis=HYSTERESIS):
    """Upward crossings of ``threshold``, re-armed only after the trace
    falls ``hysteresis * range`` below it."""
    t, x = w.times, w[state]
    band = hysteresis * float(np.max(x) - np.min(x))
    ups = np.nonzero((x[:-1] < threshold) & (x[1:] >= threshold))[0]
    lows = np.nonzero(x < threshold - band)[0]
    out = []
    # index after which a dip below the band is needed before the next spike
    dip_after = None if x[0] < threshold else -1
    for k in ups:
        if dip_after is not None:
            j = np.searchsorted(lows, dip_after, side="right")
            if j == len(lows) or lows[j] > k:
                continue
        frac = (threshold - x[k]) / (x[k + 1] - x[k])
        out.append(t[k] + frac * (t[k + 1] - t[k]))
        dip_after = k
    return np.array(out)


def _circ_mean_deg(angles):
    z = np.mean(np.exp(1j * np.radians(angles)))
    return float(np.degrees(np.angle(z)) % 360.0)


def phase_offsets(w, states, threshold=0.0, fraction=0.5):
    """Pairwise phase separation in degrees, folded into ``[0, 180]``.

    For each spike of the first member of a pair, the delay to the next
    spike of the second is taken modulo the common period (mean
    inter-spike interval of all listed states); the circular mean of
    these delays is folded so that 120 and 240 degrees both read 120.
    """
    sub = w.window(w.times[0] + (1.0 - fraction) * (w.times[-1] - w.times[0]))
    spikes = {s: detect_spikes(sub, s, threshold) for s in states}
    isis = np.concatenate([np.diff(v) for v in spikes.values() if len(v) > 1] or [[]])
    if len(isis) == 0:
        raise NoOscillation("no repeated spikes to define a period")
    period = float(np.mean(isis))
    out = {}
    for i, a in enumerate(states):
        for b in states[i + 1:]:
            sa, sb = spikes[a], spikes[b]
            delays = []
            for ts in sa:
                k = np.searchsorted(sb, ts)
                if k < len(sb):
                    delays.append((sb[k] - ts) / period * 360.0 % 360.0)
            if not delays:
                raise NoOscillation(f"no spike pairs for {a}, {b}")
            ang = _circ_mean_deg(delays)
            out[(a, b)] = min(ang, 360.0 - ang)
    return out


def separation_time(a, b, threshold=DIVERGENCE_THRESHOLD):
    """First time the Euclidean distance between two runs exceeds ``threshold``."""
    d = np.sqrt(np.sum((a.traces - b.traces) ** 2, axis=1))
    k = np.nonzero(d > threshold)[0]
    return float(a.times[k[0]]) if len(k) else math.inf


def divergence_time(target, cfg, perturbation, state=None, threshold=DIVERGENCE_THRESHOLD):
    """Time for two runs differing by ``perturbation`` amperes on ``state``
    to separate by ``threshold``; ``inf`` if they never do within ``t_end``.

    ``target`` is a :class:`DynSystem` (mathematical runs) or a netlist
    (circuit runs).
    """
    from ..synth import Netlist, CoreSpec, _replace
    from .engine import integrate_circuit, integrate_math

    if isinstance(target, Netlist):
        state = state or target.cores[0].name
        cores = tuple(CoreSpec(c.name, c.mapping, c.init + perturbation)
                      if c.name == state else c for c in target.cores)
        a = integrate_circuit(target, cfg)
        b = integrate_circuit(_replace(target, cores=cores), cfg)
    else:
        state = state or target.states[0].name
        a = integrate_math(target, cfg)
        s0 = target.state(state).init
        b = integrate_math(target.with_inits(**{state: s0 + perturbation}), cfg)
    return separation_time(a, b, threshold)


def compare(test, reference, states=None):
    """Per-state metrics of ``test`` against ``reference``.

    Adds the reference and test peak-to-peak/period where both oscillate.
    """
    out = {}
    for s in states or reference.states:
        m = Metrics(rmse=rmse(test, reference, s), nrmse=nrmse(test, reference, s))
        try:
            p_ref, T_ref = oscillation_metrics(reference, s)
            p, T = oscillation_metrics(test, s)
        except NoOscillation:
            pass
        else:
            m = replace(m, peak_to_peak=p, period=T,
                        extra={"peak_to_peak_ref": p_ref, "period_ref": T_ref,
                               "amplitude_error": abs(p - p_ref) / p_ref,
                               "period_error": abs(T - T_ref) / T_ref})
        out[s] = m
    return out
