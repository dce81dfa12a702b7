"""Fixed-step integration of the mathematical system and of its circuit."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .. import device as dev
from ..core import init_core
from ..errors import DenominatorUnderflow, NonFinite, ValidationError
from . import kernels as K

INTEGRATORS = {"RK4": 0, "Euler": 1}


@dataclass(frozen=True)
class SimConfig:
    """Integration settings; ``None`` picks the system-dependent default.

    Defaults: ``dt = tau_min / 2000`` and ``t_end = 40 * tau_max``.
    """
    dt: float = None
    t_end: float = None
    integrator: str = "RK4"
    record_stride: int = 1
    clipping: bool = False
    seed: int = None

    def __post_init__(self):
        if self.dt is not None and not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValidationError(f"dt must be positive, got {self.dt!r}")
        if self.t_end is not None and not math.isfinite(self.t_end):
            raise ValidationError("t_end must be finite")
        if self.dt is not None and self.t_end is not None and self.t_end < self.dt:
            raise ValidationError("t_end must be at least dt")
        if self.integrator not in INTEGRATORS:
            raise ValidationError(f"integrator must be one of {list(INTEGRATORS)}")
        if not (isinstance(self.record_stride, (int, np.integer)) and self.record_stride >= 1):
            raise ValidationError("record_stride must be an integer >= 1")
        if self.seed is not None and not (0 <= int(self.seed) < 2 ** 64):
            raise ValidationError("seed must be a 64-bit unsigned integer")

    def resolved(self, taus):
        dt = self.dt if self.dt is not None else min(taus) / 2000.0
        t_end = self.t_end if self.t_end is not None else 40.0 * max(taus)
        if t_end < dt:
            raise ValidationError("t_end must be at least dt")
        return replace(self, dt=dt, t_end=t_end)

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass
class Waveform:
    """Sampled state currents; ``traces[k, i]`` is state ``i`` at ``times[k]``."""
    times: np.ndarray
    states: list
    traces: np.ndarray
    sat: np.ndarray
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.traces = np.asarray(self.traces, dtype=float)
        self.sat = np.asarray(self.sat, dtype=bool)
        if self.traces.ndim == 1:
            self.traces = self.traces[:, None]
        if not (len(self.times) == self.traces.shape[0] == len(self.sat)):
            raise ValidationError("waveform arrays must have equal lengths")
        if self.traces.shape[1] != len(self.states):
            raise ValidationError("one trace column per state required")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValidationError("waveform times must be strictly increasing")

    def __getitem__(self, name):
        return self.traces[:, self.states.index(name)]

    def __len__(self):
        return len(self.times)

    def rescaled(self, r):
        """Same samples on the time axis ``t / r``."""
        return Waveform(self.times / r, list(self.states), self.traces, self.sat,
                        dict(self.extra))

    def window(self, t0, t1=np.inf):
        m = (self.times >= t0) & (self.times <= t1)
        return Waveform(self.times[m], list(self.states), self.traces[m], self.sat[m],
                        {k: v[m] for k, v in self.extra.items()})


def _run(kernel, x0, cfg, dk, da, P, lo, hi, names):
    nsteps = int(round(cfg.t_end / cfg.dt))
    stride = int(cfg.record_stride)
    nrec = nsteps // stride + 1
    out_t = np.empty(nrec)
    out_x = np.empty((nrec, len(x0)))
    out_sat = np.zeros(nrec, dtype=np.bool_)
    status, rec, t_fail = kernel.run(np.asarray(x0, dtype=float), 0.0, float(cfg.dt), nsteps,
                                     stride, INTEGRATORS[cfg.integrator], dk, da, P, lo, hi,
                                     bool(cfg.clipping), out_t, out_x, out_sat)
    if status == K.STATUS_NONFINITE:
        raise NonFinite(t_fail, dict(zip(names, out_x[rec - 1])))
    if status == K.STATUS_UNDERFLOW:
        raise DenominatorUnderflow(
            f"I_Cin denominator below floor at t={t_fail:.9g} s")
    return out_t[:rec], out_x[:rec], out_sat[:rec]


_EMPTY = np.zeros(1)


def integrate_math(sys, cfg: SimConfig = None) -> Waveform:
    """Integrate ``tau_i * x_i' = F_i`` with the fixed-step integrator."""
    cfg = (cfg or SimConfig()).resolved([s.tau for s in sys.states])
    kernel = K.get_kernel(K.math_source(sys))
    dk, da = K.encode_drives([d for _, d in sys.inputs])
    x0 = np.array([s.init for s in sys.states], dtype=float)
    t, x, sat = _run(kernel, x0, cfg, dk, da, _EMPTY, _EMPTY, _EMPTY, sys.state_names)
    return Waveform(t, sys.state_names, x, sat)


def circuit_initial_state(netlist):
    return np.array([init_core(c.mapping.device, c.init).V_C for c in netlist.cores])


def integrate_circuit(netlist, cfg: SimConfig = None, devices=None, init_vc=None) -> Waveform:
    """Integrate the capacitor voltages of a synthesized netlist.

    ``devices`` optionally replaces the per-core device records (Monte
    Carlo); ``init_vc`` overrides the preset capacitor voltages.  The
    returned traces are the core output currents; capacitor voltages are
    in ``extra["V_C"]``.
    """
    if devices is not None:
        netlist = netlist.with_devices(devices)
    cfg = (cfg or SimConfig()).resolved([c.mapping.tau for c in netlist.cores])
    kernel = K.get_kernel(K.circuit_source(netlist))
    dk, da = K.encode_drives([d for _, d in netlist.inputs])
    P = K.pack_device_params(netlist)
    bounds = np.array([dev.operating_bounds(c.mapping.device) for c in netlist.cores])
    lo, hi = bounds[:, 0].copy(), bounds[:, 1].copy()
    x0 = circuit_initial_state(netlist) if init_vc is None else np.asarray(init_vc, float)
    if cfg.clipping:
        x0 = np.clip(x0, lo, hi)
    t, vc, sat = _run(kernel, x0, cfg, dk, da, P, lo, hi, netlist.state_names)
    traces = np.column_stack([dev.i_out(c.mapping.device, vc[:, j])
                              for j, c in enumerate(netlist.cores)])
    return Waveform(t, netlist.state_names, traces, sat, {"V_C": vc})
