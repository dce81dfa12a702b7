"""Device-parameter Monte Carlo over a synthesized circuit.

Each run draws an independent lognormal factor ``exp(N(0, sigma))`` for
every perturbed device parameter of every core (per-core mismatch).
Block scale currents are left nominal.  Runs are seeded from one
:class:`numpy.random.SeedSequence`, so a distribution is reproducible
bit for bit from ``(seed, runs)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..device import StrongInversionParams
from ..errors import NBDSError, ValidationError
from .analysis import oscillation_metrics
from .engine import integrate_circuit

SUB_KEYS = ("n_n", "n_p", "I_Sn", "I_Sp")
SI_KEYS = ("k_n", "k_p", "V_th")

# a run counts as oscillating if it keeps half the nominal swing
MIN_RELATIVE_AMPLITUDE = 0.5


@dataclass
class MCResult:
    sigma: float
    seed: int
    state: str
    nominal: tuple
    peak_to_peak: np.ndarray
    period: np.ndarray
    oscillated: np.ndarray

    @property
    def runs(self):
        return len(self.oscillated)

    @property
    def success(self):
        return float(np.mean(self.oscillated)) if self.runs else math.nan

    def _stat(self, a, fn):
        ok = a[self.oscillated]
        return float(fn(ok)) if len(ok) else math.nan

    def mean_amplitude(self):
        return self._stat(self.peak_to_peak, np.mean)

    def std_amplitude(self):
        return self._stat(self.peak_to_peak, np.std)

    def mean_period(self):
        return self._stat(self.period, np.mean)

    def std_period(self):
        return self._stat(self.period, np.std)

    def report(self):
        return "\n".join([
            f"runs={self.runs} sigma={self.sigma!r} seed={self.seed} state={self.state}",
            f"nominal peak_to_peak={self.nominal[0]:.9e} A period={self.nominal[1]:.9e} s",
            f"amplitude mean={self.mean_amplitude():.9e} A std={self.std_amplitude():.9e} A",
            f"period mean={self.mean_period():.9e} s std={self.std_period():.9e} s",
            f"success={self.success:.4f}",
        ])


def perturb_device(device, rng, sigma):
    keys = SI_KEYS if isinstance(device, StrongInversionParams) else SUB_KEYS
    factors = np.exp(rng.normal(0.0, sigma, size=len(keys)))
    return device.replace(**{k: getattr(device, k) * float(f) for k, f in zip(keys, factors)})


def _measure(netlist, cfg, state, devices=None):
    w = integrate_circuit(netlist, cfg, devices=devices)
    return oscillation_metrics(w, state)


def monte_carlo(netlist, cfg, sigma, runs, seed, state=None):
    """Perturb device parameters ``runs`` times and measure oscillation."""
    if not sigma >= 0:
        raise ValidationError("sigma must be non-negative")
    if runs < 1:
        raise ValidationError("runs must be at least 1")
    if seed is None:
        raise ValidationError("a seed is required for a reproducible Monte Carlo run")
    state = state or netlist.cores[0].name
    nominal = _measure(netlist, cfg, state)
    children = np.random.SeedSequence(int(seed)).spawn(runs)
    ptp = np.full(runs, math.nan)
    per = np.full(runs, math.nan)
    ok = np.zeros(runs, dtype=bool)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        devices = [perturb_device(c.mapping.device, rng, sigma) for c in netlist.cores]
        try:
            p, T = _measure(netlist, cfg, state, devices)
        except NBDSError:
            continue
        ptp[i], per[i] = p, T
        ok[i] = p >= MIN_RELATIVE_AMPLITUDE * nominal[0]
    return MCResult(float(sigma), int(seed), state, nominal, ptp, per, ok)
