"""Simulation engine, waveform analysis and Monte Carlo."""
from .analysis import (Metrics, compare, detect_spikes, divergence_time, nrmse,
                       oscillation_metrics, phase_offsets, rmse, separation_time)
from .engine import SimConfig, Waveform, integrate_circuit, integrate_math
from .io import read_csv, waveform_csv, write_csv, write_projections
from .montecarlo import MCResult, monte_carlo

__all__ = [
    "Metrics", "compare", "detect_spikes", "divergence_time", "nrmse",
    "oscillation_metrics", "phase_offsets", "rmse", "separation_time", "SimConfig",
    "Waveform", "integrate_circuit", "integrate_math", "read_csv", "waveform_csv",
    "write_csv", "write_projections", "MCResult", "monte_carlo",
]
