"""Synthesis compiler and behavioral simulator for nonlinear bilateral dynamical systems."""
from .core import solve_capacitor, time_rescale
from .device import StrongInversionParams, SubthresholdParams
from .dsl import BUILTINS, DynSystem, builtin, parse, render
from .errors import (DenominatorUnderflow, LoweringError, NBDSError, NoOscillation,
                     NonFinite, OutOfRange, ParseError, ValidationError)
from .sim import SimConfig, compare, integrate_circuit, integrate_math, monte_carlo
from .synth import Netlist, emit, eval_netlist, load_netlist, lower

__version__ = "0.1.0"
