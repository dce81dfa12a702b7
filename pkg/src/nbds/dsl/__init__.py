"""System description language: IR, parser and built-in library."""
from .ir import (Add, Const, DivByConst, DriveSpec, DynSystem, Expr, InputRef, Mul, Neg,
                 Square, StateDecl, StateRef, Sub, eval_expr, render, render_expr)
from .library import (BUILTINS, builtin, builtin_fhn, builtin_fhn_si, builtin_hopf,
                      builtin_lorenz, builtin_network, builtin_synapse)
from .parser import parse, parse_expr

__all__ = [
    "Add", "Const", "DivByConst", "DriveSpec", "DynSystem", "Expr", "InputRef", "Mul",
    "Neg", "Square", "StateDecl", "StateRef", "Sub", "eval_expr", "render", "render_expr",
    "BUILTINS", "builtin", "builtin_fhn", "builtin_fhn_si", "builtin_hopf",
    "builtin_lorenz", "builtin_network", "builtin_synapse", "parse", "parse_expr",
]
