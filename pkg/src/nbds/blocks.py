"""
Translinear computation blocks
==============================

Ideal behavioral models of the current-mode blocks available to the
synthesizer.  Bilateral quantities are carried as a pair of non-negative
rails, ``value = pos - neg``; the representation is not canonical (both
rails may carry a common-mode current).

Subthreshold menu: MULT TYPE1 (P/N), SQUARER TYPE1/TYPE2, MULT TYPE2,
MULT TYPE3 and the splitter.  Strong-inversion menu: root square, MULT
core and the bilateral multiplier built from four MULT cores.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


class ScaleCurrent(float):
    """A strictly positive constant current used as a product denominator."""

    def __new__(cls, value):
        v = float.__new__(cls, value)
        if not (v > 0 and math.isfinite(v)):
            raise ValidationError(f"scale current must be positive, got {value!r}")
        return v

    @property
    def value(self):
        return float(self)


@dataclass(frozen=True)
class BilateralSignal:
    pos: float
    neg: float

    def __post_init__(self):
        if self.pos < 0 or self.neg < 0:
            raise ValidationError(
                f"rails must be non-negative, got ({self.pos!r}, {self.neg!r})")

    def value(self):
        return self.pos - self.neg

    def swapped(self):
        return BilateralSignal(self.neg, self.pos)

    def __add__(self, other):
        return BilateralSignal(self.pos + other.pos, self.neg + other.neg)


def _scale(s):
    return s if isinstance(s, ScaleCurrent) else ScaleCurrent(s)


def mult_type1(I1, I2, I3):
    """``I1 * I2 / I3`` on single-sided currents (PMULT and NMULT alike)."""
    return I1 * I2 / _scale(I3)


def squarer_type1(I_in, I_X):
    return I_in * I_in / _scale(I_X)


def squarer_type2(x: BilateralSignal, I_X) -> float:
    """Square of a bilateral input as a single-sided current.

    Built from two SQUARER TYPE1 and one NMULT TYPE1: the rail squares are
    summed and the cross product is sunk from the result.
    """
    I_X = _scale(I_X)
    out = (squarer_type1(x.pos, I_X) + squarer_type1(x.neg, I_X)) \
        - 2 * mult_type1(x.pos, x.neg, I_X)
    # rounding can leave a few ulps below zero when pos ~ neg
    return max(out, 0.0)


def mult_type2(c, x: BilateralSignal, I_X) -> BilateralSignal:
    """Single-sided ``c`` times bilateral ``x``: two MULT TYPE1 rail-wise."""
    I_X = _scale(I_X)
    return BilateralSignal(mult_type1(x.pos, c, I_X), mult_type1(x.neg, c, I_X))


def mult_type3(x: BilateralSignal, y: BilateralSignal, I_dc) -> BilateralSignal:
    """Bilateral product from four MULT TYPE1."""
    I_dc = _scale(I_dc)
    pos = mult_type1(x.pos, y.pos, I_dc) + mult_type1(x.neg, y.neg, I_dc)
    neg = mult_type1(x.pos, y.neg, I_dc) + mult_type1(x.neg, y.pos, I_dc)
    return BilateralSignal(pos, neg)


def splitter(v: float) -> BilateralSignal:
    return BilateralSignal(max(v, 0.0), max(-v, 0.0))


def root_square(I_in, I_b):
    return 2.0 * math.sqrt(I_in * _scale(I_b))


def mult_core(I_in, I_b):
    I_b = _scale(I_b)
    return (I_in + 0.5 * I_b) ** 2 / I_b


def bilateral_mult_si(x: BilateralSignal, y: BilateralSignal, I_b) -> BilateralSignal:
    """Strong-inversion bilateral multiplier; ``value = 2 x y / I_b``.

    The rails are the cross-product sums left after the four MULT cores'
    linear and constant terms cancel pairwise.  Note the factor 2: bind
    ``I_b = 2 * I_x`` to compute ``x y / I_x``.
    """
    I_b = _scale(I_b)
    pos = 2 * (x.pos * y.pos + x.neg * y.neg) / I_b
    neg = 2 * (x.neg * y.pos + x.pos * y.neg) / I_b
    return BilateralSignal(pos, neg)


def bilateral_mult_from_cores(x: BilateralSignal, y: BilateralSignal, I_b) -> float:
    """Value of the bilateral multiplier assembled from four MULT cores."""
    mc = mult_core
    return (mc(x.pos + y.pos, I_b) + mc(x.neg + y.neg, I_b)
            - mc(x.neg + y.pos, I_b) - mc(x.pos + y.neg, I_b))
