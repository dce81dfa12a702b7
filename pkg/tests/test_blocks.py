import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbds import blocks as tl
from nbds.blocks import BilateralSignal, ScaleCurrent
from nbds.errors import ValidationError

nA = 1e-9
rail = st.floats(0.0, 10 * nA)
rails = st.builds(BilateralSignal, rail, rail)
scale = st.floats(0.1 * nA, 5 * nA)


def test_scale_current_positive():
    assert ScaleCurrent(1e-9).value == 1e-9
    for bad in (0.0, -1e-9, float("inf"), float("nan")):
        with pytest.raises(ValidationError):
            ScaleCurrent(bad)


def test_rails_nonnegative():
    with pytest.raises(ValidationError):
        BilateralSignal(-1e-12, 0.0)


def test_mult_type1():
    assert tl.mult_type1(nA, nA, nA) == pytest.approx(nA)
    assert tl.mult_type1(2 * nA, 3 * nA, nA) == pytest.approx(6 * nA, rel=1e-15)
    assert tl.mult_type1(0.0, 5 * nA, nA) == 0.0


def test_squarer_type1():
    assert tl.squarer_type1(nA, nA) == pytest.approx(nA)
    assert tl.squarer_type1(3 * nA, nA) == pytest.approx(9 * nA, rel=1e-15)
    assert tl.squarer_type1(0.0, nA) == 0.0


def test_squarer_type2():
    assert tl.squarer_type2(BilateralSignal(2 * nA, 2 * nA), nA) == 0.0
    x = BilateralSignal(3 * nA, nA)
    assert tl.squarer_type1(x.pos, nA) + tl.squarer_type1(x.neg, nA) == pytest.approx(10 * nA)
    assert 2 * tl.mult_type1(x.pos, x.neg, nA) == pytest.approx(6 * nA)
    assert tl.squarer_type2(x, nA) == pytest.approx(4 * nA, rel=1e-14)


def test_mult_type2():
    z = tl.mult_type2(0.0, BilateralSignal(3 * nA, nA), nA)
    assert (z.pos, z.neg) == (0.0, 0.0)
    assert tl.mult_type2(2 * nA, BilateralSignal(3 * nA, nA), nA).value() == pytest.approx(4 * nA)


def test_mult_type3():
    assert tl.mult_type3(BilateralSignal(2 * nA, 0), BilateralSignal(nA, nA), nA).value() == 0.0
    r = tl.mult_type3(BilateralSignal(2 * nA, 0), BilateralSignal(0, 3 * nA), nA)
    assert r.value() == pytest.approx(-6 * nA, rel=1e-15)


def test_splitter():
    assert tl.splitter(0.0) == BilateralSignal(0.0, 0.0)
    assert tl.splitter(2 * nA) == BilateralSignal(2 * nA, 0.0)
    assert tl.splitter(-3 * nA) == BilateralSignal(0.0, 3 * nA)


def test_root_square():
    assert tl.root_square(nA, nA) == pytest.approx(2 * nA)
    assert tl.root_square(0.0, nA) == 0.0
    assert tl.root_square(4 * nA, nA) == pytest.approx(4 * nA)


def test_mult_core():
    Ib = 2e-6
    assert tl.mult_core(0.0, Ib) == pytest.approx(Ib / 4)
    assert tl.mult_core(Ib / 2, Ib) == pytest.approx(Ib)
    assert tl.mult_core(Ib, Ib) == pytest.approx(9 * Ib / 4)


def test_bilateral_mult_si():
    assert tl.bilateral_mult_si(BilateralSignal(nA, nA), BilateralSignal(3 * nA, 0), nA).value() == 0
    r = tl.bilateral_mult_si(BilateralSignal(nA, 0), BilateralSignal(nA, 0), nA)
    assert r.value() == pytest.approx(2 * nA)
    r = tl.bilateral_mult_si(BilateralSignal(nA, 0), BilateralSignal(0, nA), 2 * nA)
    assert r.value() == pytest.approx(-nA)


@settings(max_examples=200, deadline=None)
@given(rails, rails, scale, rail)
def test_block_outputs_stay_single_sided(x, y, s, c):
    for r in (tl.mult_type2(c, x, s), tl.mult_type3(x, y, s), tl.bilateral_mult_si(x, y, s)):
        assert r.pos >= 0 and r.neg >= 0
    assert tl.squarer_type2(x, s) >= 0
    assert tl.root_square(c, s) >= 0 and tl.mult_core(c, s) >= 0


@settings(max_examples=200, deadline=None)
@given(rails, rails, scale, rail)
def test_mult_type3_value_homomorphism(x, y, s, shift):
    expected = x.value() * y.value() / s
    shifted = BilateralSignal(x.pos + shift, x.neg + shift)
    for a in (x, shifted):
        got = tl.mult_type3(a, y, s).value()
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-12 * (a.pos + a.neg) * (y.pos + y.neg) / s)


@settings(max_examples=200, deadline=None)
@given(rails, scale, rail)
def test_squarer_type2_matches_mult_type3(x, s, shift):
    tol = 1e-12 * (x.pos + x.neg + 2 * shift) ** 2 / s
    sq = tl.squarer_type2(x, s)
    assert sq == pytest.approx(tl.mult_type3(x, x, s).value(), abs=tol)
    assert tl.squarer_type2(BilateralSignal(x.pos + shift, x.neg + shift), s) == \
        pytest.approx(sq, abs=tol)


@settings(max_examples=200, deadline=None)
@given(rails, rails, st.floats(0.1e-6, 5e-6))
def test_bilateral_mult_si_from_cores(x, y, Ib):
    x = BilateralSignal(x.pos * 1e3, x.neg * 1e3)
    y = BilateralSignal(y.pos * 1e3, y.neg * 1e3)
    val = tl.bilateral_mult_si(x, y, Ib).value()
    tol = 1e-12 * 2 * (x.pos + x.neg + y.pos + y.neg + Ib) ** 2 / Ib
    assert val == pytest.approx(2 * x.value() * y.value() / Ib, abs=tol)
    assert tl.bilateral_mult_from_cores(x, y, Ib) == pytest.approx(val, abs=tol)


@given(st.floats(-1e-6, 1e-6))
def test_splitter_value_identity(v):
    assert tl.splitter(v).value() == v


@given(rails, scale, st.floats(0.1, 10.0))
def test_mult_type2_linear_in_c(x, s, lam):
    c = 1e-9
    a = tl.mult_type2(c, x, s).value()
    b = tl.mult_type2(lam * c, x, s).value()
    assert b == pytest.approx(lam * a, rel=1e-12, abs=1e-30)
