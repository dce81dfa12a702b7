import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbds import device as dev
from nbds.device import StrongInversionParams, SubthresholdParams
from nbds.errors import OutOfRange, ValidationError

FA = 1e-15


def matched(**kw):
    base = dict(n_n=1.3, n_p=1.3, V_T=0.026, I_Sn=1 * FA, I_Sp=1 * FA, V_b=1.2)
    base.update(kw)
    return SubthresholdParams(**base)


sub_params = st.builds(
    SubthresholdParams,
    n_n=st.floats(1.05, 1.6), n_p=st.floats(1.05, 1.6),
    V_T=st.floats(0.024, 0.028),
    I_Sn=st.floats(0.2e-15, 5e-15), I_Sp=st.floats(0.2e-15, 5e-15),
    V_DD=st.just(3.3), V_b=st.floats(0.6, 1.8))


# -- beta ---------------------------------------------------------------------------

def test_beta_equal_leakages():
    assert dev.beta_sub(matched()) == pytest.approx(1 * FA, rel=1e-15)


def test_beta_equal_slopes_is_geometric_mean():
    p = SubthresholdParams(n_n=1.3, n_p=1.3, I_Sn=4 * FA, I_Sp=1 * FA)
    assert dev.beta_sub(p) == pytest.approx(2 * FA, rel=1e-14)


def test_beta_mismatched_value():
    p = SubthresholdParams(n_n=1.3, n_p=1.2, I_Sn=2 * FA, I_Sp=1 * FA)
    expected = math.sqrt(2) * math.exp(0.02 * math.log(2)) * FA
    assert dev.beta_sub(p) == pytest.approx(expected, rel=1e-14)
    assert dev.beta_sub(p) == pytest.approx(1.434 * FA, rel=1e-3)


# -- subthreshold branch currents ---------------------------------------------------

def test_branch_currents_at_midpoint():
    p = matched()
    I_A, I_B = dev.branch_currents_sub(p, 0.6)
    assert I_A == I_B
    assert I_A == pytest.approx(7.16e-12, rel=1e-3)
    assert dev.i_out_sub(p, 0.6) == 0.0


def test_i_out_at_vb_keeps_leak_term():
    p = matched()
    beta = dev.beta_sub(p)
    expected = beta * math.exp(p.V_b / p.nVT) - beta
    assert dev.i_out_sub(p, p.V_b) == pytest.approx(expected, rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(sub_params, st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_product_independent_of_vc(p, u, v):
    va, vb = u * p.V_b * 1.5, v * p.V_b * 1.5
    a = np.prod(dev.branch_currents_sub(p, va))
    b = np.prod(dev.branch_currents_sub(p, vb))
    ref = dev.beta_sub(p) ** 2 * math.exp(p.V_b / p.nVT)
    assert a == pytest.approx(ref, rel=1e-12)
    assert b == pytest.approx(ref, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(sub_params, st.floats(0.05, 0.95), st.floats(1e-6, 1e-2))
def test_i_out_monotone(p, u, d):
    v = u * p.V_b
    assert dev.i_out_sub(p, v + d) > dev.i_out_sub(p, v)


@settings(max_examples=50, deadline=None)
@given(sub_params, st.floats(0.2, 0.8))
def test_slope_matches_finite_difference(p, u):
    v, h = u * p.V_b, 1e-6
    fd = (dev.i_out_sub(p, v + h) - dev.i_out_sub(p, v - h)) / (2 * h)
    assert fd == pytest.approx(dev.di_out_dvc_sub(p, v), rel=1e-6)


def test_exponent_clamp_is_finite_and_flagged():
    p = matched()
    I_A, I_B = dev.branch_currents_sub(p, 100.0)
    assert math.isfinite(I_B) and I_B > 0
    assert dev.exp_saturated(p, 100.0)
    assert not dev.exp_saturated(p, 0.6)


def test_vectorized_branch_currents():
    p = matched()
    v = np.linspace(0.1, 1.1, 7)
    I_A, I_B = dev.branch_currents_sub(p, v)
    assert I_A.shape == (7,)
    assert np.all(np.diff(I_B - I_A) > 0)


# -- dynamic range ------------------------------------------------------------------

def test_v_c_min_matched():
    p = matched()
    assert dev.v_c_min(p) == pytest.approx(8 / 3 * 0.026 + 1.2 / 3, rel=1e-14)
    assert dev.v_c_min(p) == pytest.approx(0.4693, abs=1e-4)


def test_v_c_min_m4_matched():
    assert dev.v_c_min_m4(matched()) == pytest.approx(8 * 0.026, rel=1e-14)


def test_v_c_max_matched():
    p = matched(V_DD=3.3)
    assert dev.v_c_max(p) == pytest.approx(2 / 3 * (3.3 - 0.104), rel=1e-14)
    assert dev.v_c_max(p) == pytest.approx(2.131, abs=1e-3)
    assert dev.v_c_max(matched(V_DD=3.6)) > dev.v_c_max(p)


@settings(max_examples=50, deadline=None)
@given(sub_params)
def test_i_out_min_consistent(p):
    assert dev.i_out_min(p) == pytest.approx(dev.i_out_sub(p, dev.v_c_min(p)), rel=1e-12)


def test_i_out_min_grows_with_vb():
    assert dev.i_out_min(matched(V_b=1.5)) < dev.i_out_min(matched(V_b=1.2)) < 0


def test_gamma_matched_devices():
    # exp(8/3) per unit slope factor; with n_n = n_p = n the exponent is 8/(3*2n)
    p = matched(n_n=0.5, n_p=0.5)
    assert dev.gamma_sub(p) == pytest.approx(math.exp(8 / 3), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.05, 1.6), st.floats(0.024, 0.028), st.floats(0.2e-15, 5e-15),
       st.floats(0.0, 1.0))
def test_m2_leaves_saturation_first(n, V_T, I_S, u):
    V_b = 16 * V_T * (1.001 + u)
    p = SubthresholdParams(n_n=n, n_p=n, V_T=V_T, I_Sn=I_S, I_Sp=I_S, V_b=V_b)
    assert dev.v_c_min(p) > dev.v_c_min_m4(p)


# -- initialization -----------------------------------------------------------------

def test_v_initial_zero_is_midpoint():
    p = matched()
    assert dev.v_initial(p, 0.0) == pytest.approx(p.V_b / 2, rel=1e-15)


@pytest.mark.parametrize("x", [-5e-9, -1e-9, 1e-9, 5e-9])
def test_v_initial_round_trip(x):
    p = SubthresholdParams()
    assert dev.i_out_sub(p, dev.v_initial(p, x)) == pytest.approx(x, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(sub_params, st.floats(-20e-9, 20e-9))
def test_v_initial_inverse_property(p, x):
    v = dev.v_initial(p, x)
    assert dev.i_out_sub(p, v) == pytest.approx(x, rel=1e-9, abs=1e-24)


def test_v_initial_increasing():
    v = dev.v_initial(SubthresholdParams(), np.linspace(-10e-9, 10e-9, 101))
    assert np.all(np.diff(v) > 0)


# -- strong inversion ---------------------------------------------------------------

def test_si_branch_currents_value():
    p = StrongInversionParams(k_n=100e-6, k_p=100e-6, V_th=0.5, V_b=3.3)
    I_A, I_B = dev.branch_currents_si(p, 2.0)
    assert I_A == pytest.approx(2.25e-6, rel=1e-12)
    assert I_B == pytest.approx(25e-6, rel=1e-12)


def test_si_symmetric_at_midpoint():
    p = StrongInversionParams()
    I_A, I_B = dev.branch_currents_si(p, p.V_b / 2)
    assert I_A == I_B
    assert dev.i_out_si(p, p.V_b / 2) == 0.0


def test_si_device_off_clamps():
    p = StrongInversionParams()
    I_A, I_B = dev.branch_currents_si(p, 0.8)
    assert I_B == 0.0 and I_A > 0
    assert dev.device_off_si(p, 0.8)
    assert not dev.device_off_si(p, p.V_b / 2)


@settings(max_examples=50, deadline=None)
@given(st.floats(20e-6, 400e-6), st.floats(0.3, 0.7))
def test_si_slope_matched(k, u):
    p = StrongInversionParams(k_n=k, k_p=k)
    v = 2 * p.V_th + 0.05 + u * (p.V_b - 4 * p.V_th - 0.1)
    h = 1e-6
    I_A, I_B = dev.branch_currents_si(p, v)
    fd_B = (dev.branch_currents_si(p, v + h)[1] - dev.branch_currents_si(p, v - h)[1]) / (2 * h)
    assert fd_B == pytest.approx(2 * math.sqrt(k * I_B) / (1 + p.beta_si), rel=1e-6)
    fd = (dev.i_out_si(p, v + h) - dev.i_out_si(p, v - h)) / (2 * h)
    expected = 2 / (1 + p.beta_si) * (math.sqrt(p.k_n * I_B) + math.sqrt(p.k_p * I_A))
    assert fd == pytest.approx(expected, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.floats(20e-6, 400e-6), st.floats(20e-6, 400e-6), st.floats(0.3, 0.7))
def test_si_slope_general(kn, kp, u):
    p = StrongInversionParams(k_n=kn, k_p=kp)
    v = 2 * p.V_th + 0.05 + u * (p.V_b - 4 * p.V_th - 0.1)
    h = 1e-6
    fd = (dev.i_out_si(p, v + h) - dev.i_out_si(p, v - h)) / (2 * h)
    assert fd == pytest.approx(dev.di_out_dvc_si(p, v), rel=1e-6)


@pytest.mark.parametrize("x", [-20e-6, -1e-6, 0.0, 1e-6, 30e-6])
def test_v_initial_si_round_trip(x):
    p = StrongInversionParams()
    v = dev.v_initial_si(p, x)
    if x == 0:
        assert v == pytest.approx(p.V_b / 2, abs=1e-9)
    assert dev.i_out_si(p, v) == pytest.approx(x, rel=1e-9, abs=1e-18)


def test_v_initial_si_out_of_range():
    with pytest.raises(OutOfRange):
        dev.v_initial_si(StrongInversionParams(), 1.0)


# -- records ------------------------------------------------------------------------

def test_param_validation():
    with pytest.raises(ValidationError):
        SubthresholdParams(n_n=0)
    with pytest.raises(ValidationError):
        SubthresholdParams(V_b=4.0)
    with pytest.raises(ValidationError):
        StrongInversionParams(V_b=0.9)
    with pytest.raises(ValidationError):
        dev.params_for("weak")


def test_operating_bounds_dispatch():
    p = SubthresholdParams()
    assert dev.operating_bounds(p) == (dev.v_c_min(p), dev.v_c_max(p))
    q = StrongInversionParams()
    assert dev.operating_bounds(q) == (1.0, q.V_b - 1.0)
    assert dev.i_out(q, 2.0) == dev.i_out_si(q, 2.0)
