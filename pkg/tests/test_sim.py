import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbds.dsl import (Const, DriveSpec, DynSystem, InputRef, Mul, StateDecl, StateRef, Sub,
                      builtin, builtin_fhn, builtin_synapse, parse)
from nbds.errors import NoOscillation, NonFinite, ValidationError
from nbds.sim import (SimConfig, Waveform, compare, detect_spikes, divergence_time,
                      integrate_circuit, integrate_math, monte_carlo, nrmse,
                      oscillation_metrics, phase_offsets, read_csv, rmse, write_csv,
                      write_projections)
from nbds.sim import kernels
from nbds.synth import lower

nA = 1e-9
TAU_V = 0.65


def wave(t, **traces):
    names = list(traces)
    return Waveform(t, names, np.column_stack([traces[n] for n in names]), np.zeros(len(t), bool))


# -- SimConfig ----------------------------------------------------------------------

def test_simconfig_validation():
    for kw in ({"dt": 0}, {"dt": -1.0}, {"dt": 1.0, "t_end": 0.5}, {"integrator": "RK45"},
               {"record_stride": 0}):
        with pytest.raises(ValidationError):
            SimConfig(**kw)


def test_simconfig_defaults():
    cfg = SimConfig().resolved([0.5, 2.0])
    assert cfg.dt == 0.5 / 2000
    assert cfg.t_end == 80.0


def test_waveform_invariants():
    with pytest.raises(ValidationError):
        Waveform([0, 0], ["x"], [[1], [2]], [False, False])
    with pytest.raises(ValidationError):
        Waveform([0, 1], ["x"], [[1]], [False])


# -- math integration ---------------------------------------------------------------

def test_synapse_step_response():
    sys = builtin_synapse()
    w = integrate_math(sys, SimConfig(dt=1e-5, t_end=0.1))
    x = np.interp(0.05, w.times, w["x"])
    assert x == pytest.approx((1 - math.exp(-1)) * nA, abs=1e-4 * nA)


def test_fhn_rest_without_drive():
    sys = builtin_fhn(drive=DriveSpec.constant(0.0))
    w = integrate_math(sys, SimConfig(dt=TAU_V / 200))
    assert len(detect_spikes(w, "v")) == 0
    assert np.ptp(w.window(w.times[-1] / 2)["v"]) < 1e-12


def test_fhn_tonic_spiking():
    w = integrate_math(builtin_fhn(), SimConfig(dt=TAU_V / 200))
    _, T = oscillation_metrics(w, "v")
    assert len(detect_spikes(w, "v")) >= 5
    assert len(detect_spikes(w.window(0, 10 * T), "v")) >= 5


def test_rebound_spike():
    sys = builtin_fhn(drive=DriveSpec.pulse(10 * TAU_V, 10 * TAU_V, -nA),
                      init=(-1.1994e-9, -0.6243e-9))
    cfg = SimConfig(dt=TAU_V / 200, t_end=200.0)
    assert len(detect_spikes(integrate_math(sys, cfg), "v")) == 1
    assert len(detect_spikes(integrate_circuit(lower(sys), cfg), "v")) == 1


def test_lorenz_bounded():
    sys = builtin("lorenz")
    tau_y = sys.state("y").tau
    w = integrate_math(sys, SimConfig(t_end=50 * tau_y, record_stride=10))
    assert np.max(np.abs(w.traces)) < 60 * nA


def test_nonfinite_aborts_with_time():
    src = "system blow\nstate x tau=1ms idc=1nA init=1nA\neq x = sq(x / 1pA) + x\n"
    with pytest.raises(NonFinite) as ei:
        integrate_math(parse(src), SimConfig(dt=1e-6, t_end=1.0))
    assert 0 < ei.value.t < 1.0


def test_euler_first_order():
    sys = builtin_synapse(drive=DriveSpec.constant(nA))
    exact = (1 - math.exp(-1)) * nA
    errs = []
    for dt in (1e-3, 5e-4):
        w = integrate_math(sys, SimConfig(dt=dt, t_end=0.05, integrator="Euler"))
        errs.append(abs(w["x"][-1] - exact))
    assert 1.8 < errs[0] / errs[1] < 2.2


def test_drives_sampled_at_stage_times():
    # tau x' = ramp(t): x(t) = rate t^2 / (2 tau); RK4 integrates the quadratic exactly
    sys = DynSystem("r", (StateDecl("x", 0.1, 1e-10, 0.0),), (("u", DriveSpec.ramp(1e-9)),),
                    {"x": InputRef("u")})
    w = integrate_math(sys, SimConfig(dt=0.01, t_end=1.0))
    assert w["x"][-1] == pytest.approx(1e-9 / 0.2, rel=1e-12)


def test_record_stride():
    sys = builtin_synapse()
    a = integrate_math(sys, SimConfig(dt=1e-4, t_end=0.1))
    b = integrate_math(sys, SimConfig(dt=1e-4, t_end=0.1, record_stride=10))
    assert len(b) == 101
    np.testing.assert_array_equal(a.traces[::10], b.traces)


def test_python_kernel_matches_jit(monkeypatch):
    sys = builtin("hopf", init_outside=True)
    cfg = SimConfig(dt=0.065 / 200, t_end=2.0)
    a = integrate_circuit(lower(sys), cfg)
    monkeypatch.setenv("NBDS_JIT", "0")
    b = integrate_circuit(lower(sys), cfg)
    np.testing.assert_allclose(b.traces, a.traces, rtol=1e-12, atol=1e-24)


def test_kernel_cache_reuses_compiled_code():
    src = kernels.math_source(builtin_synapse())
    assert kernels.get_kernel(src) is kernels.get_kernel(src)


# -- circuit integration ------------------------------------------------------------

def test_fhn_circuit_matches_math():
    sys = builtin_fhn()
    cfg = SimConfig(dt=TAU_V / 400, t_end=100.0)
    m = compare(integrate_circuit(lower(sys), cfg), integrate_math(sys, cfg))
    assert m["v"].nrmse < 1e-4 and m["w"].nrmse < 1e-4


def test_fhn_circuit_period_matches_math():
    sys = builtin_fhn()
    cfg = SimConfig(dt=TAU_V / 400)
    _, Tc = oscillation_metrics(integrate_circuit(lower(sys), cfg), "v")
    _, Tm = oscillation_metrics(integrate_math(sys, cfg), "v")
    assert Tc == pytest.approx(Tm, rel=5e-3)


def test_hopf_inside_decays():
    sys = builtin("hopf")
    w = integrate_circuit(lower(sys), SimConfig(dt=0.065 / 400))
    ptp = np.ptp(w.window(w.times[-1] / 2)["x"])
    assert ptp < 0.05 * nA


def test_equilibrium_constant_traces():
    sys = DynSystem("still", (StateDecl("x", 0.1, 1e-10, 0.5e-9),
                              StateDecl("y", 0.2, 1e-10, -0.3e-9)), (),
                    {"x": Const(0.0), "y": Sub(Const(0.0), Const(0.0))})
    w = integrate_circuit(lower(sys), SimConfig(dt=1e-3, t_end=1.0))
    for s in ("x", "y"):
        assert np.ptp(w[s]) <= 1e-14 * abs(w[s][0])
        assert np.ptp(w.extra["V_C"][:, sys.state_names.index(s)]) == 0.0


def test_circuit_initial_currents():
    sys = builtin_fhn()
    w = integrate_circuit(lower(sys), SimConfig(dt=1e-3, t_end=1e-3))
    assert w["v"][0] == pytest.approx(-1.2e-9, rel=1e-9)
    assert w["w"][0] == pytest.approx(-0.6e-9, rel=1e-9)


def test_clipping_keeps_vc_in_window():
    # pull far below the dynamic range so the capacitor hits v_c_min
    sys = builtin_synapse(drive=DriveSpec.constant(-5e-9))
    net = lower(sys)
    from nbds.device import operating_bounds
    lo, hi = operating_bounds(net.cores[0].mapping.device)
    w = integrate_circuit(net, SimConfig(dt=1e-4, t_end=0.5, clipping=True))
    vc = w.extra["V_C"][:, 0]
    assert np.all(vc >= lo - 1e-15) and np.all(vc <= hi + 1e-15)
    assert w.sat.any()
    free = integrate_circuit(net, SimConfig(dt=1e-4, t_end=0.5))
    assert not free.sat.any()


def test_strong_inversion_derived_matches_math():
    sys = builtin("fhn-si")
    cfg = SimConfig(dt=1.5 / 400, t_end=100.0)
    m = compare(integrate_circuit(lower(sys, "derived"), cfg), integrate_math(sys, cfg))
    assert max(x.nrmse for x in m.values()) < 1e-3


# -- metrics ------------------------------------------------------------------------

def test_rmse_and_nrmse():
    t = np.linspace(0, 1, 101)
    x = np.sin(2 * np.pi * t)
    a, b = wave(t, x=x), wave(t, x=x + 0.1)
    assert rmse(a, a, "x") == 0.0
    assert rmse(b, a, "x") == pytest.approx(0.1)
    assert nrmse(b, a, "x") == pytest.approx(0.1 / np.ptp(x))


def test_nrmse_resamples():
    t = np.linspace(0, 1, 1001)
    a = wave(t, x=t)
    b = wave(t[::10], x=t[::10])
    assert nrmse(a, b, "x") < 1e-12


@given(st.floats(0.1, 10.0), st.floats(0.5, 5.0))
@settings(max_examples=20, deadline=None)
def test_oscillation_metrics_sinusoid(A, T):
    t = np.linspace(0, 20 * T, 20001)
    w = wave(t, x=A * np.sin(2 * np.pi * t / T))
    p, P = oscillation_metrics(w, "x")
    assert p == pytest.approx(2 * A, rel=5e-3)
    assert P == pytest.approx(T, rel=5e-3)


def test_oscillation_metrics_constant():
    t = np.linspace(0, 1, 100)
    with pytest.raises(NoOscillation):
        oscillation_metrics(wave(t, x=np.ones(100)), "x")


def test_detect_spikes_rest_and_hysteresis():
    t = np.linspace(0, 1, 1000)
    assert len(detect_spikes(wave(t, x=-np.ones(1000)), "x")) == 0
    # chatter around the threshold is one spike
    x = np.where(t < 0.5, -1.0, 1.0) + 0.01 * np.sin(2 * np.pi * 200 * t) * (np.abs(t - 0.5) < 0.02)
    assert len(detect_spikes(wave(t, x=x), "x")) == 1


def test_phase_offsets_synthetic():
    T = 1.0
    t = np.linspace(0, 30, 30001)
    x = np.sin(2 * np.pi * t / T)
    w = wave(t, a=x, b=x, c=np.sin(2 * np.pi * (t - T / 3) / T))
    off = phase_offsets(w, ["a", "b", "c"])
    assert off[("a", "b")] == pytest.approx(0.0, abs=1e-6)
    assert off[("a", "c")] == pytest.approx(120.0, abs=2.0)


def test_divergence_fhn_none_and_zero():
    sys = builtin_fhn()
    cfg = SimConfig(dt=TAU_V / 200, t_end=200.0)
    assert divergence_time(sys, cfg, 1e-15) == math.inf
    assert divergence_time(sys, cfg, 0.0) == math.inf


def test_compare_reports_errors():
    sys = builtin_fhn()
    cfg = SimConfig(dt=TAU_V / 200)
    net = lower(sys).with_capacitance_scale(2.0)
    m = compare(integrate_circuit(net, cfg), integrate_math(sys, cfg))
    assert m["v"].extra["period_error"] == pytest.approx(1.0, abs=0.02)
    assert m["v"].nrmse > 1e-3


# -- files --------------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    w = integrate_math(builtin_synapse(), SimConfig(dt=1e-3, t_end=0.05))
    p = tmp_path / "w.csv"
    write_csv(w, p)
    back = read_csv(p)
    np.testing.assert_array_equal(back.times, w.times)
    np.testing.assert_array_equal(back.traces, w.traces)
    assert p.read_text().splitlines()[0] == "t,x,sat"


def test_projections(tmp_path):
    t = np.linspace(0, 1, 11)
    w = wave(t, x=t, y=2 * t, z=3 * t)
    paths = write_projections(w, tmp_path, prefix="l")
    assert [p.rsplit("/", 1)[-1] for p in paths] == ["l_x_y.csv", "l_z_y.csv", "l_z_x.csv"]
    assert (tmp_path / "l_z_x.csv").read_text().splitlines()[0] == "z,x"


# -- Monte Carlo --------------------------------------------------------------------

MC_CFG = SimConfig(dt=TAU_V / 100, t_end=150.0, record_stride=5)


def test_mc_zero_sigma():
    r = monte_carlo(lower(builtin_fhn()), MC_CFG, 0.0, 3, seed=1)
    assert r.std_amplitude() == 0.0 and r.std_period() == 0.0
    assert r.success == 1.0


def test_mc_reproducible():
    net = lower(builtin_fhn())
    a = monte_carlo(net, MC_CFG, 0.05, 4, seed=42)
    b = monte_carlo(net, MC_CFG, 0.05, 4, seed=42)
    assert a.report() == b.report()
    np.testing.assert_array_equal(a.peak_to_peak, b.peak_to_peak)
    c = monte_carlo(net, MC_CFG, 0.05, 4, seed=43)
    assert not np.array_equal(a.peak_to_peak, c.peak_to_peak)


def test_mc_requires_seed():
    with pytest.raises(ValidationError):
        monte_carlo(lower(builtin_fhn()), MC_CFG, 0.02, 2, seed=None)
