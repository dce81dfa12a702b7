# %% [markdown]
# Square-law cores and device mismatch
# ------------------------------------
# In strong inversion the capacitor is sized with one of two constants.
# The "derived" constant makes the circuit follow the ODE directly.  The
# "paper" constant gives a circuit that runs (2+b)/(1+b) times faster.
# Stretching its time axis back recovers the same waveform.

# %%
from nbds import SimConfig, builtin, integrate_circuit, integrate_math, lower, monte_carlo
from nbds.core import time_rescale
from nbds.sim import nrmse

sys = builtin("fhn-si")
cfg = SimConfig().resolved([s.tau for s in sys.states])
ref = integrate_math(sys, cfg)
for mc in ("derived", "paper"):
    net = lower(sys, mc)
    r = time_rescale(sys.device, mc)
    w = integrate_circuit(net, cfg.replace(dt=cfg.dt * r, t_end=cfg.t_end * r)).rescaled(r)
    err = max(nrmse(w, ref, s) for s in sys.state_names)
    print(f"{mc:>7}: C_v = {net.cores[0].mapping.C * 1e12:.0f} pF, r = {r:.4f}, nrmse {err:.1e}")
print(lower(sys).summary())

# %% [markdown]
# Monte Carlo: every core draws its own lognormal factors for the slope
# factors and leakage currents.  A run counts as a success if it still
# oscillates with at least half the nominal swing.

# %%
net = lower(builtin("fhn"))
mc_cfg = SimConfig(dt=0.65 / 400, record_stride=10)
for sigma in (0.0, 0.02, 0.1):
    res = monte_carlo(net, mc_cfg, sigma, runs=40, seed=7)
    print(f"sigma={sigma}:")
    print("  " + res.report().replace("\n", "\n  "))
