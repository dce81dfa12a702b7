# %% [markdown]
# Lorenz attractor on three cores
# -------------------------------
# The circuit is chaotic, so two runs that start 1e-6 nA apart separate
# after a finite time.  Phase-plane projections go to CSV for plotting
# elsewhere.

# %%
import os

import numpy as np

from nbds import SimConfig, builtin, integrate_circuit, lower
from nbds.sim import divergence_time, write_projections

OUT = os.environ.get("NBDS_DEMO_OUT", "demo_output")

sys = builtin("lorenz")
net = lower(sys)
print(net.summary())
tau_y = sys.state("y").tau
print(f"tau_x = {sys.state('x').tau * 1e3:.2f} ms, tau_y = tau_z = {tau_y * 1e3:.1f} ms")

# %%
cfg = SimConfig(t_end=50 * tau_y, record_stride=10)
w = integrate_circuit(net, cfg)
print(f"max |state| = {np.max(np.abs(w.traces)) * 1e9:.1f} nA")
print("V_C range:", np.round(w.extra["V_C"].min(0), 3), np.round(w.extra["V_C"].max(0), 3))

# %%
td = divergence_time(net, cfg, 1e-15, "x")
print(f"1e-6 nA perturbation separates by 1 nA after {td * 1e3:.1f} ms ({td / tau_y:.1f} tau_y)")

# %%
for p in write_projections(w, OUT, prefix="lorenz"):
    print("wrote", p)
