# %% [markdown]
# Bistability and phase locking
# -----------------------------
# The subcritical Hopf oscillator decays from inside its unstable cycle
# and grows onto the stable one from outside.  Three FHN neurons with
# low-pass synapses synchronize when coupling is excitatory and split
# into a 120 degree rotation when it is inhibitory.

# %%
import numpy as np

from nbds import SimConfig, builtin, integrate_circuit, integrate_math, lower
from nbds.sim import oscillation_metrics, phase_offsets

for outside in (False, True):
    sys = builtin("hopf", init_outside=outside)
    w = integrate_circuit(lower(sys), SimConfig())
    tail = w.window(w.times[-1] / 2)
    r0 = np.hypot(*(s.init for s in sys.states))
    print(f"start radius {r0 * 1e9:.2f} nA -> final peak-to-peak {np.ptp(tail['x']) * 1e9:.3f} nA")

sys = builtin("hopf", init_outside=True)
pc, Tc = oscillation_metrics(integrate_circuit(lower(sys), SimConfig()), "x")
pm, Tm = oscillation_metrics(integrate_math(sys, SimConfig()), "x")
print(f"amplitude error {abs(pc - pm) / pm:.2e}, period error {abs(Tc - Tm) / Tm:.2e}")

# %%
cfg = SimConfig(dt=1e-3, t_end=1200.0, record_stride=20)
for topo in "abc":
    net = lower(builtin(f"network-{topo}"))
    off = phase_offsets(integrate_circuit(net, cfg), ["v1", "v2", "v3"])
    pairs = ", ".join(f"{a}-{b} {v:5.1f} deg" for (a, b), v in off.items())
    print(f"network ({topo}) {net.summary():<26} {pairs}")
