# %% [markdown]
# FitzHugh-Nagumo from a text description to a simulated circuit
# ---------------------------------------------------------------
# A system is written in the small description language, lowered to a
# block netlist and integrated twice: once as the ODE itself and once as
# the capacitor voltages of the synthesized cores.

# %%
import numpy as np

from nbds import SimConfig, integrate_circuit, integrate_math, lower, parse
from nbds.dsl import DriveSpec
from nbds.sim import compare, detect_spikes, oscillation_metrics

SOURCE = """
system fhn
regime subthreshold
state v tau=0.65s idc=80pA init=-1.2nA
state w tau=8.125s idc=6.4pA init=-0.6nA
input I_ext constant 0.6nA
eq v = v - sq(v / 1nA) * v / 3nA - w + I_ext
eq w = v + 0.7nA - 0.8nA * w / 1nA
"""

sys = parse(SOURCE)
print(sys.state_names, [s.tau for s in sys.states])

# %% [markdown]
# Lowering picks one squarer for v^2, one bilateral-by-single multiplier
# for the cube and one for the 0.8 nA * w term.  The input is split into
# rails.  Mirrors only copy currents for fan-out.

# %%
net = lower(sys)
print(net.summary())
print(net.wiring_summary())
for c in net.cores:
    print(f"{c.name}: C = {c.mapping.C * 1e12:.1f} pF, I_dc = {c.mapping.I_dc * 1e12:.1f} pA")

# %% [markdown]
# Both runs use the same fixed-step RK4 grid.  Because the core
# reproduces tau * x' = F exactly, the two traces agree to rounding level.

# %%
cfg = SimConfig(dt=0.65 / 2000, t_end=250.0)
ref = integrate_math(sys, cfg)
circ = integrate_circuit(net, cfg)
for s, m in compare(circ, ref).items():
    print(f"{s}: nrmse {m.nrmse:.2e}, period {m.period:.3f} s, peak-to-peak {m.peak_to_peak:.3e} A")
print("spikes:", np.round(detect_spikes(circ, "v"), 2))

# %% [markdown]
# Post-inhibitory rebound: with no tonic drive the neuron rests near
# (-1.2, -0.62) nA.  A long negative pulse followed by release gives
# one spike and then rest again.

# %%
rest = integrate_math(sys.with_drives(I_ext=DriveSpec.constant(0.0)), cfg)
v0, w0 = rest["v"][-1], rest["w"][-1]
pulse = DriveSpec.pulse(6.5, 6.5, -1e-9)
rebound = sys.with_inits(v=v0, w=w0).with_drives(I_ext=pulse)
w = integrate_circuit(lower(rebound), SimConfig(dt=0.65 / 400, t_end=200.0))
print(f"rest point ({v0 * 1e9:.4f}, {w0 * 1e9:.4f}) nA")
print("rebound spikes at", np.round(detect_spikes(w, "v"), 2), "s")
