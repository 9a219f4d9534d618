"""The effective Newton law for the soliton center.

Starts a displaced, gently boosted soliton, records the center a(t) and
momentum p(t), and verifies that the center oscillates at the internal-mode
frequency eps with a slowly decaying amplitude (radiation damping), with
adot/2 = p along the way.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from solitonlab.dynamics import evolve_nls, observables
from solitonlab.grids import ComplexField, Grid
from solitonlab.linearization import discrete_spectrum
from solitonlab.model import ModelConfig
from solitonlab.modulation import envelope_average, newton_law_check

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

grid = Grid.line(2048, 80.0)
model = ModelConfig()
sd = discrete_spectrum(grid, model)

a0, p0 = 0.4, 0.02
prof = np.interp(grid.nodes - a0, grid.nodes, sd.phi.values.real, period=2 * grid.half_width)
psi0 = ComplexField(grid, prof * np.exp(1j * p0 * grid.nodes))
evo = evolve_nls(psi0, model, t_final=600.0, dt=0.005, snapshot_stride=0.5, absorbing_layer=True)

a_s, p_s = [], []
for k in range(len(evo.times)):
    _, _, a, p = observables(ComplexField(grid, evo.snapshots[k]), model)
    a_s.append(a)
    p_s.append(p)
a_s, p_s = np.array(a_s), np.array(p_s)

rep = newton_law_check(evo.times, a_s, p_s, sd.eps)
print(f"fitted center frequency {rep['omega_fit']:.5f} vs eps = {sd.eps:.5f}")
print(f"max |adot/2 - p| = {rep['adot_half_minus_p_max']:.2e} (max |p| = {rep['p_max']:.2e})")
print("window amplitudes:", ", ".join(f"t~{t:.0f}: {amp:.4f}" for t, amp in rep["amp_windows"]))

fig, ax = plt.subplots(figsize=(7.5, 3.4))
ax.plot(evo.times, a_s, lw=0.7, label="a(t)")
tt, env = envelope_average(evo.times, np.abs(a_s), 2 * np.pi / sd.eps)
ax.plot(tt, env * np.pi / 2, "k", lw=2, label="envelope")
ax.set_xlabel("t")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "newton_law.png"), dpi=130)
print(f"wrote {OUT}/newton_law.png")
