"""The Fermi-golden-rule damping coefficient from the resolvent.

Builds the quadratic resonant source of the internal mode, solves the
limiting-absorption resolvent at 2 eps (on the essential spectrum) for a
decreasing damping sequence with the absorbing layer on, extrapolates
delta -> 0+, and shows the expansion coefficients R_11 (admissible,
localized) and R_20 (radiating).
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from solitonlab.grids import Grid
from solitonlab.linearization import discrete_spectrum, projections
from solitonlab.model import ModelConfig
from solitonlab.resolvent import compute_rmn, fgr_coefficient

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

grid = Grid.line(2048, 80.0)
model = ModelConfig()
sd = discrete_spectrum(grid, model)
proj = projections(sd)
print(f"eps = {sd.eps:.6f}; radiation channel at 2 eps - lambda = {2*sd.eps - model.lam:.4f} "
      f"(wavenumber {np.sqrt(2*sd.eps - model.lam):.3f})")

res = fgr_coefficient(proj)
print(f"delta sequence {res.delta_sequence}")
for d, e in zip(res.delta_sequence, res.estimates):
    print(f"  Y1(delta={d}) = {e.real:+.5f} {e.imag:+.5f}i")
print(f"extrapolated Re Y1 = {res.re_y:.5f} (< 0: radiative damping)")
print(f"opposite half-plane (no layer): Re = {res.other_direction.real:+.5f} (mirror)")

r11 = compute_rmn(proj, 1, 1)
r20 = compute_rmn(proj, 2, 0)
print(f"R_11: admissibility {r11.admissibility:.2e}, tail rate {r11.tail_rate:.3f}")
print(f"R_20: admissibility {r20.admissibility:.2f} (O(1): the radiating part is the damping)")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6))
ax1.plot(grid.nodes, r11.fld.first.real, label="$R_{11}$ first comp. (real)")
ax1.set_xlim(-40, 40)
ax1.set_xlabel("x")
ax1.legend()
ax2.plot(grid.nodes, r20.fld.second.real, label="Re second comp. of $R_{20}$")
ax2.plot(grid.nodes, r20.fld.second.imag, label="Im (radiating)")
ax2.set_xlabel("x")
ax2.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "golden_rule.png"), dpi=130)
print(f"wrote {OUT}/golden_rule.png")
