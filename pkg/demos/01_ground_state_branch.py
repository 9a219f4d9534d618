"""Trapped solitons and the mass curve delta(lambda).

Solves the stationary profile at the default parameters, continues the
branch across the stable window, and compares the free-case mass curve
with the closed form 4 sqrt(lambda + V(0)) of the cubic model.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from solitonlab.grids import Grid
from solitonlab.ground_state import branch, decay_fit, solve_soliton
from solitonlab.model import ModelConfig, PotentialSpec

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

grid = Grid.line(2048, 80.0)
model = ModelConfig()  # cubic, A=0.1, h=0.35, lambda=0.2

phi = solve_soliton(grid, model)
rate, resid = decay_fit(phi)
print(f"trapped soliton: peak {phi.sup():.4f}, mass {grid.integrate(np.abs(phi.values)**2):.6f}")
print(f"tail decay rate {rate:.4f} vs sqrt(lambda) = {np.sqrt(model.lam):.4f}")

br = branch(grid, model, 0.15, 0.3, 16)
print(f"branch delta'(lambda) range: [{br.ddelta.min():.3f}, {br.ddelta.max():.3f}] (all > 0: stable)")

free = ModelConfig(lam=0.2, potential=PotentialSpec(depth=0.1, h=0.0))
br0 = branch(grid, free, 0.15, 0.3, 16)
exact = 4 * np.sqrt(br0.lams + free.potential.v0())
print(f"free-case mass curve vs 4 sqrt(mu): worst rel err {np.max(np.abs(br0.delta-exact)/exact):.2e}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6))
ax1.plot(grid.nodes, phi.values.real, label="trapped $\\phi^\\lambda$")
ax1.plot(grid.nodes, model.potential.vh(grid.nodes) * 4, "--", label="$4\\,V_h$")
ax1.set_xlim(-25, 25)
ax1.set_xlabel("x")
ax1.legend()
ax2.plot(br.lams, br.delta, "o-", label="trapped $\\delta(\\lambda)$")
ax2.plot(br0.lams, br0.delta, "s--", label="free")
ax2.plot(br0.lams, exact, "k:", label="$4\\sqrt{\\lambda+V(0)}$")
ax2.set_xlabel("$\\lambda$")
ax2.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "ground_state_branch.png"), dpi=130)
br.to_csv(os.path.join(OUT, "branch.csv"))
print(f"wrote {OUT}/ground_state_branch.png and branch.csv")
