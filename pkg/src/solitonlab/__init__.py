"""solitonlab: numerics for trapped-soliton relaxation in the generalized NLS.

Modules:
    grids         spatial discretization, fields, inner products
    model         nonlinearity, potential, Hamiltonian, hypothesis checks
    ground_state  Newton/continuation solitons, branch and mass curve
    linearization block operator L, internal mode, projections, resonances
    resolvent     limiting-absorption solves, golden-rule damping
    dynamics      split-step integrators, decay fits, observables
    modulation    decomposition, amplitude fits, normal form, Riccati law
    config/harness/cli   experiment orchestration
"""

__version__ = "0.1.0"
