"""Shared fixtures: the default scenario objects are expensive (dense
eigensolves, long evolutions), so they are built once per session."""

import numpy as np
import pytest

from solitonlab.dynamics import evolve_nls
from solitonlab.grids import ComplexField, Grid
from solitonlab.ground_state import solve_soliton
from solitonlab.linearization import discrete_spectrum, projections
from solitonlab.model import ModelConfig, NonlinearitySpec, PotentialSpec
from solitonlab.modulation import SpectralBranch


@pytest.fixture(scope="session")
def grid_default():
    return Grid.line(2048, 80.0)


@pytest.fixture(scope="session")
def model_default():
    return ModelConfig()


@pytest.fixture(scope="session")
def grid_small():
    return Grid.line(512, 60.0)


@pytest.fixture(scope="session")
def soliton_default(grid_default, model_default):
    return solve_soliton(grid_default, model_default)


@pytest.fixture(scope="session")
def spectral_default(grid_default, model_default, soliton_default):
    return discrete_spectrum(grid_default, model_default, phi=soliton_default)


@pytest.fixture(scope="session")
def proj_default(spectral_default):
    return projections(spectral_default)


@pytest.fixture(scope="session")
def soliton_small(grid_small, model_default):
    return solve_soliton(grid_small, model_default)


@pytest.fixture(scope="session")
def spectral_small(grid_small, model_default, soliton_small):
    return discrete_spectrum(grid_small, model_default, phi=soliton_small)


@pytest.fixture(scope="session")
def branch_default(grid_default, model_default):
    return SpectralBranch(grid_default, model_default, 0.19, 0.21, 21)


@pytest.fixture(scope="session")
def relaxation_run(grid_default, model_default, spectral_default, branch_default):
    """The default relaxation experiment: z1(0) = 0.05, T = 1000, layer on."""
    from solitonlab.modulation import track

    sd = spectral_default
    psi0 = ComplexField(grid_default, sd.phi.values + 0.05 * sd.xi.values)
    evo = evolve_nls(psi0, model_default, t_final=1000.0, dt=0.005,
                     snapshot_stride=0.5, absorbing_layer=True)
    series = track(evo, branch_default)
    return evo, series


def free_model(lam=0.2, depth=0.1):
    """Cubic model with the potential scale switched off (h = 0)."""
    return ModelConfig(lam=lam, potential=PotentialSpec(depth=depth, h=0.0))
