import numpy as np
import pytest

from solitonlab.errors import DegeneratePairing, GapEmpty
from solitonlab.grids import ComplexField, Grid, TwoComponentField, derivative_samples
from solitonlab.ground_state import dlambda_phi, solve_soliton
from solitonlab.linearization import (
    LinearizedOperator,
    apply_L,
    count_discrete_modes,
    discrete_spectrum,
    projections,
    resonance_indicator,
)
from solitonlab.model import ModelConfig, predicted_epsilon

from conftest import free_model


def test_lminus_annihilates_soliton(grid_default, model_default, soliton_default):
    op = LinearizedOperator(grid_default, model_default, soliton_default)
    out = op.apply_lminus(soliton_default.values)
    assert np.sqrt(grid_default.integrate(np.abs(out) ** 2)) <= 1e-8


def test_zero_mode(grid_default, model_default, soliton_default):
    op = LinearizedOperator(grid_default, model_default, soliton_default)
    w = TwoComponentField(grid_default, np.zeros(grid_default.n), soliton_default.values)
    assert apply_L(op, w).norm2() <= 1e-8 * soliton_default.norm2()


def test_associated_zero_mode(grid_default, model_default, soliton_default):
    op = LinearizedOperator(grid_default, model_default, soliton_default)
    dphi = dlambda_phi(grid_default, model_default, soliton_default)
    w = TwoComponentField(grid_default, dphi.values, np.zeros(grid_default.n))
    lw = apply_L(op, w)
    err = TwoComponentField(grid_default, lw.first, lw.second - soliton_default.values)
    assert err.norm2() <= 1e-6 * soliton_default.norm2()


def test_free_translation_zero_mode(grid_default):
    m = free_model(lam=0.3)
    phi = solve_soliton(grid_default, m, lam=0.3)
    op = LinearizedOperator(grid_default, m, phi, lam=0.3)
    dx_phi = derivative_samples(grid_default, phi.values)
    w = TwoComponentField(grid_default, dx_phi, np.zeros(grid_default.n))
    assert apply_L(op, w).norm2() <= 1e-8


def test_lplus_symmetric(grid_default, model_default, soliton_default):
    op = LinearizedOperator(grid_default, model_default, soliton_default)
    rng = np.random.default_rng(11)
    for _ in range(3):
        u = rng.standard_normal(grid_default.n)
        v = rng.standard_normal(grid_default.n)
        lhs = grid_default.integrate(op.apply_lplus(u).real * v)
        rhs = grid_default.integrate(u * op.apply_lplus(v).real)
        nu = np.sqrt(grid_default.integrate(u**2))
        nv = np.sqrt(grid_default.integrate(v**2))
        assert abs(lhs - rhs) <= 1e-10 * nu * nv


def test_internal_mode_against_dense_eig(grid_small, model_default, spectral_small):
    # independent oracle: nonsymmetric dense eigensolve of the block L
    count, inside = count_discrete_modes(grid_small, model_default, spectral_small.phi)
    assert count == 4
    imag_parts = np.sort(np.abs(inside.imag))
    eps_dense = imag_parts[-1]
    assert abs(spectral_small.eps - eps_dense) <= 1e-6
    assert np.max(np.abs(inside.real)) <= 1e-6


def test_eps_discrepancy_shrinks_with_h(grid_default):
    from solitonlab.model import PotentialSpec

    devs = []
    for h in (0.35, 0.175):
        m = ModelConfig(lam=0.2, potential=PotentialSpec(depth=0.1, h=h))
        sd = discrete_spectrum(grid_default, m)
        pred = predicted_epsilon(m)
        devs.append(abs(sd.eps - pred) / pred)
    assert devs[1] < devs[0]


def test_eigenpair_residuals(spectral_default):
    assert spectral_default.residual_eta <= 1e-8
    assert spectral_default.residual_product <= 1e-8


def test_pairing_identity(spectral_default):
    sd = spectral_default
    assert sd.kappa > 0
    assert abs(sd.pairing_identity() - sd.kappa) <= 1e-8


def test_mode_in_gap_and_order(spectral_default, model_default):
    sd = spectral_default
    assert 0 < sd.eps < model_default.lam
    assert sd.n_order == 1
    assert (sd.n_order + 1) * sd.eps > model_default.lam


def test_mode_parity_orthogonality(spectral_default, grid_default):
    sd = spectral_default
    assert abs(grid_default.integrate(sd.phi.values.real * sd.xi.values.real)) <= 1e-10
    assert abs(grid_default.integrate(sd.dlam_phi.values.real * sd.eta.values.real)) <= 1e-10


def test_gap_empty_for_free_problem(grid_default):
    with pytest.raises(GapEmpty):
        discrete_spectrum(grid_default, free_model(lam=0.3))


def test_projection_idempotent(proj_default, grid_default):
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(100):
        w = TwoComponentField(
            grid_default,
            rng.standard_normal(grid_default.n) + 1j * rng.standard_normal(grid_default.n),
            rng.standard_normal(grid_default.n) + 1j * rng.standard_normal(grid_default.n),
        )
        pd_w = proj_default.pd(w)
        worst = max(worst, (proj_default.pd(pd_w) - pd_w).norm2() / max(w.norm2(), 1e-300))
    assert worst <= 1e-8


def test_projection_on_discrete_modes(proj_default, spectral_default, grid_default):
    sd = spectral_default
    zero = np.zeros(grid_default.n)
    for w in (
        TwoComponentField(grid_default, zero, sd.phi.values),
        TwoComponentField(grid_default, sd.dlam_phi.values, zero),
        TwoComponentField(grid_default, sd.xi.values, zero),
        TwoComponentField(grid_default, zero, sd.eta.values),
    ):
        assert (proj_default.pd(w) - w).norm2() <= 1e-8 * w.norm2()
        assert proj_default.pc(w).norm2() <= 1e-8 * w.norm2()


def test_projection_commutes_with_L(proj_default, spectral_default, grid_default):
    rng = np.random.default_rng(13)
    op = spectral_default.op
    w = TwoComponentField(grid_default, rng.standard_normal(grid_default.n),
                          rng.standard_normal(grid_default.n))
    c1 = proj_default.pd(apply_L(op, w))
    c2 = apply_L(op, proj_default.pd(w))
    assert (c1 - c2).norm2() <= 1e-6 * w.norm2()


def test_riesz_contour_oracle(grid_small, model_default, spectral_small):
    """P_d must match the contour-integral Riesz projection of dense L."""
    sd = spectral_small
    proj = projections(sd)
    n = grid_small.n
    from solitonlab.operators import d2_matrix

    lm = -d2_matrix(grid_small) + np.diag(sd.op.c_minus)
    lp = -d2_matrix(grid_small) + np.diag(sd.op.c_plus)
    big = np.zeros((2 * n, 2 * n))
    big[:n, n:] = lm
    big[n:, :n] = -lp
    radius = 0.5 * (sd.eps + model_default.lam)
    m_nodes = 128  # trapezoid on the contour converges like rho^-m
    rng = np.random.default_rng(14)
    w = np.concatenate([rng.standard_normal(n), rng.standard_normal(n)])
    acc = np.zeros(2 * n, dtype=complex)
    for k in range(m_nodes):
        zk = radius * np.exp(2j * np.pi * (k + 0.5) / m_nodes)
        sol = np.linalg.solve(zk * np.eye(2 * n) - big, w)
        acc += zk * sol / m_nodes  # d z = i z d theta; (1/2 pi i) sum z_k sol dtheta
    oracle = acc.real
    mine1, mine2 = proj.apply_pd_samples(w[:n], w[n:])
    mine = np.concatenate([mine1, mine2]).real
    wnorm = np.sqrt(grid_small.integrate(w[:n] ** 2 + w[n:] ** 2))
    err = np.sqrt(grid_small.integrate((oracle[:n] - mine[:n]) ** 2 + (oracle[n:] - mine[n:]) ** 2))
    assert err <= 1e-6 * wnorm


def test_sigma3_conjugation_symmetry(spectral_default, grid_default):
    # conj(L w) = -sigma_3 L sigma_3 conj(w)
    op = spectral_default.op
    rng = np.random.default_rng(15)
    w1 = rng.standard_normal(grid_default.n) + 1j * rng.standard_normal(grid_default.n)
    w2 = rng.standard_normal(grid_default.n) + 1j * rng.standard_normal(grid_default.n)
    a, b = op.apply_block(w1, w2)
    lhs = (np.conj(a), np.conj(b))
    s3w = (np.conj(w1), -np.conj(w2))
    c, d = op.apply_block(*s3w)
    rhs = (-c, d)
    assert np.max(np.abs(lhs[0] - rhs[0])) <= 1e-10
    assert np.max(np.abs(lhs[1] - rhs[1])) <= 1e-10


def test_eigenvalue_quadruple_structure(grid_small, model_default, spectral_small):
    count, inside = count_discrete_modes(grid_small, model_default, spectral_small.phi)
    # discrete eigenvalues come as {0, 0, +i eps, -i eps}: no real parts
    assert np.max(np.abs(inside.real)) <= 1e-6
    ups = np.sort(inside.imag)
    assert abs(ups[0] + ups[-1]) <= 1e-8  # symmetric pair


def test_degenerate_pairing_guard(spectral_default):
    import copy

    sd = copy.copy(spectral_default)
    sd.delta_prime = 1e-12
    with pytest.raises(DegeneratePairing):
        projections(sd)


# --- resonance probe -------------------------------------------------------


def test_free_threshold_resonance(spectral_default):
    probe = resonance_indicator(spectral_default.op, sign=+1, zero_potential=True)
    assert probe.indicator <= 1e-6
    assert probe.verdict == "resonance"


def test_default_no_resonance(spectral_default):
    for sign in (+1, -1):
        probe = resonance_indicator(spectral_default.op, sign=sign)
        assert probe.indicator >= 1e-2
        assert probe.verdict == "no_resonance"


def test_resonance_indicator_continuity(grid_default, model_default):
    vals = []
    for lam in (model_default.lam, model_default.lam + 1e-3):
        phi = solve_soliton(grid_default, model_default, lam=lam)
        op = LinearizedOperator(grid_default, model_default, phi, lam=lam)
        vals.append(resonance_indicator(op, sign=+1).indicator)
    assert abs(vals[0] - vals[1]) < 1e-2
