"""Linearized operator L, discrete spectrum, Riesz projections, resonances.

In the real vector form (Re chi, Im chi) the linearization around the
soliton is the block operator

    L = [[0, L_minus], [-L_plus, 0]],
    L_minus = -Lap + V_h + lambda - f(phi^2),
    L_plus  = L_minus - 2 f'(phi^2) phi^2.

The internal mode +-i*eps with eigenfunctions (xi, +-i eta) is computed
from the product eigenproblem L_minus L_plus xi = eps^2 xi restricted to
the odd-parity sector (d=1), via the symmetrized form
S L_plus S (with S = L_minus^(1/2)) followed by inverse-iteration
refinement on the product operator itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePairing,
    EmbeddedMode,
    GapEmpty,
    IllConditioned,
)
from .grids import ComplexField, Grid, TwoComponentField, laplacian_samples
from .ground_state import dlambda_phi, solve_soliton
from .model import ModelConfig
from .operators import folded_schroedinger, parity

PROJ_TOL = 1e-8


class LinearizedOperator:
    """Matrix-free and assembled forms of L_plus, L_minus and L."""

    def __init__(self, grid: Grid, model: ModelConfig, phi: ComplexField, lam=None):
        self.grid = grid
        self.model = model
        self.lam = model.lam if lam is None else float(lam)
        self.phi = phi
        pr = phi.values.real
        s = pr**2
        f = model.nonlinearity
        vh = model.potential.vh(grid.nodes)
        self.c_minus = self.lam + vh - f.f(s)
        self.c_plus = self.c_minus - 2.0 * f.fprime(s) * s
        self._folded = {}

    # essential-spectrum edge
    @property
    def edge(self):
        return self.lam

    def apply_lminus(self, v):
        return -laplacian_samples(self.grid, v) + self.c_minus * v

    def apply_lplus(self, v):
        return -laplacian_samples(self.grid, v) + self.c_plus * v

    def apply_block(self, w1, w2):
        """L (w1, w2) = (L_minus w2, -L_plus w1) on raw sample arrays."""
        return self.apply_lminus(w2), -self.apply_lplus(w1)

    def folded(self, which, sector):
        key = (which, sector)
        if key not in self._folded:
            coeff = self.c_minus if which == "minus" else self.c_plus
            self._folded[key] = folded_schroedinger(self.grid, coeff, sector)
        return self._folded[key]


def apply_L(op: LinearizedOperator, w: TwoComponentField) -> TwoComponentField:
    a, b = op.apply_block(w.first, w.second)
    return TwoComponentField(op.grid, a, b)


@dataclass
class SpectralData:
    """Internal mode, zero modes and pairings of L(lambda)."""

    grid: Grid
    model: ModelConfig
    lam: float
    op: LinearizedOperator
    phi: ComplexField
    dlam_phi: ComplexField
    delta_prime: float
    eps: float
    xi: ComplexField
    eta: ComplexField
    kappa: float                  # <xi, eta>
    n_order: int                  # smallest N with (N+1) eps > lambda
    residual_product: float       # ||L_minus L_plus xi - eps^2 xi||_2
    residual_eta: float           # ||L_minus eta - eps xi||_2

    def pairing_identity(self):
        """<xi,eta> computed via eps^{-1} <L_minus eta, eta>."""
        g = self.grid
        lm_eta = self.op.apply_lminus(self.eta.values).real
        return float(g.integrate(lm_eta * self.eta.values.real) / self.eps)


def _refine_product_eigenpair(grid, op, xi, eps2, sector="odd", max_iter=4, tol=2.5e-9):
    """Inverse iteration on (L_minus L_plus - eps^2) in the reduced sector."""
    p = parity(grid)
    lm = op.folded("minus", sector)
    lp = op.folded("plus", sector)
    prod = lm @ lp
    v = p.restrict_odd(xi) if sector == "odd" else p.restrict_even(xi)
    v = v / np.linalg.norm(v)
    resid = np.inf
    for _ in range(max_iter):
        r = prod @ v - eps2 * v
        resid = np.linalg.norm(r)
        if resid <= 0.1 * tol:
            break
        try:
            w = np.linalg.solve(prod - eps2 * np.eye(len(v)), v)
        except np.linalg.LinAlgError:
            break
        v = w / np.linalg.norm(w)
        eps2 = float(v @ (prod @ v))
    extend = p.extend_odd if sector == "odd" else p.extend_even
    return extend(v), eps2, resid


def discrete_spectrum(grid: Grid, model: ModelConfig, phi: ComplexField = None, lam=None,
                      dlam_fd=1e-3, warm=None) -> SpectralData:
    """Zero modes, internal mode and pairings at one branch point.

    warm: optional (xi_samples, eps) pair from a neighbouring lambda; skips
    the dense symmetric eigensolve.
    """
    lam = model.lam if lam is None else float(lam)
    if model.potential.h <= 0:
        raise GapEmpty("h = 0: translation/boost modes sit at zero, no gap mode")
    if phi is None:
        phi = solve_soliton(grid, model, lam=lam)
    op = LinearizedOperator(grid, model, phi, lam=lam)
    p = parity(grid)

    if warm is None:
        lm = op.folded("minus", "odd")
        lp = op.folded("plus", "odd")
        wm, um = np.linalg.eigh(lm)
        if wm[0] <= 0:
            raise GapEmpty(f"L_minus not positive on the odd sector (min eig {wm[0]:.3e})")
        shalf = (um * np.sqrt(wm)) @ um.T
        k = shalf @ lp @ shalf
        k = 0.5 * (k + k.T)
        ev, zv = np.linalg.eigh(k)
        eps2 = float(ev[0])
        if eps2 <= 0:
            raise GapEmpty(f"no positive gap eigenvalue (smallest product eig {eps2:.3e})")
        if eps2 >= lam**2:
            raise GapEmpty(f"smallest product eigenvalue {eps2:.4e} outside the gap (lambda^2 = {lam**2:.4e})")
        xi = p.extend_odd(shalf @ zv[:, 0])
    else:
        xi, eps_w = warm
        xi = np.asarray(xi, dtype=float)
        eps2 = float(eps_w) ** 2

    xi, eps2, resid = _refine_product_eigenpair(grid, op, xi, eps2)
    eps = float(np.sqrt(eps2))
    if eps >= lam:
        raise EmbeddedMode(f"internal mode eps = {eps:.6g} >= lambda = {lam:.6g}")

    # normalize ||xi||_2 = 1 in the continuum norm and fix signs
    xi = xi / np.sqrt(grid.integrate(xi**2))
    from .grids import derivative_samples

    dphi_x = derivative_samples(grid, phi.values).real
    if grid.integrate(xi * dphi_x) < 0:
        xi = -xi
    eta = op.apply_lplus(xi).real / eps
    kappa = float(grid.integrate(xi * eta))
    if kappa <= 0:
        # sign convention <xi,eta> > 0 must hold after the dphi_x fixing;
        # a negative value signals an eigenvector of the wrong kind
        raise DegeneratePairing(f"<xi,eta> = {kappa:.3e} <= 0")

    res_eta = op.apply_lminus(eta).real - eps * xi
    residual_eta = float(np.sqrt(grid.integrate(res_eta**2)))
    res_prod = op.apply_lminus(op.apply_lplus(xi).real).real - eps2 * xi
    residual_product = float(np.sqrt(grid.integrate(res_prod**2)))

    dphi = dlambda_phi(grid, model, phi, lam=lam)
    lo = solve_soliton(grid, model, lam=lam - dlam_fd, seed=phi.values.real)
    hi = solve_soliton(grid, model, lam=lam + dlam_fd, seed=phi.values.real)
    delta_prime = float(
        (grid.integrate(np.abs(hi.values) ** 2) - grid.integrate(np.abs(lo.values) ** 2)) / (2 * dlam_fd)
    )

    n_order = 1
    while (n_order + 1) * eps <= lam:
        n_order += 1

    return SpectralData(
        grid=grid,
        model=model,
        lam=lam,
        op=op,
        phi=phi,
        dlam_phi=dphi,
        delta_prime=delta_prime,
        eps=eps,
        xi=ComplexField(grid, xi.astype(np.complex128)),
        eta=ComplexField(grid, eta.astype(np.complex128)),
        kappa=kappa,
        n_order=n_order,
        residual_product=residual_product,
        residual_eta=residual_eta,
    )


class Projections:
    """Riesz projection P_d (rank 4) and P_c = 1 - P_d.

    P_d u = (2/delta') [ <phi, u1> (dphi, 0) + <dphi, u2> (0, phi) ]
          + (1/kappa)  [ <eta, u1> (xi, 0)  + <xi, u2> (0, eta) ],

    with bilinear pairings <f, g> = integral f g dx.  The functionals
    annihilate exactly the four orthogonality conditions of the modulation
    decomposition, and the range is spanned by the zero modes (0, phi),
    (dphi, 0) and the internal-mode profiles (xi, 0), (0, eta).
    """

    def __init__(self, sd: SpectralData):
        if sd.delta_prime < PROJ_TOL or sd.kappa < PROJ_TOL:
            raise DegeneratePairing(
                f"delta' = {sd.delta_prime:.3e}, <xi,eta> = {sd.kappa:.3e}: projection ill-defined"
            )
        self.sd = sd
        self.grid = sd.grid
        self.phi = sd.phi.values.real
        self.dphi = sd.dlam_phi.values.real
        self.xi = sd.xi.values.real
        self.eta = sd.eta.values.real
        # biorthogonality demands the pairing-consistent normalizations
        # (2<phi,dphi> agrees with the finite-difference delta' to ~1e-6;
        # using the pairing keeps P_d idempotent to machine precision)
        self.delta_prime = 2.0 * float(self.grid.integrate(self.phi * self.dphi))
        self.kappa = float(self.grid.integrate(self.xi * self.eta))

    def apply_pd_samples(self, w1, w2):
        g = self.grid
        a1 = 2.0 / self.delta_prime * g.integrate(self.phi * w1)
        a2 = 2.0 / self.delta_prime * g.integrate(self.dphi * w2)
        b1 = g.integrate(self.eta * w1) / self.kappa
        b2 = g.integrate(self.xi * w2) / self.kappa
        out1 = a1 * self.dphi + b1 * self.xi
        out2 = a2 * self.phi + b2 * self.eta
        return out1, out2

    def pd(self, w: TwoComponentField) -> TwoComponentField:
        o1, o2 = self.apply_pd_samples(w.first, w.second)
        return TwoComponentField(self.grid, o1, o2)

    def pc(self, w: TwoComponentField) -> TwoComponentField:
        o1, o2 = self.apply_pd_samples(w.first, w.second)
        return TwoComponentField(self.grid, w.first - o1, w.second - o2)

    def pc_samples(self, w1, w2):
        o1, o2 = self.apply_pd_samples(w1, w2)
        return w1 - o1, w2 - o2

    def pd_block(self, sector):
        """Dense P_d on the parity-reduced stacked space (for deflation)."""
        p = parity(self.grid)
        g = self.grid
        if sector == "even":
            restrict = p.restrict_even
            vecs = [(self.dphi, None, self.phi, 2.0 / self.delta_prime), (None, self.phi, self.dphi, 2.0 / self.delta_prime)]
        else:
            restrict = p.restrict_odd
            vecs = [(self.xi, None, self.eta, 1.0 / self.kappa), (None, self.eta, self.xi, 1.0 / self.kappa)]
        m = len(restrict(self.phi))
        out = np.zeros((2 * m, 2 * m))
        dx_w = g.dx  # orthonormal folding keeps the quadrature weight dx
        for first, second, functional, scale in vecs:
            col = np.zeros(2 * m)
            if first is not None:
                col[:m] = restrict(first)
                row = np.concatenate([restrict(functional), np.zeros(m)])
            else:
                col[m:] = restrict(second)
                row = np.concatenate([np.zeros(m), restrict(functional)])
            out += scale * dx_w * np.outer(col, row)
        return out


def projections(sd: SpectralData) -> Projections:
    return Projections(sd)


# ---------------------------------------------------------------------------
# threshold resonance probe (d = 1 matching determinant)


@dataclass
class ResonanceProbe:
    threshold: complex            # mu = +- i lambda
    indicator: float              # normalized matching determinant
    verdict: str                  # "resonance" or "no_resonance"
    selftest: float               # free-coefficient constant-solution drift


def _rk4(fun, y, x, dx, steps):
    for _ in range(steps):
        k1 = fun(x, y)
        k2 = fun(x + dx / 2, y + dx / 2 * k1)
        k3 = fun(x + dx / 2, y + dx / 2 * k2)
        k4 = fun(x + dx, y + dx * k3)
        y = y + dx / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        x = x + dx
    return y


def resonance_indicator(op: LinearizedOperator, sign=+1, x_max=30.0, n_steps=3000,
                        threshold=1e-3, zero_potential=False) -> ResonanceProbe:
    """Bounded-solution matching determinant at the threshold mu = sign*i*lambda.

    Solves (L - mu) h = 0 as a 4th-order ODE system from both box ends with
    the admissible asymptotics (one decaying channel, one bounded channel)
    and matches at x = 0.  The indicator is |det| of the column-normalized
    4x4 matching matrix: ~0 iff a bounded threshold solution exists.

    zero_potential drops V_big (free operator L_0); the free problem has
    the constant resonance profile (1, sign*i).
    """
    lam = op.lam
    mu = sign * 1j * lam
    grid = op.grid
    x_max = min(x_max, grid.half_width - 5.0)
    from scipy.interpolate import CubicSpline

    if zero_potential:
        cp_f = cm_f = lambda x: np.full_like(np.asarray(x, dtype=float), lam)
    else:
        mask = np.abs(grid.nodes) <= x_max + 1.0
        xs = grid.nodes[mask]
        cp_f = CubicSpline(xs, op.c_plus[mask])
        cm_f = CubicSpline(xs, op.c_minus[mask])

    def rhs_ode(x, y):
        # y = (h1, h2, h1', h2'); h1'' = c_plus h1 + mu h2 ; h2'' = c_minus h2 - mu h1
        out = np.empty((4, y.shape[1]), dtype=complex)
        out[0] = y[2]
        out[1] = y[3]
        out[2] = cp_f(x) * y[0] + mu * y[1]
        out[3] = cm_f(x) * y[1] - mu * y[0]
        return out

    root = np.sqrt(2.0 * lam)
    si = sign * 1j
    v_dec = np.array([1.0, -si, -root, si * root], dtype=complex)
    v_flat = np.array([1.0, si, 0.0, 0.0], dtype=complex)

    # integrator self-test: the free constant solution must stay constant
    free_probe = resonance_free_drift(lam, sign, x_max, n_steps)
    if free_probe > 1e-8:
        raise IllConditioned(f"threshold integrator drift {free_probe:.2e} on the free problem")

    dx = x_max / n_steps
    y_right = np.stack([v_dec, v_flat], axis=1)
    y_right = _rk4(rhs_ode, y_right, x_max, -dx, n_steps)
    v_dec_l = np.array([1.0, -si, root, -si * root], dtype=complex)
    y_left = np.stack([v_dec_l, v_flat], axis=1)
    y_left = _rk4(rhs_ode, y_left, -x_max, dx, n_steps)

    m4 = np.concatenate([y_right, y_left], axis=1)
    m4 = m4 / np.linalg.norm(m4, axis=0, keepdims=True)
    indicator = float(abs(np.linalg.det(m4)))
    verdict = "resonance" if indicator < threshold else "no_resonance"
    return ResonanceProbe(threshold=mu, indicator=indicator, verdict=verdict, selftest=free_probe)


def resonance_free_drift(lam, sign, x_max, n_steps):
    """Drift of the exact free bounded solution across the integration range."""
    mu = sign * 1j * lam
    si = sign * 1j

    def rhs_free(x, y):
        out = np.empty_like(y)
        out[0] = y[2]
        out[1] = y[3]
        out[2] = lam * y[0] + mu * y[1]
        out[3] = lam * y[1] - mu * y[0]
        return out

    v_flat = np.array([1.0, si, 0.0, 0.0], dtype=complex)
    y = _rk4(rhs_free, v_flat.reshape(4, 1), x_max, -x_max / n_steps, n_steps)
    return float(np.linalg.norm(y[:, 0] - v_flat))


def count_discrete_modes(grid: Grid, model: ModelConfig, phi: ComplexField, lam=None, margin=0.95):
    """Eigenvalues of the assembled block L inside the spectral gap.

    Dense (2n x 2n) eigensolve; intended for verification on moderate
    grids.  Returns (count, eigenvalues inside |mu| < margin*lambda).
    """
    lam = model.lam if lam is None else float(lam)
    op = LinearizedOperator(grid, model, phi, lam=lam)
    from .operators import d2_matrix

    n = grid.n
    lm = -d2_matrix(grid) + np.diag(op.c_minus)
    lp = -d2_matrix(grid) + np.diag(op.c_plus)
    big = np.zeros((2 * n, 2 * n))
    big[:n, n:] = lm
    big[n:, :n] = -lp
    ev = np.linalg.eigvals(big)
    inside = ev[np.abs(ev) < margin * lam]
    return len(inside), inside
