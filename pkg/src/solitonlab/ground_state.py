"""Free and trapped solitons, the branch lambda -> phi, mass curve delta.

The stationary profile solves

    -Lap phi + (lambda + V_h) phi - f(phi^2) phi = 0,   phi > 0, even,

by Newton iteration on the parity-reduced grid with continuation in h
(from the analytic free soliton) and in lambda (along the branch).  A
normalized-gradient-flow fallback provides an independent route into the
Newton basin for non-cubic nonlinearities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NewtonDiverged, NegativeSolution, SingularSystem, TailTooShort
from .grids import ComplexField, Grid, LINE1D, laplacian_samples
from .model import ModelConfig
from .operators import folded_schroedinger, parity, radial_laplacian_matrix

NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 60


def free_soliton_cubic(grid: Grid, mu: float) -> np.ndarray:
    """Closed-form free soliton sqrt(2 mu) sech(sqrt(mu) x) of the cubic model."""
    if mu <= 0:
        raise ValueError("free soliton needs mu = lambda + V(0) > 0")
    x = grid.nodes
    return np.sqrt(2.0 * mu) / np.cosh(np.sqrt(mu) * x)


def _stationary_residual(grid, model, lam, phi):
    vh = model.potential.vh(grid.nodes)
    s = phi**2
    return -laplacian_samples(grid, phi).real + (lam + vh) * phi - model.nonlinearity.f(s) * phi


def _lplus_coeff(grid, model, lam, phi):
    """Coefficient profile of L_plus = -Lap + coeff (the Newton Jacobian)."""
    vh = model.potential.vh(grid.nodes)
    s = phi**2
    f = model.nonlinearity
    return lam + vh - f.f(s) - 2.0 * f.fprime(s) * s


def _lminus_coeff(grid, model, lam, phi):
    vh = model.potential.vh(grid.nodes)
    return lam + vh - model.nonlinearity.f(phi**2)


def _newton_1d(grid, model, lam, seed):
    """Newton iteration on the even sector of the periodic grid."""
    p = parity(grid)
    phi = np.asarray(seed, dtype=float)
    for _ in range(NEWTON_MAX_ITER):
        res = _stationary_residual(grid, model, lam, phi)
        sup = np.max(np.abs(res))
        if sup <= NEWTON_TOL:
            return phi
        jac = folded_schroedinger(grid, _lplus_coeff(grid, model, lam, phi), "even")
        rhs = p.restrict_even(res)
        try:
            step = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(f"Newton Jacobian singular at lambda={lam}") from exc
        phi = phi - p.extend_even(step)
        if not np.all(np.isfinite(phi)):
            raise NewtonDiverged(f"Newton produced non-finite iterate at lambda={lam}")
    raise NewtonDiverged(f"no convergence after {NEWTON_MAX_ITER} iterations at lambda={lam}")


def _newton_radial(grid, model, lam, seed):
    lap = radial_laplacian_matrix(grid)
    phi = np.asarray(seed, dtype=float)
    for _ in range(NEWTON_MAX_ITER):
        vh = model.potential.vh(grid.nodes)
        s = phi**2
        res = -(lap @ phi) + (lam + vh) * phi - model.nonlinearity.f(s) * phi
        if np.max(np.abs(res)) <= NEWTON_TOL:
            return phi
        jac = -lap + np.diag(_lplus_coeff(grid, model, lam, phi))
        try:
            step = np.linalg.solve(jac, res)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(f"radial Newton Jacobian singular at lambda={lam}") from exc
        phi = phi - step
        if not np.all(np.isfinite(phi)):
            raise NewtonDiverged(f"radial Newton non-finite at lambda={lam}")
    raise NewtonDiverged(f"radial Newton: no convergence at lambda={lam}")


def _free_seed(grid, model, mu):
    """Seed profile for the h = 0 problem."""
    if mu <= 0:
        raise NewtonDiverged(f"mu = lambda + V(0) = {mu:.4g} <= 0: outside the existence window")
    f = model.nonlinearity
    if f.kind == "cubic" and grid.mode == LINE1D:
        return free_soliton_cubic(grid, mu)
    # amplitude from the smallest positive root of the field potential,
    # width from the linear tail rate sqrt(mu); refined by gradient flow
    phi_amp = np.linspace(1e-4, 50.0, 40000)
    u = -mu * phi_amp**2 + 2.0 * f.F(phi_amp**2)
    idx = np.nonzero((u[:-1] < 0) & (u[1:] >= 0))[0]
    amp = phi_amp[idx[0]] if len(idx) else np.sqrt(2.0 * mu)
    prof = amp / np.cosh(np.sqrt(mu) * grid.nodes)
    return gradient_flow_ground_state(grid, model, mu, seed=prof, steps=4000)


def gradient_flow_ground_state(grid, model, lam, seed, steps=2000, dtau=0.05):
    """Normalized gradient (imaginary-time) flow onto the ground state.

    Semi-implicit stepping (Laplacian treated implicitly) keeps the flow
    stable at O(1) pseudo-time steps.  Robustness oracle for Newton: used
    to produce seeds inside the Newton basin for non-cubic models.
    """
    phi = np.abs(np.asarray(seed, dtype=float)) + 1e-12
    vh = model.potential.vh(grid.nodes)
    mass = grid.integrate(phi**2)
    if grid.mode == LINE1D:
        denom = 1.0 + dtau * grid.wavenumbers**2

        def implicit(u):
            return np.fft.ifft(np.fft.fft(u) / denom).real
    else:
        lap = radial_laplacian_matrix(grid)
        lu = np.linalg.inv(np.eye(grid.n) - dtau * lap)

        def implicit(u):
            return lu @ u

    for _ in range(steps):
        expl = phi - dtau * ((lam + vh) * phi - model.nonlinearity.f(phi**2) * phi)
        phi = np.abs(implicit(expl))
        phi *= np.sqrt(mass / grid.integrate(phi**2))
    return phi


def solve_soliton(grid: Grid, model: ModelConfig, lam=None, seed=None, h_steps=8) -> ComplexField:
    """Trapped (or free) soliton at frequency lam; Newton + h-continuation.

    With no seed, the h = 0 soliton is computed first and the potential
    scale is switched on gradually.  Raises NewtonDiverged / NegativeSolution.
    """
    lam = model.lam if lam is None else float(lam)
    newton = _newton_1d if grid.mode == LINE1D else _newton_radial
    if seed is not None:
        seed = np.asarray(seed, dtype=float)
        if np.any(seed < -1e-12):
            raise ValueError("seed profile must be nonnegative")
        phi = newton(grid, model, lam, seed)
    else:
        mu = lam + model.potential.v0()
        phi = _free_seed(grid, model, mu)
        h_target = model.potential.h
        if h_target != 0.0:
            # continuation from the constant-potential problem: V(h x) with
            # h ramped linearly; each step reuses the previous profile
            base_depth = model.potential.depth
            base_profile = model.potential._profile
            from .model import PotentialSpec  # local import to avoid cycle

            for k in range(1, h_steps + 1):
                hk = h_target * k / h_steps
                pot_k = PotentialSpec(depth=base_depth, h=hk, profile=base_profile, name=model.potential.name)
                model_k = ModelConfig(mode=model.mode, lam=lam, potential=pot_k, nonlinearity=model.nonlinearity)
                phi = newton(grid, model_k, lam, phi)
        else:
            phi = newton(grid, model, lam, phi)
    if np.min(phi) < -1e-9 or np.max(phi) <= 0:
        raise NegativeSolution("Newton limit is not a positive profile")
    return ComplexField(grid, phi.astype(np.complex128))


def dlambda_phi(grid: Grid, model: ModelConfig, phi: ComplexField, lam=None) -> ComplexField:
    """d phi / d lambda from the linear system L_plus u = -phi.

    Differentiating the stationary equation in lambda gives
    L_plus (d phi/d lambda) = -phi.
    """
    lam = model.lam if lam is None else float(lam)
    pr = phi.values.real
    if grid.mode == LINE1D:
        p = parity(grid)
        jac = folded_schroedinger(grid, _lplus_coeff(grid, model, lam, pr), "even")
        rhs = p.restrict_even(-pr)
        try:
            u = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem("L_plus singular on the even sector") from exc
        resid = np.linalg.norm(jac @ u - rhs) / max(np.linalg.norm(rhs), 1e-300)
        if resid > 1e-8:
            raise SingularSystem(f"L_plus solve residual {resid:.2e} (delta' ~ 0 degeneracy?)")
        return ComplexField(grid, p.extend_even(u).astype(np.complex128))
    lap = radial_laplacian_matrix(grid)
    jac = -lap + np.diag(_lplus_coeff(grid, model, lam, pr))
    u = np.linalg.solve(jac, -pr)
    return ComplexField(grid, u.astype(np.complex128))


@dataclass
class SolitonBranch:
    """Sampled branch lambda -> phi with mass curve and diagnostics."""

    grid: Grid
    model: ModelConfig
    lams: np.ndarray
    phis: np.ndarray          # (n_lam, n) profiles
    delta: np.ndarray         # ||phi||_2^2
    ddelta: np.ndarray        # d delta / d lambda (centered differences at step dlam)
    dphis: np.ndarray         # d phi / d lambda from the L_plus solve
    decay_rates: np.ndarray
    unstable: np.ndarray      # bool flags where ddelta <= 0

    def field(self, k) -> ComplexField:
        return ComplexField(self.grid, self.phis[k].astype(np.complex128))

    def to_csv(self, path):
        data = np.column_stack([self.lams, self.delta, self.ddelta, self.decay_rates])
        with open(path, "w") as fh:
            fh.write("lambda,delta,ddelta,decay_rate\n")
            np.savetxt(fh, data, delimiter=",", fmt="%.17g")


def branch(grid: Grid, model: ModelConfig, lam_lo, lam_hi, steps, dlam_fd=1e-3) -> SolitonBranch:
    """Continuation of the soliton branch over [lam_lo, lam_hi].

    delta' is computed from dedicated +-dlam_fd Newton solves seeded by the
    node profile (centered differences), and cross-checkable against the
    L_plus route.
    """
    lams = np.linspace(lam_lo, lam_hi, steps)
    phis, delta, ddelta, dphis, rates = [], [], [], [], []
    phi_prev = None
    for lam in lams:
        try:
            fld = solve_soliton(grid, model, lam=lam, seed=phi_prev)
        except (NewtonDiverged, NegativeSolution) as exc:
            raise type(exc)(f"branch continuation failed at lambda={lam:.6g}: {exc}") from exc
        phi = fld.values.real
        phi_prev = phi
        phis.append(phi)
        delta.append(grid.integrate(phi**2))
        lo = solve_soliton(grid, model, lam=lam - dlam_fd, seed=phi).values.real
        hi = solve_soliton(grid, model, lam=lam + dlam_fd, seed=phi).values.real
        ddelta.append((grid.integrate(hi**2) - grid.integrate(lo**2)) / (2 * dlam_fd))
        dphis.append(dlambda_phi(grid, model, fld, lam=lam).values.real)
        rates.append(decay_fit(fld)[0])
    delta = np.array(delta)
    ddelta = np.array(ddelta)
    return SolitonBranch(
        grid=grid,
        model=model,
        lams=lams,
        phis=np.array(phis),
        delta=delta,
        ddelta=ddelta,
        dphis=np.array(dphis),
        decay_rates=np.array(rates),
        unstable=ddelta <= 0,
    )


def decay_fit(phi: ComplexField, floor=1e-13):
    """Exponential decay rate of the soliton tail.

    Least-squares slope of log phi over the window where the profile has
    fallen below 1e-3 of its peak but stays above the noise floor.
    Returns (rate, fit_residual).
    """
    grid = phi.grid
    vals = np.abs(phi.values.real)
    peak = vals.max()
    if grid.mode == LINE1D:
        half = grid.n // 2
        x = grid.nodes[half:]
        v = vals[half:]
    else:
        x = grid.nodes
        v = vals
    mask = (v < 1e-3 * peak) & (v > floor * peak)
    if mask.sum() < 20:
        raise TailTooShort(f"only {int(mask.sum())} usable tail points")
    coeffs, res = np.polyfit(x[mask], np.log(v[mask]), 1, full=True)[:2]
    rate = -coeffs[0]
    resid = float(np.sqrt(res[0] / mask.sum())) if len(res) else 0.0
    return float(rate), resid
