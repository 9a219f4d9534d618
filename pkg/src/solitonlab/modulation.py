"""Modulation decomposition, amplitude-equation fits, normal form, Riccati law.

A trajectory psi(t) near the soliton manifold is decomposed as

    psi = e^{i Theta} (phi^lam + z1 xi^lam + i z2 eta^lam + R),

with (Theta, lam, z1, z2) fixed by the four orthogonality conditions

    int Re(R) phi = int Im(R) dphi = int Re(R) eta = int Im(R) xi = 0,

via Newton iteration warm-started snapshot to snapshot.  z := z1 - i z2.
The tracked z(t) is regressed onto {z, z^2, z zbar, zbar^2, z^2 zbar}; the
quadratic normal form z -> beta and the Riccati fit of |beta|^-2 extract
the dynamical damping coefficient Re Y_1 for comparison with the resolvent
formula.

In the symmetric default scenario (even well, centered soliton) the
internal mode is parity-odd, so every quadratic coefficient of the
z-equation vanishes identically: the fitted quadratics sit at the
regression noise floor and the normal form is a near-identity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .dynamics import DecayFit, EvolutionResult, decay_exponent
from .errors import (
    BranchExhausted,
    IllConditionedRegression,
    NewtonDiverged,
    NoOscillation,
    NonConvergent,
    NotDecaying,
    SmallDenominator,
)
from .grids import ComplexField, Grid, weighted_norm
from .linearization import discrete_spectrum
from .model import ModelConfig


class SpectralBranch:
    """lambda-sampled soliton + internal-mode tables with spline lookup.

    Stores phi, dphi/dlam, xi, eta (and their lambda-derivatives by
    centered differences) on a uniform lambda grid, plus eps, kappa,
    delta'.  Continuation is serial; each node is warm-started from its
    neighbour.
    """

    def __init__(self, grid: Grid, model: ModelConfig, lam_lo, lam_hi, steps):
        self.grid = grid
        self.model = model
        lams = np.linspace(lam_lo, lam_hi, steps)
        phis, dphis, xis, etas = [], [], [], []
        eps, kappas, dprimes = [], [], []
        warm = None
        for lam in lams:
            seed = phis[-1] if phis else None
            sd = discrete_spectrum(grid, model, lam=lam, warm=warm,
                                   phi=None if seed is None else _resolve_phi(grid, model, lam, seed))
            warm = (sd.xi.values.real, sd.eps)
            phis.append(sd.phi.values.real)
            dphis.append(sd.dlam_phi.values.real)
            xis.append(sd.xi.values.real)
            etas.append(sd.eta.values.real)
            eps.append(sd.eps)
            kappas.append(sd.kappa)
            dprimes.append(sd.delta_prime)
        self.lams = lams
        self.phis = np.array(phis)
        self.dphis = np.array(dphis)
        self.xis = np.array(xis)
        self.etas = np.array(etas)
        self.eps = np.array(eps)
        self.kappas = np.array(kappas)
        self.delta_primes = np.array(dprimes)
        dxis = np.gradient(self.xis, lams, axis=0)
        detas = np.gradient(self.etas, lams, axis=0)
        self._sp = {
            "phi": CubicSpline(lams, self.phis, axis=0),
            "dphi": CubicSpline(lams, self.dphis, axis=0),
            "xi": CubicSpline(lams, self.xis, axis=0),
            "eta": CubicSpline(lams, self.etas, axis=0),
            "dxi": CubicSpline(lams, dxis, axis=0),
            "deta": CubicSpline(lams, detas, axis=0),
            "eps": CubicSpline(lams, self.eps),
            "kappa": CubicSpline(lams, self.kappas),
            "delta_prime": CubicSpline(lams, self.delta_primes),
        }

    def contains(self, lam):
        return self.lams[0] <= lam <= self.lams[-1]

    def at(self, lam):
        if not self.contains(lam):
            raise BranchExhausted(
                f"lambda = {lam:.6g} outside the stored branch [{self.lams[0]:.6g}, {self.lams[-1]:.6g}]"
            )
        return {name: sp(lam) for name, sp in self._sp.items()}


def _resolve_phi(grid, model, lam, seed):
    from .ground_state import solve_soliton

    return solve_soliton(grid, model, lam=lam, seed=seed)


@dataclass
class ModulationPoint:
    t: float
    theta: float                  # total phase (unwrapped)
    lam: float
    z: complex                    # z1 - i z2
    r_field: ComplexField
    r_weighted: float             # ||rho_nu R||_2
    r_sup: float
    residuals: np.ndarray         # the four orthogonality residuals


@dataclass
class ModulationSeries:
    grid: Grid
    model: ModelConfig
    times: np.ndarray
    theta: np.ndarray
    lam: np.ndarray
    z: np.ndarray
    r_weighted: np.ndarray
    r_sup: np.ndarray
    residuals: np.ndarray          # (n_t, 4)
    nu: float = 4.0
    beta: np.ndarray | None = None

    def to_csv(self, path):
        beta = self.beta if self.beta is not None else np.full_like(self.z, np.nan + 0j)
        cols = np.column_stack([
            self.times, self.theta, self.lam, self.z.real, self.z.imag,
            beta.real, beta.imag, self.r_weighted, self.r_sup, self.residuals,
        ])
        with open(path, "w") as fh:
            fh.write("t,theta,lambda,z_re,z_im,beta_re,beta_im,R_w2norm,R_inf,res1,res2,res3,res4\n")
            np.savetxt(fh, cols, delimiter=",", fmt="%.17g")


def _conditions(grid, psi_rot, tab, z1, z2):
    r = psi_rot - tab["phi"] - z1 * tab["xi"] - 1j * z2 * tab["eta"]
    c = np.array([
        grid.integrate(r.real * tab["phi"]),
        grid.integrate(r.imag * tab["dphi"]),
        grid.integrate(r.real * tab["eta"]),
        grid.integrate(r.imag * tab["xi"]),
    ])
    return r, c


def decompose(psi: ComplexField, branch: SpectralBranch, guess, nu=4.0,
              tol_factor=1e-12, max_iter=50, jac_refresh=1e-3) -> ModulationPoint:
    """Newton solve of the four orthogonality conditions.

    guess = (theta, lam, z1, z2).  The Jacobian is analytic, built from the
    branch tables; it is refreshed only when lambda moved more than
    jac_refresh since it was last built.
    """
    grid = psi.grid
    theta, lam, z1, z2 = map(float, guess)
    norm_psi = psi.norm2()
    tol = max(tol_factor * norm_psi, 1e-14)
    tab = branch.at(lam)
    jac, lam_jac = None, None
    for _ in range(max_iter):
        psi_rot = np.exp(-1j * theta) * psi.values
        r, c = _conditions(grid, psi_rot, tab, z1, z2)
        if np.max(np.abs(c)) <= tol:
            rf = ComplexField(grid, r)
            return ModulationPoint(
                t=np.nan, theta=theta, lam=lam, z=complex(z1, -z2), r_field=rf,
                r_weighted=weighted_norm(rf, nu), r_sup=float(np.max(np.abs(r))),
                residuals=c,
            )
        if jac is None or abs(lam - lam_jac) > jac_refresh:
            lam_jac = lam
            dr_dtheta = -1j * psi_rot
            dr_dlam = -(tab["dphi"] + z1 * tab["dxi"] + 1j * z2 * tab["deta"])
            dr_dz1 = -tab["xi"]
            dr_dz2 = -1j * tab["eta"]
            rows = [
                (tab["phi"], tab["dphi"], np.real),
                (tab["dphi"], _spline_d(branch, "dphi", lam), np.imag),
                (tab["eta"], tab["deta"], np.real),
                (tab["xi"], tab["dxi"], np.imag),
            ]
            jac = np.zeros((4, 4))
            for row, (w, dw, sel) in enumerate(rows):
                jac[row, 0] = grid.integrate(sel(dr_dtheta) * w)
                jac[row, 1] = grid.integrate(sel(dr_dlam) * w + sel(r) * dw)
                jac[row, 2] = grid.integrate(sel(dr_dz1) * w)
                jac[row, 3] = grid.integrate(sel(dr_dz2) * w)
        try:
            step = np.linalg.solve(jac, c)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged("singular modulation Jacobian") from exc
        theta -= step[0]
        lam -= step[1]
        z1 -= step[2]
        z2 -= step[3]
        if not branch.contains(lam):
            raise BranchExhausted(f"Newton left the branch at lambda = {lam:.6g}")
        tab = branch.at(lam)
    raise NewtonDiverged(f"modulation Newton: no convergence in {max_iter} iterations")


def _spline_d(branch, name, lam):
    return branch._sp[name](lam, 1)


def track(evo: EvolutionResult, branch: SpectralBranch, nu=4.0, guess=None) -> ModulationSeries:
    """Warm-started decomposition of every snapshot of an evolution."""
    grid = evo.grid
    if guess is None:
        guess = (0.0, evo.model.lam, 0.0, 0.0)
    pts = []
    g = guess
    for k, t in enumerate(evo.times):
        psi = ComplexField(grid, evo.snapshots[k])
        try:
            pt = decompose(psi, branch, g, nu=nu)
        except NewtonDiverged as exc:
            if not pts:
                raise
            warnings.warn(f"tracking truncated at t = {t:.2f}: {exc}")
            break
        pt.t = float(t)
        pts.append(pt)
        g = (pt.theta, pt.lam, pt.z.real, -pt.z.imag)
    return ModulationSeries(
        grid=grid,
        model=evo.model,
        times=np.array([p.t for p in pts]),
        theta=np.array([p.theta for p in pts]),
        lam=np.array([p.lam for p in pts]),
        z=np.array([p.z for p in pts]),
        r_weighted=np.array([p.r_weighted for p in pts]),
        r_sup=np.array([p.r_sup for p in pts]),
        residuals=np.array([p.residuals for p in pts]),
        nu=nu,
    )


# ---------------------------------------------------------------------------
# amplitude-equation fits


@dataclass
class ZOdeCoefficients:
    linear: complex
    quad: dict                    # {(2,0): c, (1,1): c, (0,2): c}
    cubic_resonant: complex       # coefficient of z^2 zbar
    residual: float
    n_points: int


def _dot4(times, series):
    """4th-order centered derivative; first/last two samples dropped."""
    dt = times[1] - times[0]
    d = (series[:-4] - 8 * series[1:-3] + 8 * series[3:-1] - series[4:]) / (12 * dt)
    return times[2:-2], series[2:-2], d


def fit_z_ode(times, z, cond_cap=1e8) -> ZOdeCoefficients:
    """Least-squares regression of zdot onto {z, z^2, z zbar, zbar^2, z^2 zbar}.

    The resonant cubic column shares the e^{i eps t} harmonic with z and is
    identified only through the amplitude decay, so it enters the design
    matrix amplitude-centered, z (|z|^2 - mean|z|^2); the reported linear
    coefficient is corrected back to the raw parametrization.  For series
    with no measurable amplitude variation the cubic coefficient is
    reported as zero (not identifiable).
    """
    times = np.asarray(times, dtype=float)
    z = np.asarray(z, dtype=complex)
    if len(z) < 200:
        raise IllConditionedRegression("need at least 200 tracked points")
    t, zc, zd = _dot4(times, z)
    if np.max(np.abs(zc)) < 1e-8:
        raise IllConditionedRegression("oscillation amplitude too small to regress")
    a2 = np.abs(zc) ** 2
    m = a2.mean()
    centered = zc * (a2 - m)
    cols = [zc, zc**2, zc * np.conj(zc), np.conj(zc) ** 2]
    cubic_identifiable = np.linalg.norm(centered) > 1e-3 * np.sqrt(m) * np.linalg.norm(zc)
    if cubic_identifiable:
        cols.append(centered)
    basis = np.column_stack(cols)
    scale = np.linalg.norm(basis, axis=0)
    cond = np.linalg.cond(basis / scale)
    if cond > cond_cap:
        raise IllConditionedRegression(f"design matrix condition number {cond:.2e}")
    coef, *_ = np.linalg.lstsq(basis, zd, rcond=None)
    fitted = basis @ coef
    resid = float(np.linalg.norm(zd - fitted) / max(np.linalg.norm(zd), 1e-300))
    cubic = complex(coef[4]) if cubic_identifiable else 0.0 + 0.0j
    return ZOdeCoefficients(
        linear=complex(coef[0]) - cubic * m,
        quad={(2, 0): complex(coef[1]), (1, 1): complex(coef[2]), (0, 2): complex(coef[3])},
        cubic_resonant=cubic,
        residual=resid,
        n_points=len(zd),
    )


def fit_lambda_dot(times, lam, z):
    """Regression of lambdadot onto {1, Re z^2, Im z^2, |z|^2}.

    Returns (c20 complex, c11 real, c11_stderr): the diagonal coefficient
    c11 must be statistically indistinguishable from zero (the lambdadot
    expansion has no |z|^2 term at quadratic order).
    """
    times = np.asarray(times, dtype=float)
    lam = np.asarray(lam, dtype=float)
    z = np.asarray(z, dtype=complex)
    t, lc, ld = _dot4(times, lam)
    zc = z[2:-2]
    basis = np.column_stack([np.ones_like(t), (zc**2).real, (zc**2).imag, np.abs(zc) ** 2])
    coef, *_ = np.linalg.lstsq(basis, ld, rcond=None)
    resid = ld - basis @ coef
    dof = max(len(ld) - 4, 1)
    cov = (resid @ resid / dof) * np.linalg.inv(basis.T @ basis)
    c20 = complex(coef[1], coef[2])
    return c20, float(coef[3]), float(np.sqrt(cov[3, 3]))


@dataclass
class NormalFormModel:
    p1_coeffs: dict               # {(2,0): real coeff, ...} of P_1
    beta: np.ndarray
    z_coeffs: ZOdeCoefficients
    beta_coeffs: ZOdeCoefficients
    quad_reduction: float         # |quad(beta)| / |quad(z)| (aggregate)
    max_beta_minus_z: float       # max |beta - z| / |z|^2
    re_y1_dyn: float = float("nan")
    riccati_r2: float = float("nan")
    lam_inf: float = float("nan")


def normal_form_quadratic(times, z, coeffs: ZOdeCoefficients, eps: float) -> NormalFormModel:
    """beta = z + P_1(z, zbar) with P_1 from the fitted quadratic coefficients.

    P_1 = - sum_{m+n=2} Z_{mn} / (i (m - n - 1) eps) z^m zbar^n; the
    denominators never vanish since m - n - 1 in {1, -1, -3}.
    """
    z = np.asarray(z, dtype=complex)
    p1 = {}
    for (m, n), c in coeffs.quad.items():
        den = 1j * (m - n - 1) * eps
        if abs(den) < 1e-6:
            raise SmallDenominator(f"normal-form denominator |{m}-{n}-1| eps = {abs(den):.2e}")
        p1[(m, n)] = -c / den
    beta = z + p1[(2, 0)] * z**2 + p1[(1, 1)] * z * np.conj(z) + p1[(0, 2)] * np.conj(z) ** 2
    beta_coeffs = fit_z_ode(times, beta)
    q_z = sum(abs(c) for c in coeffs.quad.values())
    q_b = sum(abs(c) for c in beta_coeffs.quad.values())
    az2 = np.abs(z) ** 2
    mask = az2 > 0
    return NormalFormModel(
        p1_coeffs={k: complex(v) for k, v in p1.items()},
        beta=beta,
        z_coeffs=coeffs,
        beta_coeffs=beta_coeffs,
        quad_reduction=float(q_b / max(q_z, 1e-300)),
        max_beta_minus_z=float(np.max(np.abs(beta - z)[mask] / az2[mask])),
    )


def envelope_average(times, values, window_time):
    """Rolling boxcar average over the oscillation period (envelope extraction)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    dt = times[1] - times[0]
    win = max(int(round(window_time / dt)), 1)
    if win >= len(values):
        return times, values
    kernel = np.ones(win) / win
    vv = np.convolve(values, kernel, mode="valid")
    tt = np.convolve(times, kernel, mode="valid")
    return tt, vv


def riccati_fit(times, beta, eps, t_min=None):
    """Re Y_1 from the linear growth of |beta|^{-2}.

    |beta(t)|^{-2} = |beta_0|^{-2} + 2 |Re Y_1| t for the resonant N = 1
    normal form; |beta|^2 is beat-period averaged before the fit.
    Returns (re_y1, r_squared, slope).
    """
    times = np.asarray(times, dtype=float)
    beta = np.asarray(beta, dtype=complex)
    b2 = np.abs(beta) ** 2
    beat = np.pi / eps
    tt, vv = envelope_average(times, b2, 2 * beat)
    if t_min is not None:
        keep = tt >= t_min
        tt, vv = tt[keep], vv[keep]
    inv = 1.0 / vv
    a = np.column_stack([tt, np.ones_like(tt)])
    coef, *_ = np.linalg.lstsq(a, inv, rcond=None)
    slope = float(coef[0])
    if slope <= 0:
        raise NotDecaying(f"|beta|^-2 slope {slope:.3e} <= 0: envelope not decaying")
    fitted = a @ coef
    ss_res = float(np.sum((inv - fitted) ** 2))
    ss_tot = float(np.sum((inv - inv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return -slope / 2.0, float(r2), slope


def lambda_limit(times, lam, eps, fit_lo=0.5, fit_hi=0.95):
    """lambda_infty estimate and tail exponent of |lambda(t) - lambda_infty|.

    lambda_infty is lambda at the final time; the exponent is fitted on the
    beat-averaged envelope of the deviation over the last half of the run.
    Raises NonConvergent if the envelope is non-decreasing there.
    """
    times = np.asarray(times, dtype=float)
    lam = np.asarray(lam, dtype=float)
    lam_inf = float(lam[-1])
    dev = np.abs(lam - lam_inf)
    beat = np.pi / eps
    tt, vv = envelope_average(times, dev, 2 * beat)
    t_end = times[-1]
    sel = (tt >= fit_lo * t_end) & (tt <= fit_hi * t_end)
    if vv[sel][0] < 1e-10:
        # exact-soliton run: flagged constant, exponent undefined
        return lam_inf, None
    # settling check: the deviation envelope must decrease over the last half
    half = vv[(tt >= 0.5 * t_end) & (tt <= fit_hi * t_end)]
    if len(half) >= 8:
        first = np.mean(half[: len(half) // 2])
        second = np.mean(half[len(half) // 2 :])
        if second >= first and second > 1e-9:
            raise NonConvergent(
                f"lambda deviation envelope non-decreasing over the last half "
                f"({first:.3e} -> {second:.3e})"
            )
    fit = decay_exponent(tt[sel], vv[sel], (tt[sel][0], tt[sel][-1]))
    return lam_inf, fit


def newton_law_check(times, a, p, eps_spectral, n_windows=6):
    """Effective-Newton-law diagnostics on the soliton center a(t).

    Fits plain sinusoids on consecutive windows (the decay is algebraic,
    not exponential, so windowed fits are more robust than one global
    damped fit).  Returns dict with the fitted frequency, the pointwise
    adot/2 vs p deviation, and the first/last-window amplitudes.
    """
    from scipy.optimize import curve_fit

    times = np.asarray(times, dtype=float)
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    period = 2 * np.pi / eps_spectral
    if times[-1] - times[0] < 5 * period:
        raise NoOscillation("need at least 5 oscillation periods of the center")

    def sin_model(t, amp, om, ph):
        return amp * np.sin(om * t + ph)

    freqs, amps, t_mids = [], [], []
    edges = np.linspace(times[0], times[-1], n_windows + 1)
    for k in range(n_windows):
        m = (times >= edges[k]) & (times <= edges[k + 1])
        if m.sum() < 16:
            continue
        t_w, a_w = times[m], a[m]
        amp0 = max(np.max(np.abs(a_w)), 1e-12)
        try:
            popt, _ = curve_fit(
                sin_model, t_w, a_w, p0=[amp0, eps_spectral, 0.0],
                maxfev=20000,
            )
        except RuntimeError:
            continue
        freqs.append(abs(popt[1]))
        amps.append(abs(popt[0]))
        t_mids.append(0.5 * (edges[k] + edges[k + 1]))
    if not freqs:
        raise NoOscillation("windowed sinusoid fits all failed")
    tt, ac, ad = _dot4(times, a)
    pc = p[2:-2]
    dev = np.max(np.abs(ad / 2.0 - pc))
    return {
        "omega_fit": float(np.median(freqs)),
        "omega_windows": freqs,
        "amp_windows": list(zip(t_mids, amps)),
        "adot_half_minus_p_max": float(dev),
        "p_max": float(np.max(np.abs(pc))),
    }
