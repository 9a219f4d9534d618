"""Weighted resolvent solves for L, expansion coefficients, golden-rule damping.

Spectral points i*mu in the gap (|mu| < lambda) are handled by a direct
deflated solve; points on the essential spectrum (|mu| >= lambda) are
regularized by the limiting-absorption shift (L - i mu - delta) combined
with a complex absorbing potential (CAP) over the outer part of the box,
and extrapolated delta -> 0+.

The damping coefficient of the internal mode is

    Y_1 = (4i/kappa) * Q( (L - 2i eps - 0)^{-1} P_c S,  S ),
    Q(u, v) = integral (u_1 v_2 + u_2 v_1),

with S the quadratic resonant source produced by the nonlinearity from the
internal-mode profiles (see quadratic_sources).  Re Y_1 < 0 is radiative
damping; the dynamics-side Riccati fit must reproduce it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ExtrapolationUnstable, SolveFailed, SpectralPointOnDiscrete
from .grids import Grid, TwoComponentField
from .linearization import Projections, SpectralData
from .operators import parity

CAP_WIDTH_FRACTION = 0.15
CAP_STRENGTH = 0.5


def cap_profile(grid: Grid, strength=CAP_STRENGTH, width_fraction=CAP_WIDTH_FRACTION):
    """Quartic-ramp absorbing profile W(x) >= 0 over the outer box edge."""
    x0 = (1.0 - width_fraction) * grid.half_width
    ramp = (np.abs(grid.nodes) - x0) / (grid.half_width - x0)
    return strength * np.clip(ramp, 0.0, None) ** 4


@dataclass
class ResolventRequest:
    mu: float                      # spectral point i*mu, mu real
    delta: float = 0.0             # limiting-absorption damping
    use_cap: bool | None = None    # default: on iff |mu| >= lambda
    cap_strength: float = CAP_STRENGTH
    cap_width_fraction: float = CAP_WIDTH_FRACTION


def _sector_solve(proj: Projections, sector, mu, delta, cap, g1, g2, deflate=True):
    """Direct solve of (L - W - i mu - delta) u = g on one parity sector."""
    sd = proj.sd
    grid = sd.grid
    p = parity(grid)
    restrict = p.restrict_even if sector == "even" else p.restrict_odd
    extend = p.extend_even if sector == "even" else p.extend_odd
    lm = sd.op.folded("minus", sector)
    lp = sd.op.folded("plus", sector)
    m = lm.shape[0]
    a = np.zeros((2 * m, 2 * m), dtype=complex)
    a[:m, m:] = lm
    a[m:, :m] = -lp
    if cap is not None:
        if sector == "even":
            wdiag = np.concatenate([cap[p.fixed], cap[p.pair_lo]])
        else:
            wdiag = cap[p.pair_lo]
        idx = np.arange(2 * m)
        a[idx, idx] -= np.concatenate([wdiag, wdiag])
    a[np.arange(2 * m), np.arange(2 * m)] -= 1j * mu + delta
    if deflate:
        # shift the (generalized) discrete eigenspace away from the
        # spectral point; leaves the P_c solution unchanged
        a = a + proj.pd_block(sector)
    rhs = np.concatenate([restrict(g1), restrict(g2)])
    sol = np.linalg.solve(a, rhs)
    resid = np.linalg.norm(a @ sol - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if resid > 1e-10:
        raise SolveFailed(f"sector {sector} resolvent residual {resid:.2e}")
    return extend(sol[:m]), extend(sol[m:])


def resolvent_apply(proj: Projections, rhs_field: TwoComponentField, req: ResolventRequest) -> TwoComponentField:
    """Solve (L - i mu - delta) w = P_c g with optional absorbing layer.

    The right-hand side is projected by P_c; at gap points within 1e-6 of a
    discrete eigenvalue the request is rejected unless the projection
    removed the discrete content.
    """
    sd = proj.sd
    grid = sd.grid
    mu, delta = float(req.mu), float(req.delta)
    on_spectrum = abs(mu) >= sd.lam
    use_cap = req.use_cap if req.use_cap is not None else on_spectrum
    if on_spectrum and delta == 0 and not use_cap:
        raise SolveFailed("on-spectrum point needs a damping shift or the absorbing layer")

    pd_w = proj.pd(rhs_field)
    near_discrete = min(abs(mu), abs(mu - sd.eps), abs(mu + sd.eps)) < 1e-6
    if near_discrete and pd_w.norm2() > 1e-8 * max(rhs_field.norm2(), 1e-300):
        raise SpectralPointOnDiscrete(
            f"spectral point i*{mu:.6g} touches a discrete eigenvalue and the rhs has discrete content"
        )
    g1, g2 = proj.pc_samples(rhs_field.first, rhs_field.second)

    cap = cap_profile(grid, req.cap_strength, req.cap_width_fraction) if use_cap else None
    p = parity(grid)
    g1e, g1o = p.split(g1)
    g2e, g2o = p.split(g2)
    out1 = np.zeros(grid.n, dtype=complex)
    out2 = np.zeros(grid.n, dtype=complex)
    if max(np.max(np.abs(g1e)), np.max(np.abs(g2e))) > 0:
        a, b = _sector_solve(proj, "even", mu, delta, cap, g1e, g2e)
        out1 += a
        out2 += b
    if max(np.max(np.abs(g1o)), np.max(np.abs(g2o))) > 0:
        a, b = _sector_solve(proj, "odd", mu, delta, cap, g1o, g2o)
        out1 += a
        out2 += b
    return TwoComponentField(grid, out1, out2)


# ---------------------------------------------------------------------------
# quadratic sources and expansion coefficients


def quadratic_sources(sd: SpectralData):
    """Resonant (z^2) and static (z zbar) sources of the R expansion.

    With w = z1 xi + i z2 eta + R and z = z1 - i z2, the quadratic part of
    the projected nonlinearity J N splits into monomials; the expansion
    coefficients solve

        (L - 2 i eps) R20 = S20,   L R11 = S11,   R02 = conj(R20),

    where (f' = f'(phi^2), f'' = f''(phi^2))

        S20 = 1/4 (  2 i f' phi xi eta,  f' phi (eta^2 - 3 xi^2) - 2 f'' phi^3 xi^2 )
        S11 = -(0, f' phi (3 xi^2 + eta^2) / 2 + f'' phi^3 xi^2).

    (For the cubic model f'' = 0.)  The z^2 coefficient of J N itself is
    -S20, which is what the polarization oracle in the tests measures.
    """
    grid = sd.grid
    phi = sd.phi.values.real
    xi = sd.xi.values.real
    eta = sd.eta.values.real
    f = sd.model.nonlinearity
    s = phi**2
    fp = f.fprime(s)
    if f.kind == "cubic":
        fpp = np.zeros_like(s)
    else:
        ds = 1e-5
        fpp = (f.fprime(s + ds) - f.fprime(np.maximum(s - ds, 0.0))) / (2 * ds)
    s20 = TwoComponentField(
        grid,
        0.5j * fp * phi * xi * eta,
        0.25 * (fp * phi * (eta**2 - 3 * xi**2) - 2 * fpp * phi**3 * xi**2),
    )
    s11 = TwoComponentField(
        grid,
        np.zeros(grid.n),
        -(0.5 * fp * phi * (3 * xi**2 + eta**2) + fpp * phi**3 * xi**2),
    )
    return s20, s11


@dataclass
class ExpansionCoefficient:
    m: int
    n: int
    fld: TwoComponentField
    admissibility: float
    tail_rate: float
    delta_used: float


def admissibility_residual(u: TwoComponentField) -> float:
    """Deviation from the admissible structure (real, i*real), normalized."""
    num = np.sqrt(u.grid.integrate(np.imag(u.first) ** 2)) + np.sqrt(
        u.grid.integrate(np.real(u.second) ** 2)
    )
    den = u.norm2()
    if den == 0:
        return 0.0
    return float(num / den)


def _tail_rate(u: TwoComponentField):
    grid = u.grid
    dens = np.sqrt(np.abs(u.first) ** 2 + np.abs(u.second) ** 2)
    half = grid.n // 2
    x = grid.nodes[half:]
    v = dens[half:]
    peak = v.max()
    mask = (v < 1e-3 * peak) & (v > 1e-12 * peak) & (x < 0.8 * grid.half_width)
    if mask.sum() < 10:
        return 0.0
    return float(-np.polyfit(x[mask], np.log(v[mask]), 1)[0])


def compute_rmn(proj: Projections, m: int, n: int, delta=1e-3) -> ExpansionCoefficient:
    """Expansion coefficients R_{2,0}, R_{1,1}, R_{0,2} of the R field.

    Gap points are solved exactly (delta = 0, no absorbing layer); the
    2 eps point uses limiting absorption when 2 eps > lambda.
    """
    sd = proj.sd
    s20, s11 = quadratic_sources(sd)
    if (m, n) == (1, 1):
        w = resolvent_apply(proj, proj.pc(s11), ResolventRequest(mu=0.0, delta=0.0, use_cap=False))
        return ExpansionCoefficient(1, 1, w, admissibility_residual(w), _tail_rate(w), 0.0)
    if (m, n) == (2, 0):
        mu = 2 * sd.eps
        in_gap = mu < sd.lam
        d = 0.0 if in_gap else delta
        w = resolvent_apply(proj, proj.pc(s20), ResolventRequest(mu=mu, delta=d, use_cap=not in_gap))
        return ExpansionCoefficient(2, 0, w, admissibility_residual(w), _tail_rate(w), d)
    if (m, n) == (0, 2):
        # conjugate-symmetric solve at -2 eps: equals conj(R20) exactly
        mu = -2 * sd.eps
        in_gap = -mu < sd.lam
        d = 0.0 if in_gap else delta
        s02 = proj.pc(s20.conj())
        w = resolvent_apply(proj, s02, ResolventRequest(mu=mu, delta=d, use_cap=not in_gap))
        return ExpansionCoefficient(0, 2, w, admissibility_residual(w), _tail_rate(w), d)
    raise ValueError("only the quadratic coefficients (2,0), (1,1), (0,2) are implemented")


# ---------------------------------------------------------------------------
# Fermi-golden-rule coefficient (N = 1)


@dataclass
class FgrResult:
    n_order: int
    re_y: float
    im_y: float
    delta_sequence: list
    estimates: list                    # Y(delta) for the sequence
    extrapolated: complex
    other_direction: complex           # +delta limit (opposite half plane)
    box_sensitivity: float = float("nan")

    def to_dict(self):
        return {
            "N": self.n_order,
            "ReY": self.re_y,
            "ImY": self.im_y,
            "delta_sequence": list(self.delta_sequence),
            "estimates_re": [e.real for e in self.estimates],
            "estimates_im": [e.imag for e in self.estimates],
            "extrapolated": [self.extrapolated.real, self.extrapolated.imag],
            "other_direction": [self.other_direction.real, self.other_direction.imag],
            "box_sensitivity": self.box_sensitivity,
        }


def _bilinear_q(u: TwoComponentField, v: TwoComponentField):
    g = u.grid
    return complex(g.integrate(u.first * v.second + u.second * v.first))


def _y1_at_delta(proj: Projections, s20: TwoComponentField, delta: float, direction=-1.0,
                 use_cap=None):
    sd = proj.sd
    mu = 2 * sd.eps
    u = resolvent_apply(
        proj, proj.pc(s20), ResolventRequest(mu=mu, delta=direction * (-delta), use_cap=use_cap)
    )
    # direction=-1 is the (L - 2 i eps - delta) prescription
    kappa = proj.kappa
    return (4j / kappa) * _bilinear_q(u, s20)


def fgr_coefficient(proj: Projections, deltas=(5e-3, 2.5e-3, 1.25e-3), stability_tol=0.2) -> FgrResult:
    """Re Y_1 by limiting absorption with Richardson extrapolation.

    Requires the N = 1 placement eps < lambda < 2 eps.  The default damping
    sequence sits just below the absorbing-layer resonance width, where the
    extrapolation reproduces the delta = 0 layer-regularized value.  Both
    approach directions are computed; the canonical value is the
    damping-consistent (L - 2 i eps - delta) limit.
    """
    sd = proj.sd
    if not (sd.eps < sd.lam < 2 * sd.eps):
        raise ValueError(
            f"fgr_coefficient implements the N = 1 regime; eps={sd.eps:.4g}, lambda={sd.lam:.4g}"
        )
    s20, _ = quadratic_sources(sd)
    estimates = [_y1_at_delta(proj, s20, d) for d in deltas]
    # Richardson on the last pairs (limiting-absorption error is O(delta))
    extrap = []
    for k in range(len(deltas) - 1):
        d0, d1 = deltas[k], deltas[k + 1]
        y0, y1 = estimates[k], estimates[k + 1]
        extrap.append(y1 + (y1 - y0) * d1 / (d0 - d1))
    best = extrap[-1]
    if len(extrap) >= 2:
        ref = abs(extrap[-2] - extrap[-1]) / max(abs(extrap[-1]), 1e-300)
        if ref > stability_tol:
            raise ExtrapolationUnstable(
                f"extrapolated estimates differ by {100 * ref:.1f}% (> {100 * stability_tol:.0f}%)"
            )
    # opposite half-plane, pure damping shift (no absorbing layer, which
    # would pin the outgoing condition and hide the direction dependence);
    # the shift must stay above the finite-box mode spacing
    other = _y1_at_delta(proj, s20, max(deltas[0], 2e-2), direction=+1.0, use_cap=False)
    return FgrResult(
        n_order=sd.n_order,
        re_y=float(best.real),
        im_y=float(best.imag),
        delta_sequence=list(deltas),
        estimates=estimates,
        extrapolated=best,
        other_direction=other,
    )
