"""Experiment orchestration: pipeline stages, artifacts, manifest, report."""

from __future__ import annotations

import hashlib
import json
import os
import time

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dynamics import decay_exponent, evolve_linearized, evolve_nls, observables
from .errors import MissingArtifact
from .grids import ComplexField, TwoComponentField, weighted_norm, write_field_csv
from .ground_state import branch as gs_branch
from .ground_state import decay_fit, solve_soliton
from .linearization import LinearizedOperator, discrete_spectrum, projections, resonance_indicator
from .model import check_conditions, predicted_epsilon
from .modulation import (
    SpectralBranch,
    fit_z_ode,
    lambda_limit,
    newton_law_check,
    normal_form_quadratic,
    riccati_fit,
    track,
)
from .resolvent import compute_rmn, fgr_coefficient

STAGES = ("ground-state", "spectrum", "fgr", "evolve", "modulate", "propagator-decay", "report")


def worker_count():
    try:
        return max(int(os.environ.get("SOLITONLAB_WORKERS", "1")), 1)
    except ValueError:
        return 1


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


class _F17(float):
    def __repr__(self):
        return f"{float(self):.17g}"


def _deep17(obj):
    if isinstance(obj, float):
        return _F17(obj)
    if isinstance(obj, dict):
        return {k: _deep17(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_deep17(v) for v in obj]
    return obj


def write_json(path, payload):
    text = json.dumps(_deep17(payload), sort_keys=True, indent=2, default=_json_default)
    with open(path, "w") as fh:
        fh.write(text + "\n")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


class RunContext:
    """Collects artifacts and checks; writes the manifest atomically at the end."""

    def __init__(self, cfg: ExperimentConfig, out_dir):
        self.cfg = cfg
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.files = []
        self.checks = {}
        self.t0 = time.time()

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.out_dir, name)

    def check(self, name, passed):
        self.checks[name] = bool(passed)

    def finalize(self, stage):
        import numpy
        import scipy

        manifest = {
            "stage": stage,
            "config": self.cfg.echo(),
            "versions": {
                "solitonlab": __version__,
                "numpy": numpy.__version__,
                "scipy": scipy.__version__,
            },
            "wall_clock_s": time.time() - self.t0,
            "files": {name: _sha256(os.path.join(self.out_dir, name)) for name in self.files},
            "checks": self.checks,
        }
        tmp = os.path.join(self.out_dir, ".manifest.tmp")
        write_json(tmp, manifest)
        os.replace(tmp, os.path.join(self.out_dir, "manifest.json"))
        return manifest


def _initial_state(grid, model, cfg, sd):
    z1, z2 = cfg["perturbation.z1"], cfg["perturbation.z2"]
    vals = sd.phi.values + z1 * sd.xi.values + 1j * z2 * sd.eta.values
    amp = cfg["perturbation.r0_amplitude"]
    if amp != 0.0:
        w = cfg["perturbation.r0_width"]
        vals = vals + amp * np.exp(-((grid.nodes / w) ** 2))
    return ComplexField(grid, vals)


def run(stage, cfg: ExperimentConfig, out_dir=None):
    """Execute one pipeline stage; returns the artifact directory."""
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; choose from {STAGES}")
    out_dir = out_dir or cfg["output.directory"]
    ctx = RunContext(cfg, out_dir)
    grid = cfg.grid()
    model = cfg.model()
    if stage == "ground-state":
        _stage_ground_state(ctx, grid, model, cfg)
    elif stage == "spectrum":
        _stage_spectrum(ctx, grid, model, cfg)
    elif stage == "fgr":
        _stage_fgr(ctx, grid, model, cfg)
    elif stage == "evolve":
        _stage_evolve(ctx, grid, model, cfg)
    elif stage == "modulate":
        _stage_modulate(ctx, grid, model, cfg)
    elif stage == "propagator-decay":
        _stage_propagator(ctx, grid, model, cfg)
    elif stage == "report":
        report([out_dir], os.path.join(out_dir, "report.json"))
        ctx.files.append("report.json")
    ctx.finalize(stage)
    return out_dir


def _stage_ground_state(ctx, grid, model, cfg):
    phi = solve_soliton(grid, model)
    write_field_csv(ctx.path("soliton.csv"), phi)
    br = gs_branch(
        grid, model, cfg["diagnostics.gs_branch_lo"], cfg["diagnostics.gs_branch_hi"],
        cfg["diagnostics.gs_branch_steps"],
    )
    br.to_csv(ctx.path("branch.csv"))
    rate, resid = decay_fit(phi)
    ctx.check("delta_prime_positive_all", bool(np.all(br.ddelta > 0)))
    ctx.check("decay_rate_positive", rate > 0)
    report = check_conditions(model)
    write_json(ctx.path("hypotheses.json"), {k: v for k, v in report.items()})
    ctx.check("hypotheses_all_pass", all(v["passed"] for v in report.values()))


def _stage_spectrum(ctx, grid, model, cfg):
    sd = discrete_spectrum(grid, model)
    proj = projections(sd)
    rng = np.random.default_rng(cfg["diagnostics.seed"])
    worst_idem = 0.0
    for _ in range(20):
        w = TwoComponentField(grid, rng.standard_normal(grid.n), rng.standard_normal(grid.n))
        pd_w = proj.pd(w)
        worst_idem = max(worst_idem, (proj.pd(pd_w) - pd_w).norm2() / max(w.norm2(), 1e-300))
    probes = {s: resonance_indicator(sd.op, sign=sg) for s, sg in (("plus", +1), ("minus", -1))}
    zm1 = np.sqrt(grid.integrate(np.abs(sd.op.apply_lminus(sd.phi.values)) ** 2))
    lw = sd.op.apply_block(sd.dlam_phi.values, np.zeros(grid.n))
    zm2 = np.sqrt(grid.integrate(np.abs(lw[0]) ** 2 + np.abs(lw[1] - sd.phi.values) ** 2))
    payload = {
        "epsilon": sd.eps,
        "epsilon_leading_order": predicted_epsilon(model),
        "N": sd.n_order,
        "pairing_xi_eta": sd.kappa,
        "pairing_identity": sd.pairing_identity(),
        "delta_prime": sd.delta_prime,
        "zero_mode_residuals": {"lminus_phi": float(zm1), "associated": float(zm2)},
        "eigenpair_residuals": {"product": sd.residual_product, "eta": sd.residual_eta},
        "projection_idempotency": float(worst_idem),
        "resonance_indicator": {k: p.indicator for k, p in probes.items()},
        "resonance_verdict": {k: p.verdict for k, p in probes.items()},
    }
    write_json(ctx.path("spectrum.json"), payload)
    xi_eta = TwoComponentField(grid, sd.xi.values, sd.eta.values)
    write_field_csv(ctx.path("xi_eta.csv"), xi_eta)
    ctx.check("mode_in_gap", 0 < sd.eps < model.lam)
    ctx.check("n_order_is_one", sd.n_order == 1)
    ctx.check("no_resonance", all(p.verdict == "no_resonance" for p in probes.values()))


def _stage_fgr(ctx, grid, model, cfg):
    sd = discrete_spectrum(grid, model)
    proj = projections(sd)
    res = fgr_coefficient(proj)
    # box enlargement at fixed spacing: double the box, double n
    grid2 = type(grid)(grid.mode, grid.n * 2, grid.half_width * 2)
    sd2 = discrete_spectrum(grid2, model)
    res2 = fgr_coefficient(projections(sd2))
    payload = res.to_dict()
    payload["box_sensitivity"] = abs(res2.re_y - res.re_y) / max(abs(res.re_y), 1e-300)
    payload["re_y_big_box"] = res2.re_y
    r11 = compute_rmn(proj, 1, 1)
    r20 = compute_rmn(proj, 2, 0)
    payload["admissibility"] = {"r11": r11.admissibility, "r20": r20.admissibility}
    payload["tail_rates"] = {"r11": r11.tail_rate, "r20": r20.tail_rate}
    write_json(ctx.path("fgr.json"), payload)
    ctx.check("re_y_negative", res.re_y < 0)
    ctx.check("box_stable_5pct", payload["box_sensitivity"] < 0.05)


def _run_evolution(grid, model, cfg, sd):
    psi0 = _initial_state(grid, model, cfg, sd)
    return evolve_nls(
        psi0,
        model,
        t_final=cfg["integrator.t_final"],
        dt=cfg["integrator.dt"],
        snapshot_stride=cfg["integrator.snapshot_stride"],
        absorbing_layer=cfg.absorbing_layer_on(),
        cap_strength=cfg["integrator.cap_strength"],
    )


def _stage_evolve(ctx, grid, model, cfg):
    sd = discrete_spectrum(grid, model)
    evo = _run_evolution(grid, model, cfg, sd)
    a_s, p_s, sup_s = [], [], []
    for k in range(len(evo.times)):
        fld = ComplexField(grid, evo.snapshots[k])
        _, _, a, p = observables(fld, model)
        a_s.append(a)
        p_s.append(p)
        sup_s.append(fld.sup())
    cols = np.column_stack([evo.times, a_s, p_s, sup_s])
    with open(ctx.path("observables.csv"), "w") as fh:
        fh.write("t,a,p,sup_norm\n")
        np.savetxt(fh, cols, delimiter=",", fmt="%.17g")
    evo.series_csv(ctx.path("timeseries.csv"))
    n_snap = min(cfg["diagnostics.snapshots_to_write"], len(evo.times))
    for idx in np.linspace(0, len(evo.times) - 1, n_snap).astype(int):
        write_field_csv(ctx.path(f"snapshot_t{evo.times[idx]:.1f}.csv"), ComplexField(grid, evo.snapshots[idx]))
    drift_m = np.max(np.abs(evo.mass_series - evo.mass_series[0])) / evo.mass_series[0]
    ctx.check("mass_recorded", len(evo.mass_series) > 2)
    ctx.check("finite_run", bool(np.isfinite(evo.snapshots[-1]).all()))
    if not cfg.absorbing_layer_on():
        ctx.check("mass_conserved_1e11", drift_m <= 1e-11)


def _stage_modulate(ctx, grid, model, cfg):
    sd = discrete_spectrum(grid, model)
    br = SpectralBranch(
        grid, model, cfg["diagnostics.branch_lo"], cfg["diagnostics.branch_hi"],
        cfg["diagnostics.branch_steps"],
    )
    evo = _run_evolution(grid, model, cfg, sd)
    series = track(evo, br, nu=cfg["diagnostics.nu"])
    t_lo, t_hi = cfg["diagnostics.fit_t_min"], cfg["diagnostics.fit_t_max"]
    t_hi = min(t_hi, series.times[-1])
    payload = {
        "epsilon_spectral": sd.eps,
        "orthogonality_worst": float(np.max(np.abs(series.residuals))),
        "z_sup": float(np.max(np.abs(series.z))),
    }
    ctx.check("orthogonality_1e10",
              payload["orthogonality_worst"] <= 1e-10 * max(1.0, float(np.sqrt(evo.mass_series[0]))))
    from .errors import (
        IllConditionedRegression,
        NonConvergent,
        NotDecaying,
        WindowTooShort,
    )

    try:
        zfit = fit_z_ode(series.times, series.z)
        nf = normal_form_quadratic(series.times, series.z, zfit, sd.eps)
        series.beta = nf.beta
        rey_dyn, r2, _ = riccati_fit(series.times, nf.beta, sd.eps,
                                     t_min=min(50.0, 0.1 * series.times[-1]))
        lam_inf, lam_fit = lambda_limit(series.times, series.lam, sd.eps)
        exp_z = decay_exponent(series.times, np.abs(series.z), (t_lo, t_hi))
        exp_r = decay_exponent(series.times, series.r_weighted, (t_lo, t_hi))
        payload.update({
            "epsilon_fit": [zfit.linear.real, zfit.linear.imag],
            "P1_coeffs": {f"{m}{n}": [c.real, c.imag] for (m, n), c in nf.p1_coeffs.items()},
            "z_quadratic": {f"{m}{n}": [c.real, c.imag] for (m, n), c in zfit.quad.items()},
            "beta_quadratic": {f"{m}{n}": [c.real, c.imag] for (m, n), c in nf.beta_coeffs.quad.items()},
            "quad_reduction": nf.quad_reduction,
            "max_beta_minus_z_over_z2": nf.max_beta_minus_z,
            "ReY1_dyn": rey_dyn,
            "riccati_r2": r2,
            "lambda_inf": lam_inf,
            "exponents": {
                "z": exp_z.exponent,
                "z_stderr": exp_z.stderr,
                "R": exp_r.exponent,
                "R_stderr": exp_r.stderr,
                "lambda": lam_fit.exponent if lam_fit is not None else None,
            },
        })
        ctx.check("linear_coeff_5pct", abs(zfit.linear - 1j * sd.eps) <= 0.05 * sd.eps)
        ctx.check("rey_dyn_negative", rey_dyn < 0)
    except (IllConditionedRegression, NotDecaying, NonConvergent, WindowTooShort) as exc:
        # unperturbed or too-short runs: record the reason, keep artifacts
        payload["fits_skipped"] = f"{type(exc).__name__}: {exc}"
    series.to_csv(ctx.path("modulation.csv"))
    write_json(ctx.path("normal_form.json"), payload)


def _stage_propagator(ctx, grid, model, cfg):
    sd = discrete_spectrum(grid, model)
    proj = projections(sd)
    op = sd.op
    x = grid.nodes
    bump = TwoComponentField(grid, np.exp(-((x / 2.0) ** 2)), 0.4 * x * np.exp(-((x / 2.0) ** 2)))
    w0 = proj.pc(bump)
    evo = evolve_linearized(w0, op, t_final=120.0, dt=0.01, snapshot_stride=0.25, absorbing_layer=True)
    nu = cfg["diagnostics.nu"]
    wn, sn = [], []
    for k in range(len(evo.times)):
        fld = evo.snapshot(k)
        wn.append(weighted_norm(fld, nu))
        sn.append(float(np.max(np.abs(fld.first.real)) + np.max(np.abs(fld.second.real))))
    wn, sn = np.array(wn), np.array(sn)
    cols = np.column_stack([evo.times, wn, sn])
    with open(ctx.path("propagator.csv"), "w") as fh:
        fh.write("t,weighted_norm,sup_norm\n")
        np.savetxt(fh, cols, delimiter=",", fmt="%.17g")
    window = (10.0, 100.0)
    f_w = decay_exponent(evo.times, wn, window)
    f_s = decay_exponent(evo.times, sn, window)
    payload = {
        "window": list(window),
        "weighted_exponent": f_w.exponent,
        "weighted_stderr": f_w.stderr,
        "sup_exponent": f_s.exponent,
        "sup_stderr": f_s.stderr,
    }
    write_json(ctx.path("propagator.json"), payload)
    ctx.check("weighted_decays", f_w.exponent < 0)
    ctx.check("sup_decays", f_s.exponent < 0)


# ---------------------------------------------------------------------------
# report


def _load_json(dirs, name):
    for d in dirs:
        p = os.path.join(d, name)
        if os.path.exists(p):
            with open(p) as fh:
                return json.load(fh)
    raise MissingArtifact(f"required artifact {name} not found in {dirs}")


def report(artifact_dirs, out_path):
    """Aggregate stage artifacts into one summary document."""
    spectrum = _load_json(artifact_dirs, "spectrum.json")
    fgr = _load_json(artifact_dirs, "fgr.json")
    nf = _load_json(artifact_dirs, "normal_form.json")
    rows = []

    def row(name, value, target, passed):
        rows.append({"criterion": name, "value": value, "target": target, "pass": bool(passed)})

    eps, lam_pred = spectrum["epsilon"], spectrum["epsilon_leading_order"]
    row("internal_mode_vs_leading_order", abs(eps - lam_pred) / lam_pred, "<= 0.15",
        abs(eps - lam_pred) / lam_pred <= 0.15)
    row("mode_count_N", spectrum["N"], "== 1", spectrum["N"] == 1)
    row("resonance_indicator_min",
        min(spectrum["resonance_indicator"].values()), ">= 1e-2",
        min(spectrum["resonance_indicator"].values()) >= 1e-2)
    rey_res, rey_dyn = fgr["ReY"], nf["ReY1_dyn"]
    row("fgr_negative", rey_res, "< 0", rey_res < 0)
    row("fgr_sign_agreement", rey_dyn, "same sign", rey_res * rey_dyn > 0)
    mag = abs(rey_res - rey_dyn) / max(abs(rey_res), abs(rey_dyn))
    row("fgr_magnitude_agreement", mag, "<= 0.25", mag <= 0.25)
    row("riccati_r2", nf["riccati_r2"], ">= 0.98", nf["riccati_r2"] >= 0.98)
    row("z_exponent", nf["exponents"]["z"], "[-0.65, -0.35]",
        -0.65 <= nf["exponents"]["z"] <= -0.35)
    row("R_exponent", nf["exponents"]["R"], "[-1.3, -0.7]",
        -1.3 <= nf["exponents"]["R"] <= -0.7)
    lam_exp = nf["exponents"]["lambda"]
    row("lambda_exponent", lam_exp, "<= -0.3", lam_exp is not None and lam_exp <= -0.3)
    try:
        prop = _load_json(artifact_dirs, "propagator.json")
        row("propagator_weighted_exponent", prop["weighted_exponent"], "[-1.75, -1.25]",
            -1.75 <= prop["weighted_exponent"] <= -1.25)
        row("propagator_sup_exponent", prop["sup_exponent"], "[-0.65, -0.35]",
            -0.65 <= prop["sup_exponent"] <= -0.35)
    except MissingArtifact:
        pass
    payload = {
        "epsilon": eps,
        "N": spectrum["N"],
        "delta_prime": spectrum["delta_prime"],
        "ReY1_resolvent": rey_res,
        "ReY1_dynamics": rey_dyn,
        "lambda_inf": nf["lambda_inf"],
        "exponents": nf["exponents"],
        "rows": rows,
    }
    write_json(out_path, payload)
    csv_path = os.path.splitext(out_path)[0] + "_rows.csv"
    with open(csv_path, "w") as fh:
        fh.write("criterion,value,target,pass\n")
        for r in rows:
            fh.write(f"{r['criterion']},{r['value']},{r['target']},{int(r['pass'])}\n")
    return payload
