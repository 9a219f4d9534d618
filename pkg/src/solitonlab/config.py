"""Experiment configuration: flat key = value text with section headers.

Unknown keys are errors (they are usually typos in physics parameters).
All values are scalars; booleans are on/off/true/false; the special value
auto is allowed where documented.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid
from .grids import Grid
from .model import ModelConfig, NonlinearitySpec, PotentialSpec

_SCHEMA = {
    "model": {
        "mode": ("str", "line1d"),
        "lambda": ("float", 0.2),
        "h": ("float", 0.35),
        "well_depth": ("float", 0.1),
        "nonlinearity": ("str", "cubic"),
        "saturable_q": ("int", 4),
        "saturable_gamma": ("float", 1.0),
    },
    "grid": {
        "n": ("int", 2048),
        "half_width": ("float", 80.0),
    },
    "integrator": {
        "dt": ("float", 0.005),
        "t_final": ("float", 1000.0),
        "snapshot_stride": ("float", 0.5),
        "absorbing_layer": ("str", "auto"),
        "cap_strength": ("float", 0.5),
    },
    "perturbation": {
        "z1": ("float", 0.05),
        "z2": ("float", 0.0),
        "r0_amplitude": ("float", 0.0),
        "r0_width": ("float", 2.0),
        "smallness_c": ("float", 1.0),
    },
    "diagnostics": {
        "nu": ("float", 4.0),
        "fit_t_min": ("float", 100.0),
        "fit_t_max": ("float", 1000.0),
        "branch_lo": ("float", 0.19),
        "branch_hi": ("float", 0.21),
        "branch_steps": ("int", 21),
        "gs_branch_lo": ("float", 0.15),
        "gs_branch_hi": ("float", 0.3),
        "gs_branch_steps": ("int", 16),
        "seed": ("int", 0),
        "snapshots_to_write": ("int", 3),
    },
    "output": {
        "directory": ("str", "out"),
    },
}

_CASTERS = {
    "str": str,
    "int": int,
    "float": float,
}


@dataclass
class ExperimentConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def grid(self) -> Grid:
        return Grid(self["model.mode"], self["grid.n"], self["grid.half_width"])

    def model(self) -> ModelConfig:
        kind = self["model.nonlinearity"]
        if kind == "cubic":
            nl = NonlinearitySpec("cubic")
        elif kind == "saturable":
            nl = NonlinearitySpec("saturable", q=self["model.saturable_q"], gamma=self["model.saturable_gamma"])
        else:
            raise ConfigInvalid(f"model.nonlinearity: unknown kind {kind!r}")
        pot = PotentialSpec(depth=self["model.well_depth"], h=self["model.h"])
        return ModelConfig(mode=self["model.mode"], lam=self["model.lambda"], potential=pot, nonlinearity=nl)

    def absorbing_layer_on(self) -> bool:
        mode = self["integrator.absorbing_layer"]
        if mode == "auto":
            # radiation wrap-around matters on long runs only
            return self["integrator.t_final"] >= 500.0
        return mode in ("on", "true", "1")

    def echo(self) -> dict:
        return dict(sorted(self.values.items()))


def default_config() -> ExperimentConfig:
    vals = {}
    for sec, keys in _SCHEMA.items():
        for key, (_, default) in keys.items():
            vals[f"{sec}.{key}"] = default
    return ExperimentConfig(vals)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate the flat key = value format."""
    cfg = default_config()
    section = None
    errors = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                errors.append(f"line {ln}: unknown section [{section}]")
                section = None
            continue
        if "=" not in line:
            errors.append(f"line {ln}: expected key = value, got {raw.strip()!r}")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if section is None:
            errors.append(f"line {ln}: key {key!r} outside any section")
            continue
        if key not in _SCHEMA[section]:
            errors.append(f"line {ln}: unknown key {section}.{key}")
            continue
        typ = _SCHEMA[section][key][0]
        if typ == "str":
            cfg.values[f"{section}.{key}"] = val
        else:
            try:
                cfg.values[f"{section}.{key}"] = _CASTERS[typ](val)
            except ValueError:
                errors.append(f"line {ln}: {section}.{key} expects {typ}, got {val!r}")
    if errors:
        raise ConfigInvalid("; ".join(errors))
    _validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _validate(cfg: ExperimentConfig):
    errors = []
    if cfg["model.mode"] not in ("line1d", "radial3d"):
        errors.append("model.mode must be line1d or radial3d")
    if cfg["grid.n"] < 16:
        errors.append("grid.n too small")
    if cfg["model.mode"] == "line1d" and (cfg["grid.n"] & (cfg["grid.n"] - 1)) != 0:
        errors.append("grid.n must be a power of two for line1d")
    if cfg["grid.half_width"] <= 0:
        errors.append("grid.half_width must be positive")
    if cfg["integrator.dt"] <= 0 or cfg["integrator.t_final"] <= 0:
        errors.append("integrator.dt and t_final must be positive")
    if cfg["model.well_depth"] <= 0:
        errors.append("model.well_depth must be positive")
    if cfg["model.lambda"] <= cfg["model.well_depth"]:
        errors.append("model.lambda must exceed -inf V = well_depth (I_0V membership)")
    if cfg["diagnostics.nu"] < 0:
        errors.append("diagnostics.nu must be >= 0")
    if not (cfg["diagnostics.branch_lo"] < cfg["model.lambda"] < cfg["diagnostics.branch_hi"]):
        errors.append("model.lambda must lie inside [diagnostics.branch_lo, branch_hi]")
    # initial-condition smallness: residual R0 bounded by c (z1^2 + z2^2)
    amp = cfg["perturbation.r0_amplitude"]
    if amp != 0.0:
        z1, z2 = cfg["perturbation.z1"], cfg["perturbation.z2"]
        bound = cfg["perturbation.smallness_c"] * (z1**2 + z2**2)
        # crude H1-type size of the Gaussian bump amp*exp(-x^2/w^2)
        w = cfg["perturbation.r0_width"]
        size = abs(amp) * np.sqrt(w) * (1.0 + 1.0 / max(w, 1e-6))
        if size > bound:
            errors.append(
                f"perturbation.r0_amplitude: initial remainder size {size:.3g} exceeds "
                f"smallness_c*(z1^2+z2^2) = {bound:.3g}"
            )
    if errors:
        raise ConfigInvalid("; ".join(errors))


def render_default_config() -> str:
    lines = ["# solitonlab experiment configuration (key = value, # comments)"]
    for sec, keys in _SCHEMA.items():
        lines.append("")
        lines.append(f"[{sec}]")
        for key, (_, default) in keys.items():
            lines.append(f"{key} = {default}")
    return "\n".join(lines) + "\n"
