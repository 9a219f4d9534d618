import json
import os

import numpy as np
import pytest

from solitonlab.cli import main as cli_main
from solitonlab.config import default_config, load_config, parse_config, render_default_config
from solitonlab.errors import ConfigInvalid, MissingArtifact
from solitonlab.harness import report, run

SMALL = """
[model]
lambda = 0.2

[grid]
n = 1024
half_width = 60

[integrator]
dt = 0.01
t_final = 60
absorbing_layer = off

[perturbation]
z1 = 0.02

[diagnostics]
branch_lo = 0.194
branch_hi = 0.206
branch_steps = 7
gs_branch_lo = 0.17
gs_branch_hi = 0.23
gs_branch_steps = 4
fit_t_min = 10
fit_t_max = 60
snapshots_to_write = 2
"""


@pytest.fixture(scope="module")
def small_cfg():
    return parse_config(SMALL)


def test_default_config_roundtrip():
    text = render_default_config()
    cfg = parse_config(text)
    assert cfg.values == default_config().values


def test_unknown_key_rejected():
    with pytest.raises(ConfigInvalid) as err:
        parse_config("[model]\nlambda = 0.2\nlambdaa = 0.3\n")
    assert "lambdaa" in str(err.value)


def test_bad_type_rejected():
    with pytest.raises(ConfigInvalid):
        parse_config("[grid]\nn = many\n")


def test_interval_membership_validated():
    with pytest.raises(ConfigInvalid) as err:
        parse_config("[model]\nlambda = 0.05\n")
    assert "I_0V" in str(err.value)


def test_committed_default_config_parses():
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    cfg = load_config(os.path.join(here, "configs", "default.cfg"))
    assert cfg["model.lambda"] == 0.2
    assert cfg["grid.n"] == 2048
    assert cfg["perturbation.z1"] == 0.05


def test_ground_state_stage_and_determinism(small_cfg, tmp_path):
    out1 = run("ground-state", small_cfg, out_dir=str(tmp_path / "a"))
    out2 = run("ground-state", small_cfg, out_dir=str(tmp_path / "b"))
    b1 = open(os.path.join(out1, "branch.csv"), "rb").read()
    b2 = open(os.path.join(out2, "branch.csv"), "rb").read()
    assert b1 == b2
    data = np.loadtxt(os.path.join(out1, "branch.csv"), delimiter=",", skiprows=1)
    assert np.all(data[:, 2] > 0)  # delta' > 0 at every row
    manifest = json.load(open(os.path.join(out1, "manifest.json")))
    assert manifest["checks"]["delta_prime_positive_all"]
    assert manifest["checks"]["hypotheses_all_pass"]
    # every artifact referenced by the manifest, no orphans
    files = set(manifest["files"]) | {"manifest.json"}
    assert files == set(os.listdir(out1))


def test_spectrum_stage(small_cfg, tmp_path):
    out = run("spectrum", small_cfg, out_dir=str(tmp_path / "spec"))
    payload = json.load(open(os.path.join(out, "spectrum.json")))
    assert 0 < payload["epsilon"] < 0.2
    assert payload["N"] == 1
    assert payload["zero_mode_residuals"]["lminus_phi"] <= 1e-8
    assert min(payload["resonance_indicator"].values()) >= 1e-2
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["checks"]["mode_in_gap"]


def test_modulate_stage_unperturbed(tmp_path):
    cfg = parse_config(SMALL.replace("z1 = 0.02", "z1 = 0.0"))
    out = run("modulate", cfg, out_dir=str(tmp_path / "mod0"))
    data = np.loadtxt(os.path.join(out, "modulation.csv"), delimiter=",", skiprows=1)
    zmod = np.hypot(data[:, 3], data[:, 4])
    assert np.max(zmod) <= 1e-8


def test_report_missing_artifact(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(MissingArtifact) as err:
        report([str(empty)], str(tmp_path / "r.json"))
    assert "spectrum.json" in str(err.value)


def test_cli_config_error(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[model]\nlambda = nope\n")
    rc = cli_main(["spectrum", "--config", str(bad)])
    assert rc == 2


def test_cli_missing_file():
    rc = cli_main(["spectrum", "--config", "/nonexistent/x.cfg"])
    assert rc == 2


def test_cli_ground_state_roundtrip(tmp_path):
    cfgfile = tmp_path / "small.cfg"
    cfgfile.write_text(SMALL)
    rc = cli_main(["ground-state", "--config", str(cfgfile), "--out", str(tmp_path / "out")])
    assert rc == 0
    assert os.path.exists(tmp_path / "out" / "branch.csv")


def test_cli_numerical_failure_exit_code(tmp_path):
    # lambda exists in I_0V but the branch window extends past the
    # existence region: mu <= 0 at the lower edge triggers NewtonDiverged
    bad = SMALL.replace("gs_branch_lo = 0.17", "gs_branch_lo = 0.101").replace(
        "lambda = 0.2", "lambda = 0.2"
    )
    cfgfile = tmp_path / "diverge.cfg"
    cfgfile.write_text(bad)
    rc = cli_main(["ground-state", "--config", str(cfgfile), "--out", str(tmp_path / "o")])
    assert rc == 3
