import json
import subprocess
import sys

import pytest

from arcpd import cli
from arcpd.config import ExperimentConfig, dumps, loads
from arcpd.errors import ValidationError

BASE = """\
# i.i.d. pre-change, correlated post-change
mu_post = 1
lambda_post = 0.9
detector = cusum
threshold = 5.65
replications = 2000
master_seed = 42
"""


def run(tmp_path, command, text, *extra):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(text)
    out = tmp_path / "out.csv"
    code = cli.main([command, "--config", str(cfg), "--output", str(out), *extra])
    return code, (out.read_text() if out.exists() else None)


def test_config_roundtrip():
    cfg = loads(BASE + "k_sweep = 1, 2, 5\nlambda_grid = -0.5, 0.25\nlower_bound = true\n")
    text = dumps(cfg)
    assert loads(text) == cfg
    assert dumps(loads(text)) == text


@pytest.mark.parametrize("bad", ["threshold = 5\ntarget_gamma = 50\n", "nonsense = 1\n", "mu_pre\n",
                                 "mu_pre = 1\nmu_pre = 2\n", "lambda_pre = 1.0\n", "detector = ewma\n",
                                 "replications = ten\n"])
def test_config_rejects(bad):
    with pytest.raises(ValidationError):
        loads(bad)


def test_kl_command(tmp_path):
    code, out = run(tmp_path, "kl", "mu_post = 1\nlambda_post = 0.9\nlambda_grid = -0.5, 0\n")
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == "row_type,lambda0,kl,reference_kl,lambda_crit,lambda_lower,lambda_upper"
    assert lines[-2].startswith("summary,0.9,52.13157895,0.5,-0.33333")
    assert "\r" not in out


def test_kl_no_change_single_row(tmp_path):
    code, out = run(tmp_path, "kl", "mu_post = 0\nlambda_post = 0\n")
    rows = out.strip().split("\n")
    assert code == 0 and len(rows) == 2 and rows[1].split(",")[2] == "0"


def test_arl_degenerate_exact(tmp_path):
    code, out = run(tmp_path, "arl", "mu_post = 0\ndetector = sr\nthreshold = 10.5\nreplications = 50\n",
                    "--seed", "1")
    assert code == 0
    row = out.strip().split("\n")[1].split(",")
    assert row[2] == "11" and row[3] == "0"


def test_seed_required(tmp_path, capsys):
    code, _ = run(tmp_path, "arl", "threshold = 5\n")
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["error"] == "validation"


def test_censoring_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "arl", "mu_post = 0\nthreshold = 2\nmax_steps = 30\nreplications = 5\n"
                  "master_seed = 1\n")
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "censoring"


def test_infeasible_conditioning_exit_code(tmp_path):
    code, _ = run(tmp_path, "addk", "mu_post = 0\ndetector = sr\nthreshold = 10.5\nk = 12\n"
                  "replications = 5\nmaster_seed = 1\n")
    assert code == 6


def test_numeric_range_exit_code(tmp_path, capsys):
    # one post-change step has log-LR ~ 1800, beyond the SR overflow guard
    code, _ = run(tmp_path, "sadd", "mu_post = 60\ndetector = sr\nthreshold = 1e200\n"
                  "replications = 5\nmaster_seed = 1\n")
    assert code == 5
    assert json.loads(capsys.readouterr().err)["step"] == 1


@pytest.mark.parametrize("command", ["simulate", "sadd", "addk", "kernel-check"])
def test_commands_run(tmp_path, command):
    code, out = run(tmp_path, command, BASE + "k_sweep = 1, 5\n", "--smoke")
    assert code == 0 and out.count("\n") >= 2


def test_table_smoke(tmp_path):
    code, out = run(tmp_path, "table", "master_seed = 1\nlambda_grid = 0.9\ngamma_grid = 50\n", "--smoke")
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 3 and all(l.endswith(",ok") for l in lines[1:])


def test_curves_single_gamma(tmp_path):
    code, out = run(tmp_path, "curves", "master_seed = 1\nmu_post = 1\nlambda_post = 0.9\ngamma_grid = 50\n",
                    "--smoke")
    assert code == 0 and len(out.strip().split("\n")) == 2


def test_calibrate_needs_gamma(tmp_path):
    code, _ = run(tmp_path, "calibrate", BASE)
    assert code == 2


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("mu_post = 1\n")
    res = subprocess.run([sys.executable, "-m", "arcpd.cli", "kl", "--config", str(cfg)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("row_type,")


def test_config_defaults_are_valid():
    assert ExperimentConfig().master_seed is None
