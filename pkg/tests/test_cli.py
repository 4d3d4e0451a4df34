import json
import subprocess
import sys
from pathlib import Path

import pytest

from peribond.cli import ConfigError, list_zoo, load_config

MR_CONFIG = """\
[run]
task = recoverability
seed = 7

[density]
kind = mooney-rivlin
alpha = 1.0
beta = 1.0
g = well
"""


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "peribond.cli", *args],
        capture_output=True, text=True,
    )


def test_load_config_defaults_and_overrides(tmp_path):
    cfg_path = tmp_path / "cfg.ini"
    cfg_path.write_text(MR_CONFIG)
    cfg = load_config(str(cfg_path), overrides={"quad-order": 16})
    assert cfg["run"]["task"] == "recoverability"
    assert cfg["run"]["seed"] == 7
    assert cfg["run"]["quad-order"] == 16
    assert cfg["density"]["kind"] == "mooney-rivlin"
    assert cfg["lattice"]["bound"] == 3.0  # untouched default


def test_load_config_rejects_unknown_keys(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[run]\ntask = recoverability\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    bad.write_text("[nonsense]\nkey = 1\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    with pytest.raises(ConfigError):
        load_config(None, overrides={"task": "not-a-task"})
    with pytest.raises(ConfigError):
        load_config(None)  # no task at all


def test_json_config_equivalent(tmp_path):
    blob = {
        "run": {"task": "recoverability", "seed": 7},
        "density": {"kind": "mooney-rivlin", "alpha": 1.0, "beta": 1.0, "g": "well"},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(blob))
    cfg = load_config(str(path))
    assert cfg["density"]["g"] == "well"
    assert cfg["run"]["seed"] == 7


def test_quadrature_check_exit_zero(tmp_path):
    out = tmp_path / "q"
    proc = run_cli("--task", "quadrature-check", "--out", str(out), "--no-timestamp")
    assert proc.returncode == 0, proc.stderr
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verdict"] == "pass"
    assert summary["worst_second_moment_error"] <= 1e-10
    assert (out / "detail.csv").exists()


def test_recoverability_positive_control_exit_zero(tmp_path):
    out = tmp_path / "r"
    proc = run_cli("--task", "recoverability", "--out", str(out), "--no-timestamp")
    assert proc.returncode == 0, proc.stderr
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verdict"] == "consistent"
    assert summary["density"]["kind"] == "frobenius-squared"
    # reports embed the fully resolved config
    assert summary["config"]["run"]["quad-order"] == 32
    assert summary["config"]["lattice"]["bound"] == 3.0


def test_recoverability_mooney_rivlin_exit_two(tmp_path):
    cfg = tmp_path / "mr.ini"
    cfg.write_text(MR_CONFIG)
    out = tmp_path / "mr"
    proc = run_cli("--config", str(cfg), "--out", str(out), "--no-timestamp")
    assert proc.returncode == 2, proc.stderr
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verdict"] == "violated"


def test_invalid_config_exit_64(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[run]\ntask = recoverability\nbogus = 1\n")
    proc = run_cli("--config", str(cfg), "--out", str(tmp_path / "o"))
    assert proc.returncode == 64
    assert "bogus" in proc.stderr
    proc = run_cli("--task", "recoverability", "--not-a-flag")
    assert proc.returncode == 64


def test_missing_config_file_exit_64(tmp_path):
    proc = run_cli("--config", str(tmp_path / "absent.ini"))
    assert proc.returncode == 64


def test_reports_byte_identical(tmp_path):
    cfg = tmp_path / "mr.ini"
    cfg.write_text(MR_CONFIG)
    out = tmp_path / "det"
    first = run_cli("--config", str(cfg), "--out", str(out), "--threads", "1",
                    "--no-timestamp")
    assert first.returncode == 2
    summary1 = (out / "summary.json").read_bytes()
    detail1 = (out / "detail.csv").read_bytes()
    second = run_cli("--config", str(cfg), "--out", str(out), "--threads", "1",
                     "--no-timestamp")
    assert second.returncode == 2
    assert (out / "summary.json").read_bytes() == summary1
    assert (out / "detail.csv").read_bytes() == detail1


def test_timestamp_present_by_default(tmp_path):
    out = tmp_path / "ts"
    proc = run_cli("--task", "quadrature-check", "--out", str(out))
    assert proc.returncode == 0
    summary = json.loads((out / "summary.json").read_text())
    assert "timestamp" in summary


def test_list_zoo_contents_and_stability():
    text = list_zoo()
    for name in ("mooney-rivlin", "neo-hookean", "incompressible-mr",
                 "power-bond", "profile-cof"):
        assert name in text
    assert list_zoo() == text
    proc = run_cli("--list-zoo")
    assert proc.returncode == 0
    assert proc.stdout.strip() == text.strip()


def test_incompressible_density_exit_two(tmp_path):
    cfg = tmp_path / "inc.ini"
    cfg.write_text(
        "[run]\ntask = recoverability\n\n[density]\nkind = incompressible-mr\n"
        "alpha = 1.0\nbeta = 1.0\n"
    )
    out = tmp_path / "inc"
    proc = run_cli("--config", str(cfg), "--out", str(out), "--no-timestamp")
    assert proc.returncode == 2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verdict"] == "infinite-violation"
