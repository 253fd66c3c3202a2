#
# Command line interface: subcommands, artifacts, exit codes.
#
# Everything runs in-process through main() so the tests stay fast and the
# exit paths stay inspectable.
#

import os
import shutil
import subprocess

import pytest

from macstag.cli import main

SMALL = "[grid]\nn = 4 4\n[time]\nfinal = 0.05\nsteps = 2\n"


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "case.ini"
    path.write_text(SMALL)
    return str(path)


def test_run_writes_artifacts(small_config, tmp_path, capsys):
    out = str(tmp_path / "out")
    assert main(["run", "--config", small_config, "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "diagnostics.csv"))
    assert os.path.exists(os.path.join(out, "config.resolved.ini"))
    assert os.path.exists(os.path.join(out, "fields_000002_pressure.csv"))
    assert os.path.exists(os.path.join(out, "fields_000002_velocity.csv"))
    text = capsys.readouterr().out
    assert "step" in text and "run complete" in text
    # the resolved echo records the effective output directory
    resolved = open(os.path.join(out, "config.resolved.ini")).read()
    assert out in resolved


def test_run_rerun_byte_identical(small_config, tmp_path):
    out_a = str(tmp_path / "a")
    out_b = str(tmp_path / "b")
    assert main(["run", "--config", small_config, "--out", out_a]) == 0
    assert main(["run", "--config", small_config, "--out", out_b]) == 0
    da = open(os.path.join(out_a, "diagnostics.csv"), "rb").read()
    db = open(os.path.join(out_b, "diagnostics.csv"), "rb").read()
    assert da == db


def test_run_cadence_and_vtk(tmp_path):
    path = tmp_path / "case.ini"
    path.write_text(SMALL + "[output]\ncadence = 1\nformat = vtk\n")
    out = str(tmp_path / "out")
    assert main(["run", "--config", str(path), "--out", out]) == 0
    for n in (0, 1, 2):
        assert os.path.exists(os.path.join(out, f"fields_{n:06d}.vtk"))


def test_verify_default_grid(tmp_path, capsys):
    out = str(tmp_path / "v")
    assert main(["verify", "--out", out]) == 0
    text = capsys.readouterr().out
    assert "gradient/divergence duality" in text
    assert "verify: pass" in text
    assert os.path.exists(os.path.join(out, "verify_report.txt"))


def test_verify_flags_loose_solves(tmp_path):
    # sloppy inner solves must show up as a failed energy verdict
    path = tmp_path / "loose.ini"
    path.write_text(
        "[grid]\nn = 6 6\n[time]\nfinal = 0.1\nsteps = 4\n"
        "[solver]\nprediction_tol = 1e-3\npoisson_tol = 1e-3\n"
    )
    assert main(["verify", "--config", str(path), "--out", str(tmp_path / "o")]) == 1


def test_operators_check(tmp_path, capsys):
    out = str(tmp_path / "ops")
    assert main(["operators-check", "--out", out]) == 0
    mats = os.path.join(out, "matrices")
    names = sorted(os.listdir(mats))
    assert "gradient.txt" in names and "divergence.txt" in names
    assert any(n.startswith("diffusion_") for n in names)


def test_convergence(small_config, tmp_path, capsys):
    out = str(tmp_path / "conv")
    assert main(["convergence", "--config", small_config, "--levels", "2", "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "study.csv"))
    text = capsys.readouterr().out
    assert "verdict: pass" in text


def test_translate(tmp_path, capsys):
    path = tmp_path / "case.ini"
    path.write_text("[grid]\nn = 4 4\n[time]\nfinal = 0.1\nsteps = 4\n")
    out = str(tmp_path / "tr")
    assert main(["translate", "--config", str(path), "--taus", "1,2", "--out", out]) == 0
    lines = open(os.path.join(out, "translate.csv")).read().splitlines()
    assert lines[0] == "tau,steps,l2_translate_sq,star_translate_sq"
    assert len(lines) == 3


def test_translate_rejects_oversized_tau(tmp_path, capsys):
    path = tmp_path / "case.ini"
    path.write_text("[grid]\nn = 4 4\n[time]\nfinal = 0.1\nsteps = 4\n")
    assert main(["translate", "--config", str(path), "--taus", "9"]) == 2
    assert main(["translate", "--config", str(path), "--taus", "x"]) == 2
    assert main(["translate", "--config", str(path), "--taus", "0"]) == 2


def test_usage_errors(capsys):
    assert main(["run", "--bogus"]) == 2
    assert main([]) == 2
    assert main(["no-such-command"]) == 2


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\nwhat = 1\n")
    assert main(["run", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "what" in err
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2


def test_dimension_mismatch_is_config_error(tmp_path):
    path = tmp_path / "m.ini"
    path.write_text("[problem]\nname = vortex3d\n")  # default grid is 2D
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_seed_flag_threads_through(tmp_path, capsys):
    out = str(tmp_path / "s")
    assert main(["verify", "--seed", "42", "--out", out]) == 0


def test_env_override(tmp_path, monkeypatch, small_config):
    out = str(tmp_path / "enved")
    monkeypatch.setenv("MACSTAG_OUTPUT_DIRECTORY", out)
    assert main(["run", "--config", small_config]) == 0
    assert os.path.exists(os.path.join(out, "diagnostics.csv"))


def test_console_script_installed():
    exe = shutil.which("macstag")
    if exe is None:
        pytest.skip("entry point not on PATH")
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "translate" in proc.stdout
