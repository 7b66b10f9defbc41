import json

import numpy as np
import pytest

from irkfsi import __version__
from irkfsi.cli import main

TINY = """\
[run]
benchmark = vertical_beam
h = 0.25
geometry = {"length": 1.0, "height": 0.5, "beam_x0": 0.25, "beam_width": 0.25, "beam_height": 0.25}
[fluid]
mu = 0.05
t_ramp = 0.2
[solid]
E = 50.0
[time]
dt = 0.05
T = 0.4
[rom]
tol = 1e-4
window = (0.2, 0.4)
[output]
probe = (0.375, 0.25)
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY)
    return str(path)


def _run(*args):
    return main([str(a) for a in args])


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0 and __version__ in capsys.readouterr().out


def test_print_config(cfg, capsys):
    assert _run("print-config", cfg, "--set", "time.stages=3") == 0
    out = capsys.readouterr().out
    assert out.startswith("# config_hash=") and "stages = 3" in out


def test_config_errors_exit_2(cfg, tmp_path, capsys):
    assert _run("run-hf", cfg, "--set", "solid.nu=0.5", "-o", tmp_path / "o") == 2
    assert "solid.nu" in capsys.readouterr().err
    assert _run("run-hf", tmp_path / "nope.ini") == 2
    assert _run("run-hf", cfg, "--set", "bad") == 2


def test_full_workflow(cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert _run("run-hf", cfg, "-o", out) == 0
    text = (out / "hf_series.csv").read_text()
    assert text.startswith("# config_hash=") and f"# version={__version__}" in text
    rows = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert rows[0].split(",")[:5] == ["t", "F_x", "F_y", "d_x", "d_y"] and len(rows) == 9
    for name in ("snapshots.npz", "hf_fields.npz"):
        assert (out / name).exists()

    assert _run("build-rom", cfg, "-o", out) == 0
    rep = json.loads((out / "rom_report.json").read_text())
    assert rep["m"] >= 1 and rep["config_hash"] and rep["inf_sup"] > 0
    first = (out / "basis.rb").read_bytes()
    assert _run("build-rom", cfg, "-o", out) == 0
    assert (out / "basis.rb").read_bytes() == first

    assert _run("run-rom", cfg, "-o", out) == 0
    err = json.loads((out / "rom_error.json").read_text())
    assert 0 <= err["error_h1l2"] < 0.1
    header = [ln for ln in (out / "rom_series.csv").read_text().splitlines() if not ln.startswith("#")][0]
    assert header.startswith("t,") and "rel_error" in header

    capsys.readouterr()
    assert _run("spectrum", out / "hf_series.csv", "--channel", "F_y", "-o", out / "spec.csv") == 0
    assert "dominant frequency" in capsys.readouterr().out
    assert (out / "spec.csv").exists()
    assert _run("spectrum", out / "hf_series.csv", "--channel", "nope") == 2

    assert _run("export-vtk", cfg, "-o", out, "--steps", 0, 8) == 0
    assert len(list(out.glob("*.vtk"))) == 2
    assert _run("export-vtk", cfg, "-o", out, "--steps", 99) == 2


def test_rom_data_mismatch_exit_4(cfg, tmp_path):
    out = tmp_path / "out"
    assert _run("run-hf", cfg, "-o", out, "--set", "time.T=0.3", "--set", "rom.window=(0.1, 0.3)") == 0
    assert _run("build-rom", cfg, "-o", out, "--set", "rom.window=(0.1, 0.3)") == 0
    assert _run("build-rom", cfg, "-o", out, "--set", "run.h=0.125") == 4
    assert _run("run-rom", cfg, "-o", out, "--set", "run.h=0.125") == 4
    (out / "basis.rb").write_bytes((out / "basis.rb").read_bytes()[:-3])
    assert _run("run-rom", cfg, "-o", out) == 4


def test_missing_snapshots_exit_2(cfg, tmp_path):
    assert _run("build-rom", cfg, "-o", tmp_path / "empty") == 2
    out = tmp_path / "w"
    assert _run("run-hf", cfg, "-o", out, "--set", "time.T=0.2", "--set", "snapshots.window=(0.11, 0.14)",
                "--set", "rom.window=None") == 0
    assert _run("build-rom", cfg, "-o", out, "--set", "time.T=0.2", "--set", "rom.window=None") == 2


def test_solver_failure_exit_3(cfg, tmp_path, capsys):
    assert _run("run-hf", cfg, "-o", tmp_path / "f", "--set", "solver.max_iter=1") == 3
    assert "solver failure" in capsys.readouterr().err


def test_runs_are_byte_identical(cfg, tmp_path):
    for name in ("a", "b"):
        assert _run("run-hf", cfg, "-o", tmp_path / name, "--set", "time.T=0.2", "--set", "rom.window=None") == 0
    for f in ("hf_series.csv", "snapshots.npz", "hf_fields.npz"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_resume_continues_bitwise(cfg, tmp_path):
    assert _run("run-hf", cfg, "-o", tmp_path / "full") == 0
    part = tmp_path / "part"
    assert _run("run-hf", cfg, "-o", part, "--max-steps", 3) == 0
    assert (part / "checkpoint.npz").exists()
    assert _run("run-hf", cfg, "-o", part, "--resume") == 0
    for f in ("hf_series.csv", "snapshots.npz"):
        assert (part / f).read_bytes() == (tmp_path / "full" / f).read_bytes()
    with np.load(part / "hf_fields.npz") as a, np.load(tmp_path / "full" / "hf_fields.npz") as b:
        for k in a.files:
            assert np.array_equal(a[k], b[k]), k
    assert _run("run-hf", cfg, "-o", part, "--resume", "--set", "fluid.mu=0.06") == 4
    assert _run("run-hf", cfg, "-o", tmp_path / "none", "--resume") == 4


def test_convergence_command(cfg, tmp_path, capsys):
    out = tmp_path / "cv"
    assert _run("convergence", cfg, "-o", out, "--set", "time.T=0.2", "--set", "rom.window=None", "--set", "convergence.dts=(0.1, 0.05)",
                "--set", "convergence.stages=(1, 2)", "--set", "convergence.reference_dt=0.0125") == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert "s,dt,error" in lines and sum(1 for ln in lines if ln[:2] in ("1,", "2,")) == 4
    assert "s=2 rate=" in capsys.readouterr().out


def test_sweep_is_seeded_and_reports(cfg, tmp_path):
    args = ["--set", "time.T=0.2", "--set", "rom.window=(0.1, 0.2)", "--set", "sweep.n_train=2",
            "--set", "sweep.n_test=1", "--set", "sweep.ranges=((40.0, 60.0), (0.8, 1.2))",
            "--set", "rom.tolerances=(1e-2, 1e-4)", "--set", "sweep.test_T=0.3"]
    for name in ("s1", "s2"):
        assert _run("sweep", cfg, "-o", tmp_path / name, *args) == 0
    a, b = tmp_path / "s1", tmp_path / "s2"
    for f in ("sweep_train.csv", "sweep_modes.csv", "sweep_errors.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    summary = json.loads((a / "sweep_summary.json").read_text())
    assert summary["train"] == 2 and summary["test"] == 1 and summary["failures"] == []
    errs = [ln for ln in (a / "sweep_errors.csv").read_text().splitlines() if not ln.startswith("#")]
    assert errs[0].endswith("err_0,err_1") and len(errs) == 2
