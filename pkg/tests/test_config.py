from pathlib import Path

import pytest

from irkfsi.config import DEFAULTS, ConfigError, RunConfig, load_config, parse_override


def test_defaults_are_valid_and_hash_is_stable():
    a, b = RunConfig(), RunConfig({})
    assert a.hash() == b.hash() and len(a.hash()) == 16
    assert a["fluid.mu"] == DEFAULTS["fluid"]["mu"]
    assert a.meta()["config_hash"] == a.hash()


def test_benchmark_defaults_apply_before_user_values():
    cfg = RunConfig({"run": {"benchmark": "turek_fsi3"}, "time": {"dt": 0.02}})
    assert cfg["fluid.rho"] == 1000.0 and cfg["time.T0"] == 30.0 and cfg["time.dt"] == 0.02


def test_output_location_does_not_change_hash():
    base = RunConfig()
    assert base.with_overrides({"run.output": "elsewhere", "run.checkpoint_every": 5}).hash() == base.hash()
    assert base.with_overrides({"time.dt": 0.025}).hash() != base.hash()


@pytest.mark.parametrize("key,value", [
    ("solid.nu", 0.5), ("solid.E", 0.0), ("fluid.mu", -1.0), ("time.dt", "fast"), ("time.stages", 5),
    ("solid.model", "neo"), ("time.integrator", "rk4"), ("time.T0", 7.0), ("rom.tol", 1.0),
    ("rom.window", (2.0, 9.0)), ("output.probe", (1.0,)), ("run.benchmark", "cavity"),
])
def test_validation_names_the_key(key, value):
    with pytest.raises(ConfigError) as info:
        RunConfig().with_overrides({key: value})
    assert info.value.key == key


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown section"):
        RunConfig({"physics": {"g": 9.81}})
    with pytest.raises(ConfigError, match="unknown key"):
        RunConfig({"fluid": {"viscosity": 1.0}})


def test_file_grammar_and_includes(tmp_path):
    (tmp_path / "base.ini").write_text("[fluid]\nmu = 0.1\nrho = 2\n[time]\nstages = 3\n")
    (tmp_path / "run.ini").write_text(
        "[config]\ninclude = base.ini\n\n[fluid]\nmu = 0.2   # comment\n"
        "[rom]\nwindow = (1.0, 2.0)\nsupremizers = no\nbasis = my basis.rb\n")
    cfg = load_config(tmp_path / "run.ini", {"time.dt": 0.01})
    assert cfg["fluid.mu"] == 0.2 and cfg["fluid.rho"] == 2 and cfg["time.stages"] == 3
    assert cfg["rom.window"] == (1.0, 2.0) and cfg["rom.supremizers"] is False
    assert cfg["rom.basis"] == "my basis.rb" and cfg["time.dt"] == 0.01


def test_include_cycle_and_missing_file(tmp_path):
    (tmp_path / "a.ini").write_text("[config]\ninclude = b.ini\n")
    (tmp_path / "b.ini").write_text("[config]\ninclude = a.ini\n")
    with pytest.raises(ConfigError, match="cycle"):
        load_config(tmp_path / "a.ini")
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.ini")


def test_printed_config_reloads_to_same_hash(tmp_path):
    cfg = RunConfig({"run": {"benchmark": "box_isolated"}, "time": {"stages": 3}})
    (tmp_path / "p.ini").write_text(cfg.to_text())
    assert load_config(tmp_path / "p.ini").hash() == cfg.hash()


def test_override_parsing():
    assert parse_override("time.dt=0.01") == ("time.dt", 0.01)
    assert parse_override("solid.model=linear") == ("solid.model", "linear")
    assert parse_override("rom.window=(1, 2)") == ("rom.window", (1, 2))
    with pytest.raises(ConfigError):
        parse_override("dt=0.1")


CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.ini")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    cfg = load_config(path)
    assert cfg["run.output"].startswith("out/")


def test_sweep_config_inherits_through_include():
    cfg = load_config(CONFIG_DIR / "sweep.ini")
    assert cfg["run.benchmark"] == "vertical_beam" and cfg["fluid.t_ramp"] == 1.0 and cfg["run.h"] == 0.2
