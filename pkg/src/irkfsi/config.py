"""Run configuration: INI-style sections with Python-literal values.

Grammar::

    [section]
    key = value          # value parsed with ast.literal_eval, else kept as text
    include = base.ini   # in [config]: files merged first, paths relative to this file

Later files override earlier ones; command-line overrides come last.
"""

from __future__ import annotations

import ast
import configparser
import copy
import hashlib
import json
from pathlib import Path

from . import __version__


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


DEFAULTS: dict[str, dict] = {
    "run": dict(benchmark="vertical_beam", h=0.1, mesh=None, geometry={}, output="out",
                deterministic=True, checkpoint_every=0, initial_bubble=0.0),
    "fluid": dict(rho=1.0, mu=0.035, u_inf=1.0, t_ramp=1.0),
    "solid": dict(rho=1.1, E=1.0e3, nu=0.3, model="svk"),
    "ale": dict(pseudo_E=1.0, pseudo_nu=0.3),
    "time": dict(integrator="irk", stages=2, dt=0.05, T=6.0, T0=0.0, beta=0.25, gamma=0.5),
    "snapshots": dict(stride=1, window=None),
    "rom": dict(tol=1e-5, basis="basis.rb", window=None, supremizers=True, tolerances=None),
    "solver": dict(atol=1e-10, rtol=1e-8, max_iter=25, line_search=False, damping=0.5),
    "output": dict(probe=None, store_fields=True),
    "convergence": dict(dts=(0.1, 0.05, 0.025), stages=(2, 3), reference_dt=0.00625, reference_stages=3),
    "sweep": dict(parameters=("solid.E", "m_star"), ranges=((1.0e3, 1.0e4), (0.5, 2.0)),
                  n_train=20, n_test=5, seed=0, test_T=None),
}

BENCHMARK_DEFAULTS: dict[str, dict] = {
    "vertical_beam": {"output": dict(probe=(0.6, 0.5))},
    "box_isolated": {"fluid": dict(u_inf=0.0, mu=0.1), "solid": dict(E=10.0),
                     "run": dict(h=0.25, initial_bubble=0.05), "time": dict(T=0.4)},
    "turek_fsi3": {"fluid": dict(rho=1000.0, mu=1.0, u_inf=3.0, t_ramp=2.0),
                   "solid": dict(rho=1000.0, E=5.6e6, nu=0.4),
                   "time": dict(dt=0.01, T=39.0, T0=30.0),
                   "run": dict(h=0.05), "output": dict(probe=(0.6, 0.2))},
}

# where results go, not what is computed
HASH_EXCLUDE = {("run", "output"), ("run", "checkpoint_every")}

POSITIVE = ["run.h", "fluid.rho", "fluid.mu", "solid.rho", "solid.E", "ale.pseudo_E", "time.dt", "time.T",
            "solver.atol", "solver.rtol", "solver.max_iter", "snapshots.stride"]


def _parse_value(text: str):
    text = text.strip()
    if text.lower() in ("true", "yes", "on"):
        return True
    if text.lower() in ("false", "no", "off"):
        return False
    if text.lower() in ("none", ""):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _read_file(path: Path, seen: set) -> dict:
    path = path.resolve()
    if path in seen:
        raise ConfigError("config.include", f"include cycle at {path}")
    seen = seen | {path}
    if not path.exists():
        raise ConfigError("config", f"file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    out: dict = {}
    if cp.has_section("config") and cp.has_option("config", "include"):
        incs = _parse_value(cp.get("config", "include"))
        for inc in ([incs] if isinstance(incs, str) else list(incs)):
            _merge(out, _read_file(path.parent / inc, seen))
    for sec in cp.sections():
        if sec == "config":
            continue
        for key, val in cp.items(sec):
            out.setdefault(sec, {})[key] = _parse_value(val)
    return out


def _merge(base: dict, extra: dict) -> dict:
    for sec, vals in extra.items():
        base.setdefault(sec, {}).update(vals)
    return base


class RunConfig:
    def __init__(self, data: dict | None = None):
        user = copy.deepcopy(data or {})
        bench = user.get("run", {}).get("benchmark", DEFAULTS["run"]["benchmark"])
        self.data = copy.deepcopy(DEFAULTS)
        _merge(self.data, copy.deepcopy(BENCHMARK_DEFAULTS.get(bench, {})))
        for sec, vals in user.items():
            if sec not in self.data:
                raise ConfigError(sec, "unknown section")
            for key in vals:
                if key not in self.data[sec]:
                    raise ConfigError(f"{sec}.{key}", "unknown key")
        _merge(self.data, user)
        self.validate()

    # -- access
    def __getitem__(self, dotted: str):
        sec, key = dotted.split(".", 1)
        return self.data[sec][key]

    def section(self, name: str) -> dict:
        return self.data[name]

    def with_overrides(self, overrides: dict) -> "RunConfig":
        user = copy.deepcopy(self.data)
        for dotted, val in overrides.items():
            sec, key = dotted.split(".", 1)
            user.setdefault(sec, {})[key] = val
        return RunConfig(user)

    # -- checks
    def validate(self) -> None:
        d = self.data
        for dotted in POSITIVE:
            val = self[dotted]
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
                raise ConfigError(dotted, f"must be a positive number, got {val!r}")
        if d["run"]["benchmark"] not in BENCHMARK_DEFAULTS:
            raise ConfigError("run.benchmark", f"unknown benchmark {d['run']['benchmark']!r}")
        nu = d["solid"]["nu"]
        if not isinstance(nu, (int, float)) or not 0.0 <= nu < 0.5:
            raise ConfigError("solid.nu", f"Poisson ratio must satisfy 0 <= nu < 0.5, got {nu!r}")
        if d["solid"]["model"] not in ("linear", "svk"):
            raise ConfigError("solid.model", "must be 'linear' or 'svk'")
        if d["time"]["integrator"] not in ("irk", "bdf2_newmark"):
            raise ConfigError("time.integrator", "must be 'irk' or 'bdf2_newmark'")
        if d["time"]["stages"] not in (1, 2, 3, 4):
            raise ConfigError("time.stages", "must be 1..4")
        if d["fluid"]["u_inf"] < 0:
            raise ConfigError("fluid.u_inf", "must be non-negative")
        T = d["time"]["T"]
        if not 0 <= d["time"]["T0"] < T:
            raise ConfigError("time.T0", "hold time must lie in [0, T)")
        for dotted in ("snapshots.window", "rom.window"):
            w = self[dotted]
            if w is not None:
                if len(w) != 2 or not (0 <= w[0] < w[1] <= T + 1e-12):
                    raise ConfigError(dotted, f"window must satisfy 0 <= t0 < t1 <= T, got {w!r}")
        tol = d["rom"]["tol"]
        if not 0 <= tol < 1:
            raise ConfigError("rom.tol", "must lie in [0, 1)")
        if d["output"]["probe"] is not None and len(d["output"]["probe"]) != 2:
            raise ConfigError("output.probe", "must be a point (x, y)")

    # -- identity
    def canonical(self) -> str:
        data = {sec: {k: v for k, v in vals.items() if (sec, k) not in HASH_EXCLUDE} for sec, vals in self.data.items()}
        return json.dumps(data, sort_keys=True, default=list, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def meta(self) -> dict:
        return {"config_hash": self.hash(), "version": __version__}

    def to_text(self) -> str:
        lines = []
        for sec, vals in self.data.items():
            lines.append(f"[{sec}]")
            for key, val in vals.items():
                lines.append(f"{key} = {val!r}")
            lines.append("")
        return "\n".join(lines)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    data = _read_file(Path(path), set()) if path else {}
    cfg = RunConfig(data)
    return cfg.with_overrides(overrides) if overrides else cfg


def parse_override(text: str) -> tuple[str, object]:
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigError(text, "override must look like section.key=value")
    key, val = text.split("=", 1)
    return key.strip(), _parse_value(val)
