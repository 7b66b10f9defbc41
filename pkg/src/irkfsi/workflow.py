"""Configured runs: full-order simulation, basis construction, reduced runs, sweeps and studies.

Every function takes a :class:`RunConfig` and an output directory and writes
plain files (CSV, npz, JSON, basis files) that embed the config hash.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import BasisBuilder, BasisFileError, SnapshotSet, load_basis, reduced_inf_sup, save_basis
from .config import ConfigError, RunConfig
from .fluid import FluidParams
from .irk import NewmarkParams, radau_iia
from .mesh import BenchmarkGeometry, generate_benchmark, load_mesh
from .postproc import (TimeSeries, amplitude_spectrum, convergence_study, energy_report, interface_forces,
                       probe_displacement, relative_error_h1l2, write_vtk)
from .problem import CoupledState, FSIProblem, build_problem
from .reduced import ReducedSolver
from .solid import SolidParams
from .solver import BDF2NewmarkScheme, CoupledSolver, IRKScheme, NewtonFailure, SolverSettings
from .spaces import assemble_inner_product

log = logging.getLogger(__name__)

STATE_FIELDS = ("u", "p", "d", "v", "X", "Mu", "a")


class DataMismatch(RuntimeError):
    """Stored data does not belong to the configured problem."""


# ---------------------------------------------------------------- setup

def build_from_config(cfg: RunConfig) -> FSIProblem:
    run = cfg.section("run")
    if run["mesh"]:
        mesh = load_mesh(run["mesh"])
    else:
        mesh = generate_benchmark(BenchmarkGeometry(run["benchmark"], run["h"], dict(run["geometry"])))
    fluid = FluidParams(**cfg.section("fluid"))
    solid = SolidParams(**cfg.section("solid"))
    probe = cfg["output.probe"]
    return build_problem(mesh, fluid, solid, cfg["ale.pseudo_E"], cfg["ale.pseudo_nu"],
                         hold_until=cfg["time.T0"], probe=tuple(probe) if probe else None)


def make_scheme(cfg: RunConfig):
    tm = cfg.section("time")
    if tm["integrator"] == "irk":
        return IRKScheme(radau_iia(tm["stages"]))
    return BDF2NewmarkScheme(NewmarkParams(tm["beta"], tm["gamma"]))


def make_settings(cfg: RunConfig) -> SolverSettings:
    return SolverSettings(**cfg.section("solver"))


def initial_state(problem: FSIProblem, cfg: RunConfig) -> CoupledState:
    """Rest state; the isolated box starts from a smooth x-bubble in the solid."""
    amp = cfg["run.initial_bubble"]
    if not amp:
        return problem.zero_state()
    sv = problem.spaces.displacement
    X = sv.dof_coords()
    lo, hi = X.min(axis=0), X.max(axis=0)
    bub = np.sin(np.pi * (X[:, 0] - lo[0]) / (hi[0] - lo[0])) * np.sin(np.pi * (X[:, 1] - lo[1]) / (hi[1] - lo[1]))
    d0 = np.where(sv.dof_component(np.arange(sv.ndof)) == 0, amp * bub, 0.0)
    return problem.state_from_displacement(d0)


def state_arrays(state: CoupledState) -> dict:
    return {f: np.asarray(getattr(state, f)) for f in STATE_FIELDS + ("Mu_prev",)
            if getattr(state, f) is not None}


def state_from_arrays(t: float, arrays: dict) -> CoupledState:
    opt = {f: np.array(arrays[f]) for f in ("a", "Mu_prev") if f in arrays}
    return CoupledState(float(t), *(np.array(arrays[f]) for f in ("u", "p", "d", "v", "X", "Mu")), **opt)


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------- recording

@dataclass
class Recorder:
    problem: FSIProblem
    b: np.ndarray | None
    series: TimeSeries = field(default_factory=TimeSeries)

    def record(self, prev: CoupledState, new: CoupledState, extra: dict | None = None) -> None:
        pb = self.problem
        F = interface_forces(pb, new)
        dx, dy = probe_displacement(pb, new, pb.probe) if pb.probe is not None else (0.0, 0.0)
        rep = energy_report(pb, prev, new, self.b)
        self.series.append(new.t, F_x=F[0], F_y=F[1], d_x=dx, d_y=dy, E_total=rep.total, T_f=rep.T_f,
                           T_s=rep.T_s, W_s=rep.W_s, energy_residual=rep.residual,
                           iterations=new.info.get("iterations", 0), **(extra or {}))


@dataclass
class RunResult:
    series: TimeSeries
    states: list
    snapshots: SnapshotSet
    completed: bool
    failure: str | None = None


def _tableau_b(scheme):
    return scheme.tableau.b if isinstance(scheme, IRKScheme) else None


# ---------------------------------------------------------------- full-order run

def run_hf(cfg: RunConfig, out: str | Path | None = None, resume: bool = False,
           max_steps: int | None = None, keep_states: bool = False) -> RunResult:
    """Full-order time loop with series, snapshots, stored fields and checkpoints."""
    pb = build_from_config(cfg)
    scheme = make_scheme(cfg)
    solver = CoupledSolver(pb, scheme, make_settings(cfg))
    dt, T = cfg["time.dt"], cfg["time.T"]
    nsteps = int(round(T / dt))
    out = Path(out) if out is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    meta = cfg.meta()
    snaps = SnapshotSet(pb.mesh.hash(), stride=cfg["snapshots.stride"])
    rec = Recorder(pb, _tableau_b(scheme))
    fields: dict = {f: [] for f in STATE_FIELDS}
    ftimes: list = []
    state = initial_state(pb, cfg)
    k0 = 0
    ck = out / "checkpoint.npz" if out is not None else None
    if resume:
        if ck is None or not ck.exists():
            raise DataMismatch("no checkpoint to resume from")
        state, k0 = _load_checkpoint(ck, cfg, snaps, rec, fields, ftimes)
    elif cfg["output.store_fields"]:
        _store(fields, ftimes, state)
    states = [state] if keep_states else []
    failure = None
    k = k0
    every = cfg["run.checkpoint_every"]
    while k < nsteps:
        if max_steps is not None and k - k0 >= max_steps:
            break
        try:
            new = solver.advance(state, dt)
        except NewtonFailure as exc:
            failure = f"t={state.t + dt:.6g}: {exc}"
            log.error("solver failure %s", failure)
            break
        rec.record(state, new)
        snaps.add_step(pb, new, cfg["snapshots.window"])
        if cfg["output.store_fields"]:
            _store(fields, ftimes, new)
        if keep_states:
            states.append(new)
        state = new
        k += 1
        if out is not None and every and k % every == 0:
            _save_checkpoint(ck, cfg, state, k, snaps, rec, fields, ftimes)
    done = k == nsteps and failure is None
    if out is not None:
        rec.series.to_csv(out / "hf_series.csv", meta)
        if len(snaps):
            snaps.save(out / "snapshots.npz")
        if cfg["output.store_fields"]:
            with open(out / "hf_fields.npz", "wb") as fh:
                np.savez(fh, t=np.array(ftimes), mesh_hash=np.array(pb.mesh.hash()),
                         config_hash=np.array(meta["config_hash"]), **{f: np.array(v) for f, v in fields.items()})
        if not done and failure is None:
            _save_checkpoint(ck, cfg, state, k, snaps, rec, fields, ftimes)
    return RunResult(rec.series, states, snaps, done, failure)


def _store(fields, ftimes, state):
    ftimes.append(state.t)
    for f in STATE_FIELDS:
        val = getattr(state, f)
        fields[f].append(np.zeros_like(state.d) if val is None else np.array(val))


def _save_checkpoint(path, cfg, state, k, snaps, rec, fields, ftimes):
    series = {"times": rec.series.times, "channels": rec.series.channels}
    arrays = {f"state_{f}": v for f, v in state_arrays(state).items()}
    if len(snaps):
        U, P, D, t, c = snaps.matrices()
        arrays.update(snap_U=U, snap_P=P, snap_D=D, snap_t=t, snap_c=c)
    arrays.update({f"field_{f}": np.array(v) for f, v in fields.items() if v})
    with open(path, "wb") as fh:
        np.savez(fh, t=np.array(state.t), step=np.array(k), config_hash=np.array(cfg.hash()),
                 seen=np.array(snaps._seen), series=np.array(json.dumps(series)),
                 field_t=np.array(ftimes), **arrays)


def _load_checkpoint(path, cfg, snaps, rec, fields, ftimes):
    with np.load(path) as z:
        if str(z["config_hash"]) != cfg.hash():
            raise DataMismatch("checkpoint was written with a different configuration")
        state = state_from_arrays(float(z["t"]), {f: z[f"state_{f}"] for f in STATE_FIELDS + ("Mu_prev",)
                                                  if f"state_{f}" in z})
        series = json.loads(str(z["series"]))
        rec.series = TimeSeries(series["times"], series["channels"])
        snaps._seen = int(z["seen"])
        if "snap_t" in z:
            for j in range(len(z["snap_t"])):
                snaps.add(z["snap_U"][:, j], z["snap_P"][:, j], z["snap_D"][:, j], z["snap_t"][j], z["snap_c"][j])
        ftimes.extend(float(x) for x in z["field_t"])
        for f in STATE_FIELDS:
            if f"field_{f}" in z:
                fields[f].extend(np.array(x) for x in z[f"field_{f}"])
        return state, int(z["step"])


def load_fields(path, problem: FSIProblem | None = None) -> tuple[np.ndarray, list]:
    """Stored full-order states as (times, [CoupledState])."""
    with np.load(path) as z:
        if problem is not None and str(z["mesh_hash"]) != problem.mesh.hash():
            raise DataMismatch("stored fields come from a different mesh")
        t = np.array(z["t"])
        arr = {f: np.array(z[f]) for f in STATE_FIELDS if f in z}
    return t, [state_from_arrays(t[k], {f: a[k] for f, a in arr.items()}) for k in range(len(t))]


# ---------------------------------------------------------------- basis

def build_rom(cfg: RunConfig, out: str | Path, snapshots: SnapshotSet | None = None, tol: float | None = None):
    out = Path(out)
    pb = build_from_config(cfg)
    if snapshots is None:
        path = out / "snapshots.npz"
        if not path.exists():
            raise ConfigError("snapshots", f"no snapshots at {path}; run the full-order model first")
        snapshots = SnapshotSet.load(path)
    if snapshots.mesh_hash != pb.mesh.hash():
        raise DataMismatch("snapshots were computed on a different mesh")
    if not len(snapshots):
        raise ConfigError("snapshots.window", "snapshot window is empty")
    tol = cfg["rom.tol"] if tol is None else tol
    basis = BasisBuilder(pb).build(snapshots, tol, cfg["rom.supremizers"])
    save_basis(basis, out / cfg["rom.basis"])
    report = dict(basis.report(), inf_sup=reduced_inf_sup(pb, basis), snapshots=len(snapshots), **cfg.meta())
    _write_json(out / "rom_report.json", report)
    return basis, report


# ---------------------------------------------------------------- reduced run

def run_rom(cfg: RunConfig, out: str | Path, basis=None, keep_states: bool = False):
    """Reduced run over ``rom.window`` (default [0, T]) started from the stored full-order state."""
    out = Path(out)
    pb = build_from_config(cfg)
    if basis is None:
        try:
            basis = load_basis(out / cfg["rom.basis"], pb.mesh.hash())
        except FileNotFoundError:
            raise ConfigError("rom.basis", f"no basis file at {out / cfg['rom.basis']}") from None
        except BasisFileError as exc:
            raise DataMismatch(str(exc)) from None
    if basis.mesh_hash != pb.mesh.hash():
        raise DataMismatch("basis was built on a different mesh")
    tab = radau_iia(cfg["time.stages"])
    rs = ReducedSolver(pb, basis, tab, make_settings(cfg))
    dt = cfg["time.dt"]
    t0, t1 = cfg["rom.window"] or (0.0, cfg["time.T"])
    ref_t, ref = (None, None)
    fpath = out / "hf_fields.npz"
    if fpath.exists():
        ref_t, ref = load_fields(fpath, pb)
    if ref is not None and np.abs(ref_t - t0).min() < 1e-9 * max(1.0, t0):
        start = ref[int(np.argmin(np.abs(ref_t - t0)))]
    elif t0 == 0.0:
        start = initial_state(pb, cfg)
    else:
        raise ConfigError("rom.window", f"no stored full-order state at t={t0}")
    inner = {k: assemble_inner_product(k, pb.spaces) for k in ("H1_fluid", "L2_pressure")}
    rec = Recorder(pb, tab.b)
    state = rs.project(start)
    states = [state] if keep_states else []
    pairs = []
    failure = None
    for _ in range(int(round((t1 - t0) / dt))):
        try:
            new = rs.advance(state, dt)
        except NewtonFailure as exc:
            failure = f"t={state.t + dt:.6g}: {exc}"
            log.error("reduced solver failure %s", failure)
            break
        extra = {}
        if ref is not None:
            j = int(np.argmin(np.abs(ref_t - new.t)))
            if abs(ref_t[j] - new.t) < 1e-9 * max(1.0, new.t):
                extra["rel_error"] = relative_error_h1l2(inner, [ref[j]], [new])
                pairs.append((ref[j], new))
        rec.record(state, new, extra)
        if keep_states:
            states.append(new)
        state = new
    meta = dict(cfg.meta(), **{f"basis_{k}": v for k, v in basis.report().items()})
    rec.series.to_csv(out / "rom_series.csv", meta)
    report = dict(basis.report(), steps=len(rec.series.times), failure=failure, **cfg.meta())
    if pairs:
        report["error_h1l2"] = relative_error_h1l2(inner, *zip(*pairs))
    _write_json(out / "rom_error.json", report)
    return RunResult(rec.series, states, None, failure is None, failure), report


# ---------------------------------------------------------------- parametric sweep

def sample_points(cfg: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    sw = cfg.section("sweep")
    if len(sw["parameters"]) != len(sw["ranges"]):
        raise ConfigError("sweep.ranges", "one range per parameter")
    rng = np.random.default_rng(sw["seed"])
    lo = np.array([r[0] for r in sw["ranges"]], dtype=float)
    hi = np.array([r[1] for r in sw["ranges"]], dtype=float)
    pts = lo + (hi - lo) * rng.random((sw["n_train"] + sw["n_test"], len(lo)))
    return pts[:sw["n_train"]], pts[sw["n_train"]:]


def point_config(cfg: RunConfig, point) -> RunConfig:
    over = {}
    for name, val in zip(cfg["sweep.parameters"], point):
        if name == "m_star":
            over["solid.rho"] = float(val) * cfg["fluid.rho"]
        else:
            if "." not in name:
                raise ConfigError("sweep.parameters", f"unknown parameter {name!r}")
            over[name] = float(val)
    return cfg.with_overrides(over)


def sweep(cfg: RunConfig, out: str | Path) -> dict:
    """Train on sampled points, build bases on the pooled snapshots and test the ROM on new points."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    train, test = sample_points(cfg)
    names = list(cfg["sweep.parameters"])
    pooled = None
    status = TimeSeries()
    failures = []
    for k, pt in enumerate(train):
        pc = point_config(cfg, pt)
        res = run_hf(pc, out / f"train_{k:03d}")
        status.append(k, **dict(zip(names, pt)), ok=float(res.completed))
        if not res.completed:
            failures.append(f"train {k}: {res.failure}")
            continue
        if pooled is None:
            pooled = res.snapshots
        else:
            pooled.extend(res.snapshots)
    status.to_csv(out / "sweep_train.csv", cfg.meta())
    if pooled is None or not len(pooled):
        raise NewtonFailure("no training point produced snapshots")
    tols = cfg["rom.tolerances"] or [cfg["rom.tol"]]
    modes = TimeSeries()
    bases = {}
    for j, tol in enumerate(tols):
        basis, rep = build_rom(cfg.with_overrides({"rom.basis": f"basis_{j}.rb"}), out, pooled, tol)
        bases[tol] = basis
        modes.append(j, tol=tol, m=rep["m"], n_u0=rep["n_u0"], n_u=rep["n_u"], n_p=rep["n_p"], n_s=rep["n_s"])
    modes.to_csv(out / "sweep_modes.csv", cfg.meta())
    errors = TimeSeries()
    test_T = cfg["sweep.test_T"]
    for k, pt in enumerate(test):
        pc = point_config(cfg, pt)
        if test_T:
            pc = pc.with_overrides({"time.T": test_T})
        pdir = out / f"test_{k:03d}"
        res = run_hf(pc, pdir)
        row = dict(zip(names, pt))
        if not res.completed:
            failures.append(f"test {k}: {res.failure}")
        for j, tol in enumerate(tols):
            err = np.nan
            if res.completed:
                try:
                    rr, rep = run_rom(pc.with_overrides({"rom.basis": f"basis_{j}.rb"}), pdir, bases[tol])
                    err = rep.get("error_h1l2", np.nan) if rr.completed else np.nan
                    if not rr.completed:
                        failures.append(f"test {k} tol {tol}: {rr.failure}")
                except NewtonFailure as exc:
                    failures.append(f"test {k} tol {tol}: {exc}")
            row[f"err_{j}"] = err
        errors.append(k, **row)
    errors.to_csv(out / "sweep_errors.csv", dict(cfg.meta(), tolerances=list(tols)))
    summary = dict(train=len(train), test=len(test), failures=failures, tolerances=list(tols), **cfg.meta())
    _write_json(out / "sweep_summary.json", summary)
    return summary


# ---------------------------------------------------------------- time-step convergence

def solid_h1_error(problem: FSIProblem, d_ref, d) -> float:
    H = assemble_inner_product("H1_solid", problem.spaces).matrix
    e = np.asarray(d) - np.asarray(d_ref)
    return float(np.sqrt(e @ (H @ e)))


def convergence(cfg: RunConfig, out: str | Path | None = None) -> dict:
    """Self-convergence of the final solid displacement against a fine same-mesh reference."""
    cv = cfg.section("convergence")
    pb = build_from_config(cfg)
    d_ref = _final_displacement(cfg, cv["reference_dt"], cv["reference_stages"], pb)
    runs = []
    for s in cv["stages"]:
        for dt in cv["dts"]:
            d = _final_displacement(cfg, dt, s, pb)
            runs.append((dt, s, solid_h1_error(pb, d_ref, d)))
    fits = convergence_study(runs)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        lines = [f"# {k}={v}" for k, v in cfg.meta().items()] + ["s,dt,error"]
        lines += [f"{s},{dt!r},{err!r}" for dt, s, err in runs]
        lines += [f"# rate s={s}: {f.rate!r}" for s, f in fits.items()]
        (out / "convergence.csv").write_text("\n".join(lines) + "\n")
    return dict(runs=runs, fits=fits)


def _final_displacement(cfg, dt, s, pb):
    c = cfg.with_overrides({"time.dt": dt, "time.stages": s, "time.integrator": "irk",
                            "output.store_fields": False})
    solver = CoupledSolver(pb, IRKScheme(radau_iia(s)), make_settings(c))
    state = initial_state(pb, c)
    for _ in range(int(round(c["time.T"] / dt))):
        state = solver.advance(state, dt)
    return state.d


# ---------------------------------------------------------------- spectra and fields

def spectrum(csv_path, channel: str = "F_x", window=None, out=None) -> dict:
    ts = TimeSeries.from_csv(csv_path)
    if channel not in ts.channels:
        raise ConfigError("channel", f"no channel {channel!r} in {csv_path}")
    spec = amplitude_spectrum(ts.times, ts[channel], window)
    if out is not None:
        lines = [f"# channel={channel}", f"# window={window}", f"# version={__version__}", "frequency,amplitude"]
        lines += [f"{f!r},{a!r}" for f, a in zip(spec.frequencies, spec.amplitudes)]
        Path(out).write_text("\n".join(lines) + "\n")
    return dict(dominant=spec.dominant, resolution=spec.resolution, spectrum=spec)


def export_vtk(cfg: RunConfig, out: str | Path, steps=None, deformed: bool = True) -> list:
    out = Path(out)
    pb = build_from_config(cfg)
    t, states = load_fields(out / "hf_fields.npz", pb)
    idx = range(len(states)) if steps is None else steps
    paths = []
    for k in idx:
        if not 0 <= k < len(states):
            raise ConfigError("steps", f"step {k} outside 0..{len(states) - 1}")
        path = out / f"fields_{k:05d}.vtk"
        write_vtk(path, pb, states[k], deformed)
        paths.append(path)
    return paths
