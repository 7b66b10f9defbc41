"""Engineering outputs: forces, probes, energies, spectra, rates and file export."""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from .problem import CoupledState, FSIProblem
from .quadrature import gauss_line
from .spaces import p1_basis, p2_basis

__all__ = [
    "TimeSeries", "Spectrum", "ConvergenceFit", "EnergyReport", "interface_forces", "direct_traction",
    "probe_displacement", "amplitude_spectrum", "fit_rate", "convergence_study", "kinetic_energies",
    "total_energy", "energy_report", "relative_error_h1l2", "write_vtk",
]


# ---------------------------------------------------------------- forces

def interface_forces(problem: FSIProblem, state: CoupledState) -> np.ndarray:
    """Force exerted by the fluid on the structure and rigid bodies, from the
    momentum residual tested with unit translations on the body nodes."""
    if state.body_residual is None:
        return np.zeros(2)
    return -state.body_residual[problem.force_nodes].reshape(-1, 2).sum(axis=0)


def _fluid_edge_map(problem: FSIProblem) -> dict:
    v = problem.spaces.velocity
    tri = problem.mesh.triangles[v.triangles]
    out = {}
    for e, t in enumerate(tri):
        for a, b in ((0, 1), (1, 2), (2, 0)):
            out[(min(t[a], t[b]), max(t[a], t[b]))] = (e, a, b)
    return out


def direct_traction(problem: FSIProblem, state: CoupledState, names=("interface", "cylinder"),
                    npts: int = 4) -> np.ndarray:
    """∫ σ n ds over the body boundary, evaluated from the adjacent fluid element."""
    mesh, v, pr = problem.mesh, problem.spaces.velocity, problem.spaces.pressure
    mu = problem.fluid.params.mu
    emap = _fluid_edge_map(problem)
    facets = [mesh.facets_with_role("interface")]
    facets += [mesh.facets_with_name(n) for n in names if n != "interface" and n in mesh.tag_names.values()]
    facets = np.concatenate(facets) if facets else np.zeros((0, 2), dtype=np.int64)
    t, w = gauss_line(npts)
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    F = np.zeros(2)
    for f in facets:
        key = (min(f), max(f))
        if key not in emap:
            continue
        e, a, b = emap[key]
        tri = mesh.triangles[v.triangles[e]]
        ia, ib = (a, b) if tri[a] == f[0] else (b, a)
        pts = (1 - t)[:, None] * corners[ia] + t[:, None] * corners[ib]
        N, dN = p2_basis(pts)
        L, _ = p1_basis(pts)
        dofs = v.element_dofs[e]
        xe = v.coords[v.elements[e]] + state.X[dofs].reshape(6, 2)
        ue = state.u[dofs].reshape(6, 2)
        pe = state.p[pr.elements[e]]
        centroid = xe[:3].mean(axis=0)
        for q in range(len(t)):
            J = xe.T @ dN[q]
            gN = dN[q] @ np.linalg.inv(J)
            Gu = ue.T @ gN
            sigma = -(L[q] @ pe) * np.eye(2) + mu * (Gu + Gu.T)
            tang = J @ (corners[ib] - corners[ia])
            n = np.array([tang[1], -tang[0]])
            x = N[q] @ xe
            if n @ (x - centroid) < 0:
                n = -n
            F -= w[q] * sigma @ n      # n points out of the fluid element, ds = |tang| dt
    return F


# ---------------------------------------------------------------- probes

def probe_displacement(problem: FSIProblem, state: CoupledState, point) -> np.ndarray:
    """P2 interpolation of the solid displacement at a reference point."""
    sp_ = problem.spaces
    v = sp_.displacement
    x = np.asarray(point, dtype=float)
    tri = v.coords[v.elements[:, :3]]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    l1 = ((x[0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (x[1] - a[:, 1]) * (c[:, 0] - a[:, 0])) / det
    l2 = ((b[:, 0] - a[:, 0]) * (x[1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (x[0] - a[:, 0])) / det
    l0 = 1 - l1 - l2
    tol = 1e-10
    inside = np.flatnonzero((l0 >= -tol) & (l1 >= -tol) & (l2 >= -tol))
    if not len(inside):
        raise ValueError(f"probe point {tuple(x)} lies outside the solid domain")
    e = inside[0]
    N, _ = p2_basis(np.array([[l1[e], l2[e]]]))
    return N[0] @ state.d[v.element_dofs[e]].reshape(6, 2)


# ---------------------------------------------------------------- energies

@dataclass(frozen=True)
class EnergyReport:
    T_f: float
    T_s: float
    W_s: float
    dissipation: float      # time integral of the viscous dissipation over the step
    residual: float         # normalized energy-identity residual of the step

    @property
    def total(self) -> float:
        return self.T_f + self.T_s + self.W_s


def kinetic_energies(problem: FSIProblem, state: CoupledState) -> tuple[float, float, float]:
    T_f = 0.5 * float(state.u @ state.Mu)
    T_s = 0.5 * float(state.v @ (problem.solid.M @ state.v))
    W_s = problem.solid.energy(state.d)
    return T_f, T_s, W_s


def total_energy(problem: FSIProblem, state: CoupledState) -> float:
    return float(sum(kinetic_energies(problem, state)))


def energy_report(problem: FSIProblem, prev: CoupledState, new: CoupledState, b=None,
                  eps: float = 1e-14) -> EnergyReport:
    rec = new.stages
    dt = new.t - prev.t
    diss = 0.0
    if rec is not None:
        b = np.ones(1) if b is None and len(rec.times) == 1 else np.asarray(b)
        diss = dt * sum(b[i] * problem.fluid.dissipation(rec.U[i], rec.X[i]) for i in range(len(rec.times)))
    T_f, T_s, W_s = kinetic_energies(problem, new)
    E0, E1 = total_energy(problem, prev), T_f + T_s + W_s
    r = (E1 - E0 + diss) / max(E1, eps)
    return EnergyReport(T_f, T_s, W_s, diss, r)


# ---------------------------------------------------------------- errors

def relative_error_h1l2(inner: dict, ref_states, states) -> float:
    """Time-aggregated relative error of (u, p) in the H¹ × L² norm."""
    H, M = inner["H1_fluid"].matrix, inner["L2_pressure"].matrix
    num = den = 0.0
    for a, b in zip(ref_states, states):
        du, dp = a.u - b.u, a.p - b.p
        num += du @ (H @ du) + dp @ (M @ dp)
        den += a.u @ (H @ a.u) + a.p @ (M @ a.p)
    return float(np.sqrt(num / den)) if den > 0 else 0.0


# ---------------------------------------------------------------- time series

@dataclass
class TimeSeries:
    times: list = field(default_factory=list)
    channels: dict = field(default_factory=dict)

    def append(self, t: float, **values) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError("time series times must be strictly increasing")
        if self.times and set(values) != set(self.channels):
            raise ValueError("channel set changed")
        self.times.append(float(t))
        for k, val in values.items():
            self.channels.setdefault(k, []).append(float(val))

    def __getitem__(self, name) -> np.ndarray:
        return np.asarray(self.channels[name])

    def to_csv(self, path=None, meta: dict | None = None) -> str:
        buf = io.StringIO()
        for k, val in (meta or {}).items():
            buf.write(f"# {k}={val}\n")
        names = list(self.channels)
        buf.write(",".join(["t"] + names) + "\n")
        for i, t in enumerate(self.times):
            buf.write(",".join(repr(float(x)) for x in [t] + [self.channels[n][i] for n in names]) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="\n") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path) as fh:
            lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
        names = lines[0].split(",")[1:]
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(names) + 1)
        return cls(list(data[:, 0]), {n: list(data[:, k + 1]) for k, n in enumerate(names)})


# ---------------------------------------------------------------- spectra

@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    amplitudes: np.ndarray

    @property
    def dominant(self) -> float:
        if len(self.amplitudes) < 2:
            return 0.0
        return float(self.frequencies[1 + np.argmax(self.amplitudes[1:])])

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0]) if len(self.frequencies) > 1 else 0.0


def amplitude_spectrum(times, values, window: tuple | None = None) -> Spectrum:
    """Single-sided amplitude spectrum with the mean removed and no taper."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if window is not None:
        sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
        t, y = t[sel], y[sel]
    if len(t) < 2:
        raise ValueError("spectrum needs at least two samples")
    dt = np.diff(t)
    if np.abs(dt - dt[0]).max() > 1e-9 * max(dt[0], 1e-300):
        raise ValueError("spectrum needs uniform sampling")
    n = len(y)
    Y = np.fft.rfft(y - y.mean())
    amp = np.abs(Y) / n
    amp[1:] *= 2.0
    if n % 2 == 0:
        amp[-1] /= 2.0
    return Spectrum(np.arange(len(amp)) / (n * dt[0]), amp)


# ---------------------------------------------------------------- convergence

@dataclass(frozen=True)
class ConvergenceFit:
    dts: np.ndarray
    errors: np.ndarray
    rate: float
    residual: float
    monotone: bool


def fit_rate(dts, errors) -> ConvergenceFit:
    dts, errors = np.asarray(dts, dtype=float), np.asarray(errors, dtype=float)
    if len(dts) < 2:
        raise ValueError("a rate fit needs at least two points")
    order = np.argsort(dts)
    dts, errors = dts[order], errors[order]
    A = np.column_stack([np.log(dts), np.ones(len(dts))])
    coef, res, *_ = np.linalg.lstsq(A, np.log(errors), rcond=None)
    monotone = bool(np.all(np.diff(errors) > 0))
    if not monotone:
        warnings.warn("errors do not increase monotonically with the time step", RuntimeWarning, stacklevel=2)
    return ConvergenceFit(dts, errors, float(coef[0]), float(res[0]) if len(res) else 0.0, monotone)


def convergence_study(runs) -> dict:
    """``runs``: iterable of (dt, s, error). Returns {s: ConvergenceFit}."""
    by_s: dict = {}
    for dt, s, err in runs:
        by_s.setdefault(int(s), []).append((dt, err))
    return {s: fit_rate(*zip(*pts)) for s, pts in sorted(by_s.items())}


# ---------------------------------------------------------------- VTK

def write_vtk(path, problem: FSIProblem, state: CoupledState, deformed: bool = True) -> None:
    """Legacy ASCII VTK with quadratic triangles on the whole mesh."""
    sp_ = problem.spaces
    mesh = sp_.mesh
    npts = len(sp_.p2_coords)
    disp = np.zeros((npts, 2))
    vel = np.zeros((npts, 2))
    pres = np.zeros(npts)
    fv, sv = sp_.velocity, sp_.displacement
    disp[fv.nodes] = state.X.reshape(-1, 2)
    vel[fv.nodes] = state.u.reshape(-1, 2)
    disp[sv.nodes] = state.d.reshape(-1, 2)
    vel[sv.nodes] = state.v.reshape(-1, 2)
    pv = np.zeros(mesh.n_nodes)
    pv[sp_.pressure.nodes] = state.p
    pres[:mesh.n_nodes] = pv
    edge_nodes = np.array(sorted(sp_.edge_of_pair, key=sp_.edge_of_pair.get), dtype=np.int64).reshape(-1, 2)
    if len(edge_nodes):
        pres[mesh.n_nodes:] = 0.5 * (pv[edge_nodes[:, 0]] + pv[edge_nodes[:, 1]])
    x = sp_.p2_coords + (disp if deformed else 0.0)
    cells = sp_.p2_triangles
    out = io.StringIO()
    out.write("# vtk DataFile Version 3.0\nfsi fields t={:.10g}\nASCII\nDATASET UNSTRUCTURED_GRID\n".format(state.t))
    out.write(f"POINTS {npts} double\n")
    for p in x:
        out.write(f"{p[0]!r} {p[1]!r} 0\n")
    out.write(f"CELLS {len(cells)} {7 * len(cells)}\n")
    for c in cells:
        out.write("6 " + " ".join(str(int(k)) for k in c) + "\n")
    out.write(f"CELL_TYPES {len(cells)}\n" + "22\n" * len(cells))
    out.write(f"CELL_DATA {len(cells)}\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n")
    out.write("".join(f"{int(s)}\n" for s in mesh.subdomain))
    out.write(f"POINT_DATA {npts}\nVECTORS velocity double\n")
    out.write("".join(f"{a!r} {b!r} 0\n" for a, b in vel))
    out.write("VECTORS displacement double\n")
    out.write("".join(f"{a!r} {b!r} 0\n" for a, b in disp))
    out.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
    out.write("".join(f"{float(q)!r}\n" for q in pres))
    with open(path, "w", newline="\n") as fh:
        fh.write(out.getvalue())

