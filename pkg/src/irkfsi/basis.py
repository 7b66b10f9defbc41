"""Snapshot collection and bubble-port reduced basis construction."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .ale import build_extension, dirichlet_lifting
from .problem import CoupledState, FSIProblem
from .spaces import INNER_PRODUCT_KINDS, InnerProduct, assemble_inner_product

MAGIC = b"IRKFSIRB"
FORMAT_VERSION = 1
TRACE_TOL = 1e-10


class BasisFileError(ValueError):
    pass


# ---------------------------------------------------------------- snapshots

@dataclass
class SnapshotSet:
    mesh_hash: str
    U: list = field(default_factory=list)
    P: list = field(default_factory=list)
    D: list = field(default_factory=list)
    times: list = field(default_factory=list)
    cdir: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    stride: int = 1
    _seen: int = 0

    def __len__(self) -> int:
        return len(self.times)

    def add(self, u, p, d, t: float, c: float) -> None:
        self.U.append(np.asarray(u, dtype=float).copy())
        self.P.append(np.asarray(p, dtype=float).copy())
        self.D.append(np.asarray(d, dtype=float).copy())
        self.times.append(float(t))
        self.cdir.append(float(c))

    def add_step(self, problem: FSIProblem, state: CoupledState, window: tuple | None = None) -> None:
        """Store every stage of an accepted step (subsampled by ``stride`` steps)."""
        rec = state.stages
        if rec is None or state.info.get("hold"):
            return
        if window is not None and not (window[0] - 1e-12 <= state.t <= window[1] + 1e-12):
            return
        self._seen += 1
        if (self._seen - 1) % self.stride:
            return
        c = problem.fluid.params.c_dir(rec.times)
        for i in range(len(rec.times)):
            self.add(rec.U[i], rec.P[i], rec.D[i], rec.times[i], float(c[i]))

    def extend(self, other: "SnapshotSet") -> None:
        if other.mesh_hash != self.mesh_hash:
            raise BasisFileError("snapshot sets come from different meshes")
        for name in ("U", "P", "D", "times", "cdir"):
            getattr(self, name).extend(getattr(other, name))

    def matrices(self):
        if not len(self):
            raise ValueError("empty snapshot set")
        return (np.array(self.U).T, np.array(self.P).T, np.array(self.D).T,
                np.array(self.times), np.array(self.cdir))

    def save(self, path) -> None:
        U, P, D, t, c = self.matrices()
        with open(path, "wb") as fh:
            np.savez(fh, U=U, P=P, D=D, times=t, cdir=c, mesh_hash=np.array(self.mesh_hash))

    @classmethod
    def load(cls, path) -> "SnapshotSet":
        with np.load(path) as z:
            out = cls(str(z["mesh_hash"]))
            for k in range(z["times"].shape[0]):
                out.add(z["U"][:, k], z["P"][:, k], z["D"][:, k], z["times"][k], z["cdir"][k])
        return out


# ---------------------------------------------------------------- POD

@dataclass(frozen=True)
class PodResult:
    modes: np.ndarray
    singular_values: np.ndarray
    retained: int
    discarded: float


def _orthonormalize(Z: np.ndarray, G) -> np.ndarray:
    """Classical Gram-Schmidt with reorthogonalization in the G inner product."""
    Z = np.array(Z, dtype=float, copy=True)
    for j in range(Z.shape[1]):
        for _ in range(2):
            Z[:, j] -= Z[:, :j] @ (Z[:, :j].T @ (G @ Z[:, j]))
        nrm = np.sqrt(max(Z[:, j] @ (G @ Z[:, j]), 0.0))
        if nrm == 0.0:
            raise np.linalg.LinAlgError("linearly dependent basis vectors")
        Z[:, j] /= nrm
    return Z


def _fix_signs(Z: np.ndarray) -> np.ndarray:
    for j in range(Z.shape[1]):
        k = np.argmax(np.abs(Z[:, j]))
        if Z[k, j] < 0:
            Z[:, j] = -Z[:, j]
    return Z


def pod(S: np.ndarray, inner, tol: float) -> PodResult:
    """Method of snapshots in the inner product ``inner`` (InnerProduct or matrix).

    Keeps the smallest number of modes whose discarded energy fraction is
    at most ``tol``.
    """
    if not 0.0 <= tol < 1.0:
        raise ValueError("POD tolerance must lie in [0, 1)")
    G = inner.matrix if isinstance(inner, InnerProduct) else inner
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[1] == 0:
        raise ValueError("POD needs at least one snapshot")
    C = S.T @ (G @ S)
    C = 0.5 * (C + C.T)
    lam, vec = np.linalg.eigh(C)
    order = np.argsort(lam)[::-1]
    lam, vec = np.maximum(lam[order], 0.0), vec[:, order]
    total = lam.sum()
    if total <= 0.0:
        raise ValueError("all snapshots are zero")
    sigma = np.sqrt(lam)
    rank = int(np.sum(lam > lam[0] * max(S.shape[1], 1) * 1e-13))
    tail = total - np.cumsum(lam)
    r = int(np.argmax(tail <= tol * total)) + 1
    r = max(1, min(r, rank))
    modes = S @ (vec[:, :r] / sigma[:r])
    modes = _fix_signs(_orthonormalize(modes, G))
    return PodResult(modes, sigma, r, float(max(tail[r - 1], 0.0) / total))


# ---------------------------------------------------------------- basis

@dataclass
class ReducedBasis:
    psi: np.ndarray          # (N_c, m) interface modes
    E_f: np.ndarray          # (N_u, m) fluid port extensions
    E_s: np.ndarray          # (N_s, m) solid port extensions
    Z_f: np.ndarray          # (N_u, n_u) fluid bubbles incl. supremizers
    Z_s: np.ndarray          # (N_s, n_s)
    Z_p: np.ndarray          # (N_p, n_p)
    u_dir: np.ndarray        # (N_u,) Dirichlet lifting for unit inflow amplitude
    mesh_hash: str
    tol: float
    n_u0: int
    kinds: tuple = INNER_PRODUCT_KINDS

    @property
    def m(self) -> int:
        return self.psi.shape[1]

    @property
    def n_u(self) -> int:
        return self.Z_f.shape[1]

    @property
    def n_s(self) -> int:
        return self.Z_s.shape[1]

    @property
    def n_p(self) -> int:
        return self.Z_p.shape[1]

    def report(self) -> dict:
        return dict(m=self.m, n_u0=self.n_u0, n_p=self.n_p, n_s=self.n_s, n_u=self.n_u, tol=self.tol)

    def check(self, problem: FSIProblem, tol: float = 1e-12) -> None:
        """Trace and boundary invariants of the bubble-port construction."""
        fp, spt = problem.spaces.fluid, problem.spaces.solid
        scale = max(1.0, np.abs(self.psi).max()) if self.psi.size else 1.0
        if self.m:
            if np.abs(self.E_f[fp.gamma] - self.psi).max() > tol * scale or \
                    np.abs(self.E_s[spt.gamma] - self.psi).max() > tol * scale:
                raise BasisFileError("port extensions do not share the interface modes")
        for Z, part in ((self.Z_f, fp), (self.Z_s, spt)):
            bad = np.concatenate([part.gamma, part.dirichlet])
            if Z.size and len(bad) and np.abs(Z[bad]).max() > tol * max(1.0, np.abs(Z).max()):
                raise BasisFileError("bubble modes have nonzero trace")
        if len(fp.gamma) and np.abs(self.u_dir[fp.gamma]).max() > tol:
            raise BasisFileError("Dirichlet lifting has nonzero interface trace")


@dataclass
class BasisBuilder:
    """Everything needed to turn snapshots into a bubble-port basis."""

    problem: FSIProblem

    def __post_init__(self):
        sp_ = self.problem.spaces
        self.inner = {k: assemble_inner_product(k, sp_) for k in INNER_PRODUCT_KINDS}
        self.H_f = build_extension("harmonic_fluid", sp_)
        self.H_s = build_extension("harmonic_solid", sp_)
        self.u_dir = dirichlet_lifting(sp_, self.problem.profile[sp_.fluid.dirichlet])

    def port_basis(self, D: np.ndarray, tol: float):
        sg = self.problem.spaces.solid.gamma
        res = pod(D[sg], self.inner["L2_interface"], tol)
        psi = res.modes
        return psi, self.H_f.extend(psi), self.H_s.extend(psi), res

    def lifted_fluid(self, U: np.ndarray, cdir: np.ndarray) -> np.ndarray:
        fp = self.problem.spaces.fluid
        L = U - np.outer(self.u_dir, cdir) - self.H_f.extend(U[fp.gamma])
        bad = np.concatenate([fp.gamma, fp.dirichlet])
        scale = max(1.0, np.abs(U).max())
        if len(bad) and np.abs(L[bad]).max() > TRACE_TOL * scale:
            raise ValueError("lifted fluid snapshots keep a boundary trace: Dirichlet data is not separable")
        L[bad] = 0.0
        return L

    def lifted_solid(self, D: np.ndarray) -> np.ndarray:
        spt = self.problem.spaces.solid
        L = D - self.H_s.extend(D[spt.gamma])
        bad = np.concatenate([spt.gamma, spt.dirichlet])
        if len(bad) and np.abs(L[bad]).max() > TRACE_TOL * max(1.0, np.abs(D).max()):
            raise ValueError("lifted solid snapshots keep a boundary trace")
        L[bad] = 0.0
        return L

    def supremizers(self, Z_p: np.ndarray) -> np.ndarray:
        """H¹ Riesz representers of v ↦ b(v, q) over velocities vanishing on Γ and Dirichlet DOFs."""
        pb = self.problem
        inner_dofs = pb.spaces.fluid.inner
        _, B = pb.fluid.mass_divergence(np.zeros(pb.fluid.nu))
        H = self.inner["H1_fluid"].matrix
        rhs = (B.T @ Z_p)[inner_dofs]
        out = np.zeros((pb.fluid.nu, Z_p.shape[1]))
        if Z_p.shape[1] and len(inner_dofs):
            lu = spla.splu(H[inner_dofs][:, inner_dofs].tocsc())
            out[inner_dofs] = lu.solve(np.asarray(rhs))
        return out

    def build(self, snaps: SnapshotSet, tol: float, supremizers: bool = True) -> ReducedBasis:
        U, P, D, _, cdir = snaps.matrices()
        psi, E_f, E_s, _ = self.port_basis(D, tol)
        zf = pod(self.lifted_fluid(U, cdir), self.inner["H1_fluid"], tol).modes
        zs = pod(self.lifted_solid(D), self.inner["H1_solid"], tol).modes
        zp = pod(P, self.inner["L2_pressure"], tol).modes
        n_u0 = zf.shape[1]
        if supremizers:
            sup = self.supremizers(zp)
            zf = _orthonormalize(np.hstack([zf, sup]), self.inner["H1_fluid"].matrix)
            zf[:, n_u0:] = _fix_signs(zf[:, n_u0:])
        basis = ReducedBasis(psi, E_f, E_s, zf, zs, zp, self.u_dir.copy(), snaps.mesh_hash, float(tol), n_u0)
        basis.check(self.problem, 1e-10)
        return basis


def reduced_inf_sup(problem: FSIProblem, basis: ReducedBasis) -> float:
    """Smallest singular value of Z_pᵀ B Z_f (both bases orthonormal in their norms)."""
    _, B = problem.fluid.mass_divergence(np.zeros(problem.fluid.nu))
    Bred = basis.Z_p.T @ (B @ basis.Z_f)
    if min(Bred.shape) == 0:
        return 0.0
    sv = np.linalg.svd(Bred, compute_uv=False)
    return float(sv[-1]) if Bred.shape[0] <= Bred.shape[1] else 0.0


# ---------------------------------------------------------------- file format

_HEADER = struct.Struct("<8sI64s9Q4Bd")
_ARRAYS = ("psi", "E_f", "E_s", "Z_f", "Z_s", "Z_p", "u_dir")


def save_basis(basis: ReducedBasis, path) -> None:
    N_c, m = basis.psi.shape
    kinds = bytes(INNER_PRODUCT_KINDS.index(k) for k in basis.kinds)
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, basis.mesh_hash.encode("ascii").ljust(64, b"\0"),
                        N_c, basis.E_f.shape[0], basis.E_s.shape[0], basis.Z_p.shape[0],
                        m, basis.n_u, basis.n_u0, basis.n_s, basis.n_p, *kinds, basis.tol)
    with open(path, "wb") as fh:
        fh.write(head)
        for name in _ARRAYS:
            fh.write(np.asarray(getattr(basis, name), dtype="<f8").tobytes(order="F"))
        fh.write(hashlib.sha256(head + b"".join(
            np.asarray(getattr(basis, n), dtype="<f8").tobytes(order="F") for n in _ARRAYS)).digest())


def read_basis_header(path) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise BasisFileError("truncated basis file")
    f = _HEADER.unpack(raw)
    if f[0] != MAGIC:
        raise BasisFileError("not a reduced basis file")
    if f[1] != FORMAT_VERSION:
        raise BasisFileError(f"unsupported basis format version {f[1]}")
    keys = ("N_c", "N_u", "N_s", "N_p", "m", "n_u", "n_u0", "n_s", "n_p")
    out = dict(zip(keys, f[3:12]))
    out["mesh_hash"] = f[2].rstrip(b"\0").decode("ascii")
    out["kinds"] = tuple(INNER_PRODUCT_KINDS[k] for k in f[12:16])
    out["tol"] = f[16]
    return out


def load_basis(path, mesh_hash: str | None = None) -> ReducedBasis:
    h = read_basis_header(path)
    if mesh_hash is not None and h["mesh_hash"] != mesh_hash:
        raise BasisFileError("basis was built on a different mesh")
    shapes = {"psi": (h["N_c"], h["m"]), "E_f": (h["N_u"], h["m"]), "E_s": (h["N_s"], h["m"]),
              "Z_f": (h["N_u"], h["n_u"]), "Z_s": (h["N_s"], h["n_s"]), "Z_p": (h["N_p"], h["n_p"]),
              "u_dir": (h["N_u"],)}
    with open(path, "rb") as fh:
        data = fh.read()
    pos = _HEADER.size
    arrays = {}
    for name in _ARRAYS:
        n = int(np.prod(shapes[name]))
        chunk = data[pos:pos + 8 * n]
        if len(chunk) != 8 * n:
            raise BasisFileError("truncated basis file")
        arrays[name] = np.frombuffer(chunk, dtype="<f8").reshape(shapes[name], order="F").astype(float)
        pos += 8 * n
    if hashlib.sha256(data[:pos]).digest() != data[pos:pos + 32] or len(data) != pos + 32:
        raise BasisFileError("corrupt basis file (checksum mismatch)")
    return ReducedBasis(mesh_hash=h["mesh_hash"], tol=h["tol"], n_u0=h["n_u0"], kinds=h["kinds"], **arrays)
