"""Fluid operators on the ALE-deformed configuration.

All integrals are pulled back to the reference fluid mesh: the deformed
element geometry is the reference P2 node positions plus the ALE
displacement ``X``. The residual is

    R'(u, p)_i = ∫ 2μ ε(u):ε(φ_i) − p div φ_i
                 + ρ ((u − ω)·∇)u·φ_i − ρ (div ω) u·φ_i + ½ρ (div u) u·φ_i
                 − ∫_{Neumann} g·φ_i
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import kernels
from .spaces import Scatter, Spaces, facet_load_p2, scatter_vector


class MeshTanglingError(RuntimeError):
    def __init__(self, element: int, det: float):
        super().__init__(f"inverted element {element}: min Jacobian determinant {det:.3e}")
        self.element = element
        self.det = det


@dataclass(frozen=True)
class FluidParams:
    rho: float = 1.0
    mu: float = 0.035
    u_inf: float = 1.0
    t_ramp: float = 1.0
    neumann: Callable | None = None   # g(x) -> (n, 2) traction on Neumann facets

    def __post_init__(self):
        if not (self.rho > 0 and self.mu > 0):
            raise ValueError("fluid density and viscosity must be positive")

    def c_dir(self, t) -> np.ndarray:
        """Inflow amplitude: smooth cosine ramp up to ``t_ramp``, then 1."""
        t = np.asarray(t, dtype=float)
        if self.t_ramp <= 0:
            return np.ones_like(t) * self.u_inf
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.minimum(t, self.t_ramp) / self.t_ramp))
        return self.u_inf * np.where(t < self.t_ramp, ramp, 1.0)


@dataclass
class FluidLinearization:
    """Fluid operators at one state; sparse blocks in global velocity/pressure numbering."""

    r: np.ndarray            # R'(u, p)
    Mu: np.ndarray           # M(X) u
    Bu: np.ndarray           # B(X) u
    Kuu: sp.csr_matrix
    Kup: sp.csr_matrix       # equals B^T
    Kuw: sp.csr_matrix       # derivative w.r.t. mesh velocity coefficients
    M: sp.csr_matrix
    B: sp.csr_matrix
    dR: sp.csr_matrix | None = None    # w.r.t. ALE displacement coefficients
    dMu: sp.csr_matrix | None = None
    dBu: sp.csr_matrix | None = None


class FluidOperators:
    def __init__(self, spaces: Spaces, params: FluidParams, shape_step: float | None = None):
        self.spaces = spaces
        self.params = params
        v, p = spaces.velocity, spaces.pressure
        self.nu, self.np_ = v.ndof, p.ndof
        self.vel_elements = v.elements
        self.pre_elements = p.elements
        self.vdofs = v.element_dofs
        self.xe = v.coords[v.elements]
        self.ref = spaces.ref
        self.uu = Scatter(self.vdofs, self.vdofs, (self.nu, self.nu))
        self.pu = Scatter(self.pre_elements, self.vdofs, (self.np_, self.nu))
        self.up = Scatter(self.vdofs, self.pre_elements, (self.nu, self.np_))
        ext = np.ptp(v.coords, axis=0).max() if v.n_nodes else 1.0
        self.shape_step = shape_step if shape_step else 1e-6 * ext
        self._neumann = self._neumann_load()

    def _neumann_load(self) -> np.ndarray:
        g = self.params.neumann
        if g is None:
            return np.zeros(self.nu)
        sp_ = self.spaces
        fac = sp_.facet_p2(sp_.mesh.facets_with_role("fluid_neumann"))
        if not len(fac):
            return np.zeros(self.nu)
        loads = facet_load_p2(sp_.p2_coords, fac, g)
        loc = sp_.velocity.local(fac)
        dofs = np.stack([2 * loc, 2 * loc + 1], axis=2)
        return scatter_vector(dofs, loads, self.nu)

    def _gather(self, u, X, w, p):
        ne = len(self.vel_elements)
        ue = u[self.vdofs].reshape(ne, 6, 2)
        Xe = X[self.vdofs].reshape(ne, 6, 2)
        we = w[self.vdofs].reshape(ne, 6, 2)
        pe = p[self.pre_elements]
        return ue, Xe, we, pe

    @staticmethod
    def _check(detmin: np.ndarray) -> None:
        if len(detmin) and detmin.min() <= 0.0:
            k = int(np.argmin(detmin))
            raise MeshTanglingError(k, float(detmin[k]))

    def _args(self, u, p, X, w):
        ue, Xe, we, pe = self._gather(u, X, w, p)
        r = self.ref
        return (self.xe, Xe, ue, we, pe, self.params.rho, self.params.mu, r.N, r.dN, r.L, r.weights)

    def residual(self, u, p, X, w) -> np.ndarray:
        re, _, _, dmin = kernels.fluid_residual(*self._args(u, p, X, w))
        self._check(dmin)
        return scatter_vector(self.vdofs, re, self.nu) - self._neumann

    def residual_parts(self, u, p, X, w) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(R', M u, B u) without Jacobians."""
        re, Mue, Bue, dmin = kernels.fluid_residual(*self._args(u, p, X, w))
        self._check(dmin)
        return (scatter_vector(self.vdofs, re, self.nu) - self._neumann,
                scatter_vector(self.vdofs, Mue, self.nu), scatter_vector(self.pre_elements, Bue, self.np_))

    def linearize(self, u, p, X, w, shape: bool = True) -> FluidLinearization:
        args = self._args(u, p, X, w)
        re, Kuu, Kup, Kuw, M, B, dmin = kernels.fluid_jacobian(*args)
        self._check(dmin)
        ne = len(re)
        Mmat = self.uu.matrix(M)
        Bmat = self.pu.matrix(B)
        lin = FluidLinearization(
            r=scatter_vector(self.vdofs, re, self.nu) - self._neumann,
            Mu=Mmat @ u, Bu=Bmat @ u,
            Kuu=self.uu.matrix(Kuu), Kup=self.up.matrix(Kup), Kuw=self.uu.matrix(Kuw), M=Mmat, B=Bmat)
        if shape:
            dR, dMu, dBu = kernels.fluid_shape_fd(*args, self.shape_step)
            lin.dR = self.uu.matrix(dR)
            lin.dMu = self.uu.matrix(dMu)
            lin.dBu = self.pu.matrix(dBu)
        return lin

    def mass_divergence(self, X) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        z = np.zeros(self.nu)
        lin = self.linearize(z, np.zeros(self.np_), X, z, shape=False)
        return lin.M, lin.B

    def dissipation(self, u, X) -> float:
        ne = len(self.vel_elements)
        d = kernels.dissipation(self.xe, X[self.vdofs].reshape(ne, 6, 2), u[self.vdofs].reshape(ne, 6, 2),
                                self.params.mu, self.ref.dN, self.ref.weights)
        return float(d.sum())


def assemble_fluid_residual(ops: FluidOperators, u, p, X, w) -> np.ndarray:
    return ops.residual(u, p, X, w)


def assemble_fluid_jacobians(ops: FluidOperators, u, p, X, w, extension=None, frozen: bool = False):
    """(∂R'/∂u, ∂R'/∂p, ∂R'/∂g) with g the interface displacement.

    ``extension`` is the dense map from interface trace to ALE displacement;
    with ``frozen`` the configuration sensitivity is switched off.
    """
    lin = ops.linearize(u, p, X, w, shape=not frozen)
    nc = extension.shape[1] if extension is not None else 0
    if frozen or extension is None:
        dg = np.zeros((ops.nu, nc))
    else:
        dg = lin.dR @ extension
    return lin.Kuu, lin.Kup, dg


def assemble_mass_divergence(ops: FluidOperators, X) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    return ops.mass_divergence(X)
