"""Solid operators on the fixed reference solid domain."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import kernels
from .spaces import Scatter, Spaces, assemble, element_mass, facet_load_p2, scatter_vector


@dataclass(frozen=True)
class SolidParams:
    rho: float = 1.1
    E: float = 1.0e3
    nu: float = 0.3
    model: str = "svk"
    neumann: Callable | None = None

    def __post_init__(self):
        if not self.rho > 0 or not self.E > 0:
            raise ValueError("solid density and Young's modulus must be positive")
        if not 0.0 <= self.nu < 0.5:
            raise ValueError("Poisson ratio must satisfy 0 <= nu < 0.5")
        if self.model not in ("linear", "svk"):
            raise ValueError(f"unknown solid model {self.model!r}")

    @property
    def lame(self) -> tuple[float, float]:
        """Plane-strain (λ, μ)."""
        lam = self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))
        mu = self.E / (2.0 * (1.0 + self.nu))
        return lam, mu


class SolidOperators:
    def __init__(self, spaces: Spaces, params: SolidParams):
        self.spaces = spaces
        self.params = params
        v = spaces.displacement
        self.ns = v.ndof
        self.dofs = v.element_dofs
        self.xe = v.coords[v.elements]
        self.ref = spaces.ref
        self.scatter = Scatter(self.dofs, self.dofs, (self.ns, self.ns))
        self.M = assemble(v, element_mass(v, spaces.ref, params.rho)) if self.ns else sp.csr_matrix((0, 0))
        self.lam, self.mu = params.lame
        self.svk = params.model == "svk"
        self._neumann = self._neumann_load()
        self._K_linear = None

    def _neumann_load(self) -> np.ndarray:
        g = self.params.neumann
        if g is None:
            return np.zeros(self.ns)
        sp_ = self.spaces
        fac = sp_.facet_p2(sp_.mesh.facets_with_role("solid_neumann"))
        if not len(fac):
            return np.zeros(self.ns)
        loc = sp_.displacement.local(fac)
        dofs = np.stack([2 * loc, 2 * loc + 1], axis=2)
        return scatter_vector(dofs, facet_load_p2(sp_.p2_coords, fac, g), self.ns)

    def _de(self, d):
        return d[self.dofs].reshape(len(self.dofs), 6, 2)

    def residual(self, d) -> np.ndarray:
        re, _ = kernels.solid_residual(self.xe, self._de(d), self.lam, self.mu, self.svk,
                                       self.ref.dN, self.ref.weights)
        return scatter_vector(self.dofs, re, self.ns) - self._neumann

    def jacobian(self, d) -> sp.csr_matrix:
        return self.linearize(d)[1]

    def linearize(self, d) -> tuple[np.ndarray, sp.csr_matrix]:
        if not self.svk and self._K_linear is not None:
            return self._K_linear @ d - self._neumann, self._K_linear
        re, Ke, _ = kernels.solid_jacobian(self.xe, self._de(d), self.lam, self.mu, self.svk,
                                           self.ref.dN, self.ref.weights)
        K = self.scatter.matrix(Ke)
        if not self.svk:
            self._K_linear = K
        return scatter_vector(self.dofs, re, self.ns) - self._neumann, K

    def energy(self, d) -> float:
        _, W = kernels.solid_residual(self.xe, self._de(d), self.lam, self.mu, self.svk,
                                      self.ref.dN, self.ref.weights)
        return float(W.sum())


def assemble_solid_residual(ops: SolidOperators, d) -> np.ndarray:
    return ops.residual(d)


def assemble_solid_jacobian(ops: SolidOperators, d) -> sp.csr_matrix:
    return ops.jacobian(d)


def elastic_energy(ops: SolidOperators, d) -> float:
    return ops.energy(d)
