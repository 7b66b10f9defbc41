"""Mesh motion and trace extension operators."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .fluid import MeshTanglingError
from .spaces import Spaces, assemble, element_elasticity, element_laplace

EXTENSION_KINDS = ("pseudo_elastic", "harmonic_fluid", "harmonic_solid")


class ExtensionOperator:
    """Linear map from Γ trace values to a field on a whole subdomain.

    The field equals the trace on Γ, vanishes on the listed fixed DOFs and
    solves ``K x = 0`` in the remaining rows. ``K`` is factorized once.
    """

    def __init__(self, kind: str, K: sp.spmatrix, gamma: np.ndarray, fixed: np.ndarray):
        n = K.shape[0]
        self.kind = kind
        self.n = n
        self.gamma = np.asarray(gamma)
        mask = np.ones(n, dtype=bool)
        mask[self.gamma] = False
        mask[np.asarray(fixed, dtype=np.int64)] = False
        self.free = np.flatnonzero(mask)
        K = K.tocsr()
        self._Kfg = K[self.free][:, self.gamma].tocsc()
        self._K = K
        self._lu = spla.splu(K[self.free][:, self.free].tocsc()) if len(self.free) else None

    @property
    def n_c(self) -> int:
        return len(self.gamma)

    def extend(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        out = np.zeros((self.n,) + g.shape[1:])
        out[self.gamma] = g
        if self._lu is not None and g.size:
            out[self.free] = -self._lu.solve(np.asarray(self._Kfg @ g))
        return out

    def solve_free(self, rhs_full: np.ndarray, values: np.ndarray, fixed: np.ndarray) -> np.ndarray:
        """Solve with prescribed ``values`` on ``fixed`` and zero on Γ (lifting problems)."""
        x = np.zeros(self.n)
        x[fixed] = values
        rhs = rhs_full[self.free] - self._K[self.free] @ x
        x[self.free] = self._lu.solve(rhs)
        return x

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense (n, n_c) matrix of the extension."""
        return self.extend(np.eye(self.n_c))


def build_extension(kind: str, spaces: Spaces, pseudo_E: float = 1.0, pseudo_nu: float = 0.3) -> ExtensionOperator:
    ref = spaces.ref
    if kind == "pseudo_elastic":
        v = spaces.velocity
        lam = pseudo_E * pseudo_nu / ((1 + pseudo_nu) * (1 - 2 * pseudo_nu))
        mu = pseudo_E / (2 * (1 + pseudo_nu))
        K = assemble(v, element_elasticity(v, ref, lam, mu))
        return ExtensionOperator(kind, K, spaces.fluid.gamma, spaces.fluid.boundary)
    if kind == "harmonic_fluid":
        v = spaces.velocity
        return ExtensionOperator(kind, assemble(v, element_laplace(v, ref)), spaces.fluid.gamma, spaces.fluid.boundary)
    if kind == "harmonic_solid":
        v = spaces.displacement
        return ExtensionOperator(kind, assemble(v, element_laplace(v, ref)), spaces.solid.gamma, spaces.solid.boundary)
    raise ValueError(f"unknown extension kind {kind!r}")


def dirichlet_lifting(spaces: Spaces, dirichlet_values: np.ndarray) -> np.ndarray:
    """Vector-Laplace lifting: given values on fluid Dirichlet DOFs, zero on Γ,
    natural condition on Neumann boundaries."""
    v = spaces.velocity
    part = spaces.fluid
    K = assemble(v, element_laplace(v, spaces.ref))
    op = ExtensionOperator("lifting", K, part.gamma, part.dirichlet)
    return op.solve_free(np.zeros(v.ndof), dirichlet_values, part.dirichlet)


@dataclass(frozen=True)
class AleConfiguration:
    X: np.ndarray
    detmin: float


def min_jacobian(spaces: Spaces, X: np.ndarray) -> tuple[int, float]:
    v = spaces.velocity
    ne = len(v.elements)
    d = v.element_dofs
    ref = spaces.ref
    z = np.zeros((ne, 6, 2))
    _, _, _, dmin = kernels.fluid_residual(v.coords[v.elements], X[d].reshape(ne, 6, 2), z, z,
                                           np.zeros((ne, 3)), 1.0, 1.0, ref.N, ref.dN, ref.L, ref.weights)
    k = int(np.argmin(dmin))
    return k, float(dmin[k])


def ale_from_interface(ext: ExtensionOperator, g: np.ndarray, spaces: Spaces) -> AleConfiguration:
    X = ext.extend(g)
    k, det = min_jacobian(spaces, X)
    if det <= 0.0:
        raise MeshTanglingError(k, det)
    return AleConfiguration(X, det)


def mesh_velocity_at_stages(G: np.ndarray, tableau, dt: float, g_prev: np.ndarray,
                            ext: ExtensionOperator) -> np.ndarray:
    """ω at the stages: extension of the IRK-differentiated interface traces.

    ``G`` has shape (s, n_c); the result has shape (s, n).
    """
    from .irk import differentiate

    V = differentiate(tableau, dt, G, g_prev)
    return ext.extend(V.T).T
