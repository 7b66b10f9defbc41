"""Assembled FSI problem: mesh, spaces, operators, boundary data and state."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .ale import ExtensionOperator, build_extension
from .fluid import FluidOperators, FluidParams
from .mesh import Mesh
from .solid import SolidOperators, SolidParams
from .spaces import Spaces, build_spaces


@dataclass
class StageRecord:
    times: np.ndarray
    U: np.ndarray      # fluid velocity (s, N_u)
    P: np.ndarray      # pressure (s, N_p)
    D: np.ndarray      # solid displacement (s, N_s)
    Us: np.ndarray     # solid velocity (s, N_s)
    G: np.ndarray      # interface displacement (s, N_c)
    X: np.ndarray      # ALE displacement (s, N_u)


@dataclass
class CoupledState:
    t: float
    u: np.ndarray
    p: np.ndarray
    d: np.ndarray
    v: np.ndarray
    X: np.ndarray
    Mu: np.ndarray
    a: np.ndarray | None = None
    Mu_prev: np.ndarray | None = None
    body_residual: np.ndarray | None = None   # time term + R' at the step value
    stages: StageRecord | None = None
    info: dict = field(default_factory=dict)

    def copy(self) -> "CoupledState":
        return replace(self, info=dict(self.info))


@dataclass
class FSIProblem:
    mesh: Mesh
    spaces: Spaces
    fluid: FluidOperators
    solid: SolidOperators
    ale: ExtensionOperator
    profile: np.ndarray                # inflow profile on velocity DOFs (unit amplitude)
    hold_until: float = 0.0
    force_nodes: np.ndarray = None     # velocity DOFs (x, y interleaved) of the force bodies
    probe: tuple | None = None
    enclosed: bool = False

    @property
    def n_c(self) -> int:
        return self.spaces.fluid.n_c

    def dirichlet_values(self, t: float) -> np.ndarray:
        return float(self.fluid.params.c_dir(t)) * self.profile[self.spaces.fluid.dirichlet]

    def ndof_total(self, s: int = 1) -> int:
        sp_ = self.spaces
        return s * (sp_.velocity.ndof + sp_.pressure.ndof + sp_.displacement.ndof)

    def zero_state(self, t: float = 0.0) -> CoupledState:
        nu, np_, ns = self.fluid.nu, self.fluid.np_, self.solid.ns
        return CoupledState(t, np.zeros(nu), np.zeros(np_), np.zeros(ns), np.zeros(ns),
                            np.zeros(nu), np.zeros(nu), a=np.zeros(ns))

    def state_from_displacement(self, d0: np.ndarray, t: float = 0.0) -> CoupledState:
        """Rest state with a prescribed initial solid displacement."""
        st = self.zero_state(t)
        st.d = np.asarray(d0, dtype=float).copy()
        st.X = self.ale.extend(st.d[self.spaces.solid.gamma])
        return st


def parabolic_profile(spaces: Spaces, name: str = "inlet") -> np.ndarray:
    """Unit-peak parabolic x-velocity on the nodes of the named inflow facets."""
    v = spaces.velocity
    out = np.zeros(v.ndof)
    nodes = spaces.name_nodes(name)
    if not len(nodes):
        return out
    loc = v.local(nodes)
    y = v.coords[loc, 1]
    lo, hi = y.min(), y.max()
    out[2 * loc] = 4.0 * (y - lo) * (hi - y) / (hi - lo) ** 2
    return out


def body_dofs(spaces: Spaces, names: tuple[str, ...]) -> np.ndarray:
    v = spaces.velocity
    nodes = np.unique(np.concatenate([spaces.role_nodes("interface")] +
                                     [spaces.name_nodes(n) for n in names if n != "interface"]))
    loc = v.local(nodes)
    return v.vector_dofs(loc)


def build_problem(mesh: Mesh, fluid: FluidParams, solid: SolidParams, pseudo_E: float = 1.0,
                  pseudo_nu: float = 0.3, hold_until: float = 0.0, probe: tuple | None = None,
                  force_bodies: tuple[str, ...] = ("cylinder",)) -> FSIProblem:
    spaces = build_spaces(mesh)
    fops = FluidOperators(spaces, fluid)
    sops = SolidOperators(spaces, solid)
    ale = build_extension("pseudo_elastic", spaces, pseudo_E, pseudo_nu)
    enclosed = len(mesh.facets_with_role("fluid_neumann")) == 0
    return FSIProblem(mesh, spaces, fops, sops, ale, parabolic_profile(spaces), hold_until,
                      body_dofs(spaces, force_bodies), probe, enclosed)
