"""Taylor-Hood P2/P1 fluid spaces, P2 solid space, masks and Gram matrices.

DOFs of vector spaces are numbered node by node with interleaved x/y
components: ``dof = 2 * node + component``. Interface DOFs of the fluid and
the solid space are listed in the same order (sorted global P2 node id, then
component), so a shared trace has identical coefficient vectors on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .mesh import FLUID, SOLID, Mesh, MeshError, match_nodes
from .quadrature import gauss_line, quadrature_rule

RESIDUAL_DEGREE = 5


# ---------------------------------------------------------------- shape functions

def p2_basis(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """P2 values (n, 6) and reference gradients (n, 6, 2).

    Local order: three vertices, then midpoints of edges (0,1), (1,2), (2,0).
    """
    x, y = pts[:, 0], pts[:, 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    N = np.column_stack([l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                         4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0])
    dl = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    L = np.column_stack([l0, l1, l2])
    dN = np.empty((len(pts), 6, 2))
    for a in range(3):
        dN[:, a, :] = (4 * L[:, a] - 1)[:, None] * dl[a]
    for a, (i, j) in enumerate(((0, 1), (1, 2), (2, 0)), start=3):
        dN[:, a, :] = 4 * (L[:, i, None] * dl[j] + L[:, j, None] * dl[i])
    return N, dN


def p1_basis(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x, y = pts[:, 0], pts[:, 1]
    L = np.column_stack([1.0 - x - y, x, y])
    dL = np.broadcast_to(np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]), (len(pts), 3, 2)).copy()
    return L, dL


@dataclass(frozen=True)
class ReferenceData:
    """Basis tables at the points of one quadrature rule."""

    degree: int
    points: np.ndarray
    weights: np.ndarray
    N: np.ndarray
    dN: np.ndarray
    L: np.ndarray
    dL: np.ndarray

    @classmethod
    def build(cls, degree: int = RESIDUAL_DEGREE) -> "ReferenceData":
        pts, w = quadrature_rule(degree)
        N, dN = p2_basis(pts)
        L, dL = p1_basis(pts)
        return cls(degree, pts, w, N, dN, L, dL)


# ---------------------------------------------------------------- sparse assembly

class Scatter:
    """Precomputed CSR pattern for summing element blocks.

    Accumulation uses ``np.bincount`` over a fixed ordering, so repeated
    assemblies are bitwise reproducible.
    """

    def __init__(self, row_dofs: np.ndarray, col_dofs: np.ndarray, shape: tuple[int, int]):
        ne, nr = row_dofs.shape
        nc = col_dofs.shape[1]
        rows = np.repeat(row_dofs, nc, axis=1).ravel()
        cols = np.tile(col_dofs, (1, nr)).ravel()
        key = rows.astype(np.int64) * shape[1] + cols
        uniq, self.inverse = np.unique(key, return_inverse=True)
        r, c = np.divmod(uniq, shape[1])
        self.indices = c.astype(np.int32)
        self.indptr = np.searchsorted(r, np.arange(shape[0] + 1)).astype(np.int32)
        self.shape = shape
        self.nnz = len(uniq)
        self.block = (nr, nc)

    def matrix(self, blocks: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self.inverse, weights=blocks.reshape(-1), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=self.shape)


def scatter_vector(dofs: np.ndarray, values: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(dofs.ravel(), weights=values.reshape(-1), minlength=n)


# ---------------------------------------------------------------- spaces

@dataclass(frozen=True)
class FunctionSpace:
    field: str
    degree: int
    ncomp: int
    nodes: np.ndarray        # global node ids (P2 numbering, or mesh vertices for P1)
    coords: np.ndarray       # reference coordinates of the nodes
    triangles: np.ndarray    # mesh triangle ids covered by the space
    elements: np.ndarray     # (ne, nloc) local node indices

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def ndof(self) -> int:
        return self.ncomp * len(self.nodes)

    @property
    def element_dofs(self) -> np.ndarray:
        if self.ncomp == 1:
            return self.elements
        e = self.elements
        return np.stack([2 * e, 2 * e + 1], axis=2).reshape(len(e), -1)

    def dof_node(self, dof) -> np.ndarray:
        return np.asarray(dof) // self.ncomp

    def dof_component(self, dof) -> np.ndarray:
        return np.asarray(dof) % self.ncomp

    def dof_coords(self) -> np.ndarray:
        return np.repeat(self.coords, self.ncomp, axis=0)

    def local(self, global_nodes: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.nodes, global_nodes)
        if np.any(idx >= len(self.nodes)) or np.any(self.nodes[np.minimum(idx, len(self.nodes) - 1)] != global_nodes):
            raise MeshError(f"nodes outside the {self.field} space")
        return idx

    def vector_dofs(self, local_nodes: np.ndarray) -> np.ndarray:
        local_nodes = np.asarray(local_nodes)
        return np.stack([2 * local_nodes, 2 * local_nodes + 1], axis=-1).reshape(-1)


@dataclass(frozen=True)
class DofPartition:
    gamma: np.ndarray
    inner: np.ndarray
    dirichlet: np.ndarray
    boundary: np.ndarray     # every DOF on the subdomain boundary except Γ
    ndof: int

    @property
    def n_c(self) -> int:
        return len(self.gamma)

    def split(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return v[self.gamma], v[self.inner], v[self.dirichlet]

    def join(self, gamma, inner, dirichlet) -> np.ndarray:
        v = np.zeros(self.ndof, dtype=np.result_type(gamma, inner, dirichlet))
        v[self.gamma] = gamma
        v[self.inner] = inner
        v[self.dirichlet] = dirichlet
        return v


@dataclass(frozen=True)
class Spaces:
    mesh: Mesh
    p2_coords: np.ndarray
    p2_triangles: np.ndarray
    edge_of_pair: dict = field(repr=False)
    velocity: FunctionSpace = None
    pressure: FunctionSpace = None
    displacement: FunctionSpace = None
    fluid: DofPartition = None
    solid: DofPartition = None
    ref: ReferenceData = None

    def facet_p2(self, facets: np.ndarray) -> np.ndarray:
        """Global P2 node triples (end, end, midpoint) of mesh facets."""
        n = self.mesh.n_nodes
        mids = [n + self.edge_of_pair[(min(a, b), max(a, b))] for a, b in facets.tolist()]
        return np.column_stack([facets, np.array(mids, dtype=np.int64).reshape(-1)]) if len(facets) \
            else np.zeros((0, 3), dtype=np.int64)

    def role_nodes(self, role: str) -> np.ndarray:
        return np.unique(self.facet_p2(self.mesh.facets_with_role(role)))

    def name_nodes(self, name: str) -> np.ndarray:
        return np.unique(self.facet_p2(self.mesh.facets_with_name(name)))

    def element_coords(self, space: FunctionSpace) -> np.ndarray:
        return space.coords[space.elements]


def _p2_numbering(mesh: Mesh):
    tri = mesh.triangles
    n = mesh.n_nodes
    pairs = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    lo = pairs.min(axis=1)
    hi = pairs.max(axis=1)
    key = lo * n + hi
    uniq, inv = np.unique(key, return_inverse=True)
    nt = len(tri)
    tri_edges = inv.reshape(3, nt).T
    elo, ehi = np.divmod(uniq, n)
    coords = np.vstack([mesh.nodes, 0.5 * (mesh.nodes[elo] + mesh.nodes[ehi])])
    p2 = np.column_stack([tri, n + tri_edges])
    edge_of_pair = {(int(a), int(b)): k for k, (a, b) in enumerate(zip(elo.tolist(), ehi.tolist()))}
    return coords, p2, edge_of_pair


def _space(field_name, degree, ncomp, tri_ids, conn, coords) -> FunctionSpace:
    nodes = np.unique(conn[tri_ids])
    elements = np.searchsorted(nodes, conn[tri_ids])
    return FunctionSpace(field_name, degree, ncomp, nodes, coords[nodes], tri_ids, elements)


def _partition(space: FunctionSpace, gamma_nodes, dir_nodes, bnd_nodes) -> DofPartition:
    gl = space.local(gamma_nodes)
    dl = space.local(dir_nodes)
    bl = space.local(bnd_nodes)
    gamma = space.vector_dofs(gl)
    dirichlet = np.sort(space.vector_dofs(dl))
    boundary = np.sort(space.vector_dofs(bl))
    mask = np.ones(space.ndof, dtype=bool)
    mask[gamma] = False
    mask[dirichlet] = False
    return DofPartition(gamma, np.flatnonzero(mask), dirichlet, boundary, space.ndof)


def build_spaces(mesh: Mesh, degree: int = RESIDUAL_DEGREE) -> Spaces:
    coords, p2, edge_of_pair = _p2_numbering(mesh)
    ftri = np.flatnonzero(mesh.subdomain == FLUID)
    stri = np.flatnonzero(mesh.subdomain == SOLID)
    velocity = _space("fluid_velocity", 2, 2, ftri, p2, coords)
    pressure = _space("fluid_pressure", 1, 1, ftri, mesh.triangles, mesh.nodes)
    displacement = _space("solid_displacement", 2, 2, stri, p2, coords)
    spaces = Spaces(mesh, coords, p2, edge_of_pair, ref=ReferenceData.build(degree))

    nodes_of = lambda role: spaces.role_nodes(role)
    iface = nodes_of("interface")
    fdir = nodes_of("fluid_dirichlet")
    sdir = nodes_of("solid_dirichlet")
    f_on_dir = np.isin(iface, fdir)
    s_on_dir = np.isin(iface, sdir)
    if np.any(f_on_dir != s_on_dir):
        k = iface[np.flatnonzero(f_on_dir != s_on_dir)[0]]
        raise MeshError(f"interface node at {tuple(coords[k])} is Dirichlet on one side only")
    gamma = iface[~f_on_dir]
    fbnd = np.setdiff1d(np.unique(np.concatenate([fdir, nodes_of("fluid_neumann"), iface])), gamma)
    sbnd = np.setdiff1d(np.unique(np.concatenate([sdir, nodes_of("solid_neumann"), iface])), gamma)
    if len(ftri):
        fluid = _partition(velocity, gamma, fdir, fbnd)
    else:
        fluid = DofPartition(*(np.zeros(0, dtype=np.int64),) * 4, 0)
    if len(stri):
        solid = _partition(displacement, gamma, sdir, sbnd)
    else:
        solid = DofPartition(*(np.zeros(0, dtype=np.int64),) * 4, 0)
    # aligned traces: the same global nodes in the same order on both sides
    if len(gamma):
        match_nodes(velocity.dof_coords()[fluid.gamma], displacement.dof_coords()[solid.gamma])
    object.__setattr__(spaces, "velocity", velocity)
    object.__setattr__(spaces, "pressure", pressure)
    object.__setattr__(spaces, "displacement", displacement)
    object.__setattr__(spaces, "fluid", fluid)
    object.__setattr__(spaces, "solid", solid)
    return spaces


# ---------------------------------------------------------------- reference operators

def _geometry(xe: np.ndarray, dN: np.ndarray):
    """Jacobians (ne, nq, 2, 2), determinants and physical P2 gradients."""
    G = np.einsum("eak,qal->eqkl", xe, dN)
    det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
    inv = np.empty_like(G)
    inv[..., 0, 0] = G[..., 1, 1]
    inv[..., 1, 1] = G[..., 0, 0]
    inv[..., 0, 1] = -G[..., 0, 1]
    inv[..., 1, 0] = -G[..., 1, 0]
    inv /= det[..., None, None]
    grad = np.einsum("qal,eqlk->eqak", dN, inv)
    return det, grad


def element_mass(space: FunctionSpace, ref: ReferenceData, rho: float = 1.0) -> np.ndarray:
    xe = space.coords[space.elements]
    N, dN = (ref.N, ref.dN) if space.degree == 2 else (ref.L, ref.dL)
    det, _ = _geometry(xe, dN)
    m = rho * np.einsum("eq,q,qa,qb->eab", det, ref.weights, N, N)
    if space.ncomp == 1:
        return m
    nl = m.shape[1]
    out = np.zeros((len(m), 2 * nl, 2 * nl))
    out[:, 0::2, 0::2] = m
    out[:, 1::2, 1::2] = m
    return out


def element_laplace(space: FunctionSpace, ref: ReferenceData) -> np.ndarray:
    """Vector Laplacian ∫ ∇u : ∇v per element."""
    xe = space.coords[space.elements]
    det, grad = _geometry(xe, ref.dN)
    k = np.einsum("eq,q,eqak,eqbk->eab", det, ref.weights, grad, grad)
    out = np.zeros((len(k), 12, 12))
    out[:, 0::2, 0::2] = k
    out[:, 1::2, 1::2] = k
    return out


def element_elasticity(space: FunctionSpace, ref: ReferenceData, lam: float, mu: float) -> np.ndarray:
    """Linear elasticity ∫ 2μ ε(u):ε(v) + λ div u div v per element."""
    xe = space.coords[space.elements]
    det, grad = _geometry(xe, ref.dN)
    w = det * ref.weights
    # B[e,q,(a,k),(i,j)] = ∂φ_{a,k}/∂x_j for component i == k
    ne, nq = det.shape
    Bg = np.zeros((ne, nq, 6, 2, 2, 2))
    Bg[:, :, :, 0, 0, :] = grad
    Bg[:, :, :, 1, 1, :] = grad
    Bg = Bg.reshape(ne, nq, 12, 2, 2)
    eps = 0.5 * (Bg + Bg.transpose(0, 1, 2, 4, 3))
    div = Bg[..., 0, 0] + Bg[..., 1, 1]
    return (2 * mu * np.einsum("eq,eqaij,eqbij->eab", w, eps, eps)
            + lam * np.einsum("eq,eqa,eqb->eab", w, div, div))


def assemble(space: FunctionSpace, blocks: np.ndarray) -> sp.csr_matrix:
    d = space.element_dofs
    return Scatter(d, d, (space.ndof, space.ndof)).matrix(blocks)


def facet_mass_p2(coords: np.ndarray, facets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """1D P2 mass blocks (nf, 3, 3) on straight facets (end, end, midpoint)."""
    L = np.linalg.norm(coords[facets[:, 1]] - coords[facets[:, 0]], axis=1)
    ref = np.array([[4.0, -1.0, 2.0], [-1.0, 4.0, 2.0], [2.0, 2.0, 16.0]]) / 30.0
    return L[:, None, None] * ref, L


def facet_load_p2(coords: np.ndarray, facets: np.ndarray, f) -> np.ndarray:
    """∫ f φ_a ds on straight facets for a vector function ``f(x) -> (n, 2)``; (nf, 3, 2)."""
    t, w = gauss_line(4)
    a = coords[facets[:, 0]]
    b = coords[facets[:, 1]]
    L = np.linalg.norm(b - a, axis=1)
    phi = np.column_stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)])
    out = np.zeros((len(facets), 3, 2))
    for q in range(len(t)):
        x = a + t[q] * (b - a)
        out += w[q] * L[:, None, None] * phi[q][None, :, None] * np.asarray(f(x))[:, None, :]
    return out


# ---------------------------------------------------------------- inner products

@dataclass(frozen=True)
class InnerProduct:
    kind: str
    matrix: sp.csr_matrix

    def __call__(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a.T @ (self.matrix @ b)

    def norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(max(a @ (self.matrix @ a), 0.0)))


INNER_PRODUCT_KINDS = ("L2_interface", "H1_fluid", "H1_solid", "L2_pressure")


def interface_gram(spaces: Spaces, restrict: bool = True) -> tuple[sp.csr_matrix, np.ndarray]:
    """P2 L² mass on the interface; DOFs are (global P2 node, component).

    With ``restrict`` the matrix is reduced to the Γ DOFs of the fluid
    partition (clamped interface corners removed).
    """
    fp = spaces.facet_p2(spaces.mesh.facets_with_role("interface"))
    nodes = np.unique(fp)
    loc = np.searchsorted(nodes, fp)
    blocks, _ = facet_mass_p2(spaces.p2_coords, fp)
    d = np.stack([2 * loc, 2 * loc + 1], axis=2).reshape(len(loc), -1)
    vb = np.zeros((len(fp), 6, 6))
    vb[:, 0::2, 0::2] = blocks
    vb[:, 1::2, 1::2] = blocks
    G = Scatter(d, d, (2 * len(nodes), 2 * len(nodes))).matrix(vb)
    if not restrict:
        return G, nodes
    gnodes = spaces.velocity.nodes[spaces.velocity.dof_node(spaces.fluid.gamma[0::2])]
    keep = spaces.velocity.vector_dofs(np.searchsorted(nodes, gnodes))
    return G[keep][:, keep].tocsr(), gnodes


def assemble_inner_product(kind: str, spaces: Spaces, configuration: str = "reference") -> InnerProduct:
    if configuration != "reference":
        raise ValueError("Gram matrices are built on the reference configuration only")
    ref = spaces.ref
    if kind == "L2_interface":
        G, _ = interface_gram(spaces)
    elif kind == "H1_fluid":
        v = spaces.velocity
        G = assemble(v, element_laplace(v, ref) + element_mass(v, ref))
    elif kind == "H1_solid":
        v = spaces.displacement
        G = assemble(v, element_laplace(v, ref) + element_mass(v, ref))
    elif kind == "L2_pressure":
        p = spaces.pressure
        G = assemble(p, element_mass(p, ref))
    else:
        raise ValueError(f"unknown inner product {kind!r}")
    G = ((G + G.T) * 0.5).tocsr()
    return InnerProduct(kind, G)
