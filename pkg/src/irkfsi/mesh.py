"""Conforming fluid/solid triangulations with tagged boundaries.

A :class:`Mesh` stores one node array shared by both subdomains, so the
interface is conforming by construction: an interface facet uses the same
node indices on the fluid and on the solid side.

Text format (``fsimesh 1``)::

    fsimesh 1
    NODES n
    x y                      (n lines)
    TRIANGLES m
    i j k subdomain          (m lines, subdomain 0 = fluid, 1 = solid)
    FACETS k
    i j tag                  (k lines)
    TAGS t                   (optional)
    tag role [name]          (t lines)

Node ids are zero based. Blank lines and lines starting with ``#`` are
ignored. Without a ``TAGS`` section the roles in :data:`DEFAULT_TAG_ROLES`
apply.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FLUID, SOLID = 0, 1
ROLES = ("fluid_dirichlet", "fluid_neumann", "solid_dirichlet", "solid_neumann", "interface")
FLUID_ROLES = ("fluid_dirichlet", "fluid_neumann", "interface")
SOLID_ROLES = ("solid_dirichlet", "solid_neumann", "interface")
DEFAULT_TAG_ROLES = {
    1: "fluid_dirichlet",
    2: "fluid_neumann",
    3: "solid_dirichlet",
    4: "solid_neumann",
    5: "interface",
}
MATCH_TOL = 1e-12


class MeshError(ValueError):
    """Malformed or non-conforming mesh data."""


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    subdomain: np.ndarray
    facets: np.ndarray
    facet_tags: np.ndarray
    tag_roles: dict[int, str]
    tag_names: dict[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, dtype in (("nodes", float), ("triangles", np.int64), ("subdomain", np.int64),
                            ("facets", np.int64), ("facet_tags", np.int64)):
            arr = np.ascontiguousarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "nodes", self.nodes.reshape(-1, 2))
        object.__setattr__(self, "triangles", self.triangles.reshape(-1, 3))
        object.__setattr__(self, "facets", self.facets.reshape(-1, 2))
        _validate(self)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def area(self, part: int | None = None) -> float:
        a = self.signed_areas()
        if part is not None:
            a = a[self.subdomain == part]
        return float(a.sum())

    def facets_with_role(self, role: str) -> np.ndarray:
        tags = [t for t, r in self.tag_roles.items() if r == role]
        return self.facets[np.isin(self.facet_tags, tags)]

    def facets_with_name(self, name: str) -> np.ndarray:
        tags = [t for t, n in self.tag_names.items() if n == name]
        return self.facets[np.isin(self.facet_tags, tags)]

    def tag_of_name(self, name: str) -> list[int]:
        return [t for t, n in self.tag_names.items() if n == name]

    def hash(self) -> str:
        h = hashlib.sha256()
        for arr in (self.nodes, self.triangles, self.subdomain, self.facets, self.facet_tags):
            h.update(np.ascontiguousarray(arr).tobytes())
        for t in sorted(self.tag_roles):
            h.update(f"{t}:{self.tag_roles[t]};".encode())
        return h.hexdigest()


def _edge_key(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return np.minimum(a, b) * n + np.maximum(a, b)


def _validate(mesh: Mesh) -> None:
    n = mesh.n_nodes
    if mesh.triangles.size and (mesh.triangles.min() < 0 or mesh.triangles.max() >= n):
        raise MeshError("triangle references a node id out of range")
    if mesh.facets.size and (mesh.facets.min() < 0 or mesh.facets.max() >= n):
        raise MeshError("facet references a node id out of range")
    if len(mesh.subdomain) != mesh.n_triangles or not np.isin(mesh.subdomain, (FLUID, SOLID)).all():
        raise MeshError("subdomain ids must be 0 (fluid) or 1 (solid), one per triangle")
    if len(mesh.facet_tags) != len(mesh.facets):
        raise MeshError("one tag per facet required")
    for t, role in mesh.tag_roles.items():
        if role not in ROLES:
            raise MeshError(f"tag {t}: unknown role {role!r}")

    area = mesh.signed_areas()
    bad = np.flatnonzero(area <= 0.0)
    if bad.size:
        raise MeshError(f"triangle {bad[0]} is not positively oriented (signed area {area[bad[0]]:.3e})")

    # edge -> (owner count, owner subdomains) per subdomain
    tri = mesh.triangles
    loc = np.array([[0, 1], [1, 2], [2, 0]])
    ea = tri[:, loc[:, 0]].ravel()
    eb = tri[:, loc[:, 1]].ravel()
    keys = _edge_key(ea, eb, n)
    sub = np.repeat(mesh.subdomain, 3)
    counts = {}
    for part in (FLUID, SOLID):
        k, c = np.unique(keys[sub == part], return_counts=True)
        if (c > 2).any():
            raise MeshError("an edge is shared by more than two triangles")
        counts[part] = dict(zip(k.tolist(), c.tolist()))

    fkeys = _edge_key(mesh.facets[:, 0], mesh.facets[:, 1], n).tolist()
    seen: dict[int, int] = {}
    for i, (key, tag) in enumerate(zip(fkeys, mesh.facet_tags.tolist())):
        if tag not in mesh.tag_roles:
            raise MeshError(f"facet {i} has tag {tag} without a role")
        if key in seen:
            raise MeshError(f"facet {i} duplicates facet {seen[key]}")
        seen[key] = i
        role = mesh.tag_roles[tag]
        nf = counts[FLUID].get(key, 0)
        ns = counts[SOLID].get(key, 0)
        a, b = mesh.facets[i]
        if role == "interface":
            if nf != 1 or ns != 1:
                raise MeshError(
                    f"interface facet {i} ({a}, {b}) is not shared by exactly one fluid and one solid triangle")
        elif role in FLUID_ROLES:
            if nf != 1 or ns != 0:
                raise MeshError(f"facet {i} ({a}, {b}) with role {role} is not on the fluid boundary")
        else:
            if ns != 1 or nf != 0:
                raise MeshError(f"facet {i} ({a}, {b}) with role {role} is not on the solid boundary")

    for part in (FLUID, SOLID):
        for key, c in counts[part].items():
            if c == 1 and key not in seen:
                a, b = divmod(key, n)
                name = "fluid" if part == FLUID else "solid"
                raise MeshError(f"{name} boundary edge ({a}, {b}) carries no role")


# ---------------------------------------------------------------- file IO

def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            yield no, s


def load_mesh(path: str | Path, tag_roles: dict[int, str] | None = None) -> Mesh:
    """Read a mesh from the native text format or a Gmsh v2 ASCII file."""
    path = Path(path)
    text = path.read_text()
    if text.lstrip().startswith("$MeshFormat"):
        if tag_roles is None:
            raise MeshError("Gmsh input needs a tag-role mapping")
        return read_gmsh(text, tag_roles)
    return parse_mesh(text, tag_roles)


def parse_mesh(text: str, tag_roles: dict[int, str] | None = None) -> Mesh:
    it = _lines(text)
    try:
        no, head = next(it)
    except StopIteration:
        raise MeshError("line 1: empty mesh file") from None
    if head.split() != ["fsimesh", "1"]:
        raise MeshError(f"line {no}: expected header 'fsimesh 1'")
    data: dict[str, list] = {}
    names: dict[int, str] = {}
    roles: dict[int, str] = {}
    widths = {"NODES": 2, "TRIANGLES": 4, "FACETS": 3}
    for no, line in it:
        parts = line.split()
        if parts[0] not in ("NODES", "TRIANGLES", "FACETS", "TAGS") or len(parts) != 2:
            raise MeshError(f"line {no}: expected a section header, got {line!r}")
        sec = parts[0]
        try:
            count = int(parts[1])
        except ValueError:
            raise MeshError(f"line {no}: bad count {parts[1]!r}") from None
        rows = []
        for _ in range(count):
            try:
                no, line = next(it)
            except StopIteration:
                raise MeshError(f"line {no}: section {sec} ends early") from None
            vals = line.split()
            try:
                if sec == "TAGS":
                    if len(vals) not in (2, 3):
                        raise ValueError
                    roles[int(vals[0])] = vals[1]
                    if len(vals) == 3:
                        names[int(vals[0])] = vals[2]
                    continue
                if len(vals) != widths[sec]:
                    raise ValueError
                rows.append([float(v) for v in vals] if sec == "NODES" else [int(v) for v in vals])
            except ValueError:
                raise MeshError(f"line {no}: malformed {sec} entry {line!r}") from None
        data[sec] = rows
    for sec in widths:
        if sec not in data:
            raise MeshError(f"missing section {sec}")
    tri = np.array(data["TRIANGLES"], dtype=np.int64).reshape(-1, 4)
    fac = np.array(data["FACETS"], dtype=np.int64).reshape(-1, 3)
    if tag_roles is None:
        tag_roles = roles or dict(DEFAULT_TAG_ROLES)
    return Mesh(np.array(data["NODES"], dtype=float).reshape(-1, 2), tri[:, :3], tri[:, 3],
                fac[:, :2], fac[:, 2], dict(tag_roles), names)


def format_mesh(mesh: Mesh) -> str:
    out = ["fsimesh 1", f"NODES {mesh.n_nodes}"]
    out += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    out.append(f"TRIANGLES {mesh.n_triangles}")
    out += [f"{a} {b} {c} {s}" for (a, b, c), s in zip(mesh.triangles.tolist(), mesh.subdomain.tolist())]
    out.append(f"FACETS {len(mesh.facets)}")
    out += [f"{a} {b} {t}" for (a, b), t in zip(mesh.facets.tolist(), mesh.facet_tags.tolist())]
    out.append(f"TAGS {len(mesh.tag_roles)}")
    for t in sorted(mesh.tag_roles):
        name = mesh.tag_names.get(t)
        out.append(f"{t} {mesh.tag_roles[t]}" + (f" {name}" if name else ""))
    return "\n".join(out) + "\n"


def write_mesh(mesh: Mesh, path: str | Path) -> None:
    Path(path).write_text(format_mesh(mesh))


def read_gmsh(text: str, tag_roles: dict[int, str], solid_tags: tuple[int, ...] | None = None) -> Mesh:
    """Gmsh v2 ASCII subset: nodes, 3-node triangles, 2-node lines.

    Line elements take their role from their physical tag through
    ``tag_roles``. Triangles whose physical tag appears in ``solid_tags``
    (default: any tag mapped to ``"solid"`` in ``tag_roles``) are solid.
    """
    lines = text.splitlines()
    roles = {int(k): v for k, v in tag_roles.items() if v in ROLES}
    if solid_tags is None:
        solid_tags = tuple(int(k) for k, v in tag_roles.items() if v == "solid")
    i = 0
    ids: dict[int, int] = {}
    xy: list[tuple[float, float]] = []
    tris, subs, facs, ftags = [], [], [], []
    try:
        while i < len(lines):
            s = lines[i].strip()
            if s == "$MeshFormat":
                if not lines[i + 1].split()[0].startswith("2"):
                    raise MeshError(f"line {i + 2}: only Gmsh format 2 is supported")
                i += 2
            elif s == "$Nodes":
                n = int(lines[i + 1])
                for k in range(n):
                    v = lines[i + 2 + k].split()
                    ids[int(v[0])] = len(xy)
                    xy.append((float(v[1]), float(v[2])))
                i += n + 2
            elif s == "$Elements":
                n = int(lines[i + 1])
                for k in range(n):
                    v = [int(t) for t in lines[i + 2 + k].split()]
                    etype, ntag = v[1], v[2]
                    phys = v[3] if ntag > 0 else 0
                    conn = [ids[t] for t in v[3 + ntag:]]
                    if etype == 2:
                        tris.append(conn)
                        subs.append(SOLID if phys in solid_tags else FLUID)
                    elif etype == 1:
                        facs.append(conn)
                        ftags.append(phys)
                i += n + 2
            else:
                i += 1
    except (IndexError, ValueError, KeyError) as exc:
        raise MeshError(f"line {i + 1}: malformed Gmsh data ({exc})") from None
    tri = np.array(tris, dtype=np.int64).reshape(-1, 3)
    used = np.unique(np.concatenate([tri.ravel(), np.array(facs, dtype=np.int64).ravel()]))
    remap = -np.ones(len(xy), dtype=np.int64)
    remap[used] = np.arange(len(used))
    nodes = np.array(xy, dtype=float)[used]
    fac = remap[np.array(facs, dtype=np.int64).reshape(-1, 2)]
    keep = np.isin(ftags, list(roles))
    return Mesh(nodes, remap[tri], np.array(subs), fac[keep], np.array(ftags)[keep], roles)


# ---------------------------------------------------------------- trace map

def match_nodes(xa: np.ndarray, xb: np.ndarray, tol: float = MATCH_TOL) -> np.ndarray:
    """Return ``perm`` with ``xb[perm[i]] == xa[i]`` up to ``tol``."""
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    if xa.shape != xb.shape:
        raise MeshError(f"unmatched interface nodes: {len(xa)} fluid vs {len(xb)} solid")
    ia = np.lexsort((xa[:, 1], xa[:, 0]))
    ib = np.lexsort((xb[:, 1], xb[:, 0]))
    perm = np.empty(len(xa), dtype=np.int64)
    perm[ia] = ib
    gap = np.abs(xa - xb[perm]).max(axis=1) if len(xa) else np.zeros(0)
    if gap.size and gap.max() > tol:
        k = int(np.argmax(gap))
        raise MeshError(f"unmatched interface node at {tuple(xa[k])} (mismatch {gap[k]:.3e})")
    return perm


def interface_trace_map(mesh: Mesh) -> np.ndarray:
    """Pairs (fluid-local, solid-local) node indices of interface vertices.

    Local indices refer to the sorted vertex sets of each subdomain.
    """
    fverts = np.unique(mesh.triangles[mesh.subdomain == FLUID])
    sverts = np.unique(mesh.triangles[mesh.subdomain == SOLID])
    gam = np.unique(mesh.facets_with_role("interface"))
    fl = np.searchsorted(fverts, gam)
    sl = np.searchsorted(sverts, gam)
    perm = match_nodes(mesh.nodes[fverts[fl]], mesh.nodes[sverts[sl]])
    return np.column_stack([fl, sl[perm]])


# ---------------------------------------------------------------- generators

@dataclass(frozen=True)
class BenchmarkGeometry:
    name: str
    h: float
    params: dict = field(default_factory=dict)


GEOMETRY_DEFAULTS = {
    "vertical_beam": dict(length=2.0, height=1.0, beam_x0=0.5, beam_width=0.2, beam_height=0.5),
    "box_isolated": dict(size=2.0, block_x0=0.5, block_y0=0.5, block_size=1.0),
    "turek_fsi3": dict(length=2.5, height=0.41, cx=0.2, cy=0.2, radius=0.05,
                       beam_length=0.35, beam_thickness=0.02, n_circle=24, beam_h=None),
}


def criss_cross(xs: np.ndarray, ys: np.ndarray, solid_cell) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rectangular grid with a centre node per cell and four triangles per cell."""
    nx, ny = len(xs) - 1, len(ys) - 1
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    corners = np.column_stack([X.ravel(), Y.ravel()])
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    CX, CY = np.meshgrid(cx, cy, indexing="ij")
    centres = np.column_stack([CX.ravel(), CY.ravel()])
    nodes = np.vstack([corners, centres])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    i, j = i.ravel(), j.ravel()
    v00 = i * (ny + 1) + j
    v10 = (i + 1) * (ny + 1) + j
    v11 = (i + 1) * (ny + 1) + j + 1
    v01 = i * (ny + 1) + j + 1
    c = len(corners) + i * ny + j
    tris = np.stack([np.column_stack([v00, v10, c]), np.column_stack([v10, v11, c]),
                     np.column_stack([v11, v01, c]), np.column_stack([v01, v00, c])], axis=1)
    solid = np.array([bool(solid_cell(a, b)) for a, b in centres])
    sub = np.repeat(np.where(solid, SOLID, FLUID), 4)
    return nodes, tris.reshape(-1, 3), sub


def _tag_boundary(nodes, tris, sub, classify) -> tuple[np.ndarray, np.ndarray]:
    """Tag subdomain-boundary edges: ``classify(midpoint, part)`` gives the tag of
    outer edges; fluid/solid edges receive ``classify(None, None)``."""
    n = len(nodes)
    loc = np.array([[0, 1], [1, 2], [2, 0]])
    ea = tris[:, loc[:, 0]].ravel()
    eb = tris[:, loc[:, 1]].ravel()
    key = _edge_key(ea, eb, n)
    part = np.repeat(sub, 3)
    order = np.argsort(key, kind="stable")
    key_s = key[order]
    uniq, start, cnt = np.unique(key_s, return_index=True, return_counts=True)
    facets, tags = [], []
    itag = classify(None, None)
    for k, st, c in zip(uniq, start, cnt):
        first = order[st]
        if c == 1:
            a, b = ea[first], eb[first]
            tags.append(classify(0.5 * (nodes[a] + nodes[b]), int(part[first])))
            facets.append((a, b))
        elif part[order[st]] != part[order[st + 1]]:
            facets.append((ea[first], eb[first]))
            tags.append(itag)
    return np.array(facets, dtype=np.int64), np.array(tags, dtype=np.int64)


def _grid(a: float, b: float, h: float) -> np.ndarray:
    # at most h, exact when h divides the interval
    n = max(1, int(np.ceil((b - a) / h - 1e-9)))
    return np.linspace(a, b, n + 1)


def _aligned_axis(breaks: list[float], h: float) -> np.ndarray:
    parts = [_grid(a, b, h) for a, b in zip(breaks[:-1], breaks[1:])]
    return np.unique(np.concatenate(parts))


def vertical_beam_counts(h: float, length: float = 2.0, height: float = 1.0) -> tuple[int, int]:
    """Closed-form (node, triangle) counts of the structured vertical-beam mesh."""
    nx = int(round(length / h))
    ny = int(round(height / h))
    return (nx + 1) * (ny + 1) + nx * ny, 4 * nx * ny


def generate_benchmark(geometry: BenchmarkGeometry) -> Mesh:
    if geometry.h <= 0:
        raise MeshError("mesh size h must be positive")
    if geometry.name not in GEOMETRY_DEFAULTS:
        raise MeshError(f"unknown benchmark geometry {geometry.name!r}")
    p = {**GEOMETRY_DEFAULTS[geometry.name], **geometry.params}
    if geometry.name == "vertical_beam":
        return _vertical_beam(geometry.h, **p)
    if geometry.name == "box_isolated":
        return _box_isolated(geometry.h, **p)
    return _turek(geometry.h, **p)


def _vertical_beam(h, length, height, beam_x0, beam_width, beam_height) -> Mesh:
    x1 = beam_x0 + beam_width
    if min(length, height, beam_width, beam_height) <= 0 or beam_x0 <= 0 or x1 >= length \
            or beam_height >= height:
        raise MeshError("beam must lie strictly inside the channel")
    xs = _aligned_axis([0.0, beam_x0, x1, length], h)
    ys = _aligned_axis([0.0, beam_height, height], h)
    nodes, tris, sub = criss_cross(xs, ys, lambda x, y: beam_x0 < x < x1 and y < beam_height)
    eps = 1e-9 * length

    def classify(mid, part):
        if mid is None:
            return 5
        if part == SOLID:
            return 4
        if mid[0] < eps:
            return 1
        if mid[0] > length - eps:
            return 3
        return 2

    fac, tags = _tag_boundary(nodes, tris, sub, classify)
    roles = {1: "fluid_dirichlet", 2: "fluid_dirichlet", 3: "fluid_neumann",
             4: "solid_dirichlet", 5: "interface"}
    names = {1: "inlet", 2: "wall", 3: "outlet", 4: "clamp", 5: "interface"}
    return Mesh(nodes, tris, sub, fac, tags, roles, names)


def _box_isolated(h, size, block_x0, block_y0, block_size) -> Mesh:
    x1, y1 = block_x0 + block_size, block_y0 + block_size
    if block_x0 <= 0 or block_y0 <= 0 or x1 >= size or y1 >= size or block_size <= 0:
        raise MeshError("block must lie strictly inside the box")
    xs = _aligned_axis([0.0, block_x0, x1, size], h)
    ys = _aligned_axis([0.0, block_y0, y1, size], h)
    nodes, tris, sub = criss_cross(xs, ys, lambda x, y: block_x0 < x < x1 and block_y0 < y < y1)
    fac, tags = _tag_boundary(nodes, tris, sub, lambda mid, part: 5 if mid is None else (1 if part == FLUID else 4))
    roles = {1: "fluid_dirichlet", 4: "solid_neumann", 5: "interface"}
    names = {1: "wall", 4: "free", 5: "interface"}
    return Mesh(nodes, tris, sub, fac, tags, roles, names)


def _turek(h, length, height, cx, cy, radius, beam_length, beam_thickness, n_circle, beam_h) -> Mesh:
    import triangle

    half = 0.5 * beam_thickness
    if half >= radius:
        raise MeshError("beam thicker than the cylinder")
    x_end = cx + radius + beam_length
    if cy - radius <= 0 or cy + radius >= height or x_end >= length or cx - radius <= 0:
        raise MeshError("cylinder and beam must lie inside the channel")
    # circle polygon through the two beam attachment points
    th = np.arcsin(half / radius)
    n_arc = max(int(n_circle), 8)
    angles = np.linspace(th, 2 * np.pi - th, n_arc + 1)
    circ = np.column_stack([cx + radius * np.cos(angles), cy + radius * np.sin(angles)])
    top_attach, bot_attach = circ[0], circ[-1]
    verts = [(0.0, 0.0), (length, 0.0), (length, height), (0.0, height)]
    segs, marks = [(0, 1), (1, 2), (2, 3), (3, 0)], [2, 3, 2, 1]
    base = len(verts)
    verts += [tuple(p) for p in circ]
    for k in range(n_arc):
        segs.append((base + k, base + k + 1))
        marks.append(6)
    it, ib = base, base + n_arc
    verts += [(x_end, cy - half), (x_end, cy + half)]
    e0, e1 = len(verts) - 2, len(verts) - 1
    segs += [(ib, it), (ib, e0), (e0, e1), (e1, it)]
    marks += [4, 5, 5, 5]
    bh = beam_h if beam_h else min(h, beam_thickness)
    pslg = dict(vertices=np.array(verts), segments=np.array(segs), segment_markers=np.array(marks)[:, None],
                holes=np.array([[cx, cy]]),
                regions=np.array([[0.5 * (length + x_end), 0.5 * height, 0, 0.5 * h * h],
                                  [0.5 * (cx + x_end), cy, 1, 0.5 * bh * bh]]))
    out = triangle.triangulate(pslg, "pq30Aa")
    nodes = out["vertices"]
    tris = out["triangles"].astype(np.int64)
    sub = np.where(out["triangle_attributes"].ravel() > 0.5, SOLID, FLUID)
    e1, e2 = nodes[tris[:, 1]] - nodes[tris[:, 0]], nodes[tris[:, 2]] - nodes[tris[:, 0]]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    flip = area < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    eps = 1e-9 * length

    def classify(mid, part):
        if mid is None:
            return 5
        if part == SOLID:
            return 4
        if mid[0] < eps:
            return 1
        if mid[0] > length - eps:
            return 3
        if mid[1] < eps or mid[1] > height - eps:
            return 2
        return 6

    fac, tags = _tag_boundary(nodes, tris, sub, classify)
    roles = {1: "fluid_dirichlet", 2: "fluid_dirichlet", 3: "fluid_neumann", 6: "fluid_dirichlet",
             4: "solid_dirichlet", 5: "interface"}
    names = {1: "inlet", 2: "wall", 3: "outlet", 6: "cylinder", 4: "clamp", 5: "interface"}
    return Mesh(nodes, tris, sub, fac, tags, roles, names)
