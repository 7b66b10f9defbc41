import numpy as np
import pytest

from irkfsi.mesh import BenchmarkGeometry, generate_benchmark, parse_mesh
from irkfsi.spaces import (INNER_PRODUCT_KINDS, assemble_inner_product, build_spaces, interface_gram, p1_basis,
                           p2_basis)

ONE_FLUID_TRIANGLE = """fsimesh 1
NODES 3
0 0
1 0
0 1
TRIANGLES 1
0 1 2 0
FACETS 3
0 1 1
1 2 1
2 0 2
"""


def test_single_triangle_counts():
    sp_ = build_spaces(parse_mesh(ONE_FLUID_TRIANGLE))
    assert sp_.velocity.ndof == 12 and sp_.pressure.ndof == 3 and sp_.displacement.ndof == 0


def test_two_triangles_interface(two_triangles):
    sp_ = build_spaces(two_triangles)
    # two vertices plus the P2 edge midpoint, two components each
    assert sp_.fluid.n_c == 6 and sp_.solid.n_c == 6


@pytest.mark.parametrize("name", ["vertical_beam", "box_isolated", "turek_fsi3"])
def test_partition_complete(name):
    sp_ = build_spaces(generate_benchmark(BenchmarkGeometry(name, 0.1 if name == "turek_fsi3" else 0.25)))
    for part, space in ((sp_.fluid, sp_.velocity), (sp_.solid, sp_.displacement)):
        allidx = np.concatenate([part.gamma, part.inner, part.dirichlet])
        assert len(allidx) == space.ndof == len(np.unique(allidx))
        v = np.random.default_rng(0).standard_normal(space.ndof)
        assert np.array_equal(part.join(*part.split(v)), v)
    # aligned traces
    xf = sp_.velocity.dof_coords()[sp_.fluid.gamma]
    xs = sp_.displacement.dof_coords()[sp_.solid.gamma]
    assert np.abs(xf - xs).max() < 1e-12
    assert np.array_equal(sp_.velocity.dof_component(sp_.fluid.gamma),
                          sp_.displacement.dof_component(sp_.solid.gamma))


def test_space_sizes(beam_mesh):
    sp_ = build_spaces(beam_mesh)
    fluid_p2 = np.unique(sp_.p2_triangles[beam_mesh.subdomain == 0])
    solid_p2 = np.unique(sp_.p2_triangles[beam_mesh.subdomain == 1])
    assert sp_.velocity.ndof == 2 * len(fluid_p2)
    assert sp_.displacement.ndof == 2 * len(solid_p2)
    assert sp_.pressure.ndof == len(np.unique(beam_mesh.triangles[beam_mesh.subdomain == 0]))


def test_clamp_corner_is_dirichlet(beam_mesh):
    sp_ = build_spaces(beam_mesh)
    x = sp_.displacement.dof_coords()
    corner = np.flatnonzero((np.abs(x[:, 1]) < 1e-12) & (np.abs(x[:, 0] - 0.5) < 1e-12))
    assert len(corner) == 2
    assert np.isin(corner, sp_.solid.dirichlet).all()
    assert not np.isin(corner, sp_.solid.gamma).any()


def test_partition_of_unity():
    pts = np.random.default_rng(3).random((50, 2)) * 0.5
    N, dN = p2_basis(pts)
    L, dL = p1_basis(pts)
    assert np.abs(N.sum(axis=1) - 1).max() < 1e-13
    assert np.abs(dN.sum(axis=1)).max() < 1e-13
    assert np.abs(L.sum(axis=1) - 1).max() < 1e-15


@pytest.mark.parametrize("kind", INNER_PRODUCT_KINDS)
def test_gram_symmetric_positive(kind, beam_mesh):
    G = assemble_inner_product(kind, build_spaces(beam_mesh)).matrix.toarray()
    assert np.linalg.norm(G - G.T) <= 1e-13 * np.linalg.norm(G)
    assert np.linalg.eigvalsh(G).min() > 0


def test_h1_solid_constant_field(beam_mesh):
    sp_ = build_spaces(beam_mesh)
    G = assemble_inner_product("H1_solid", sp_).matrix
    c = np.tile([0.3, -0.7], sp_.displacement.ndof // 2)
    expected = (0.3 ** 2 + 0.7 ** 2) * beam_mesh.area(1)
    assert abs(c @ G @ c - expected) < 1e-12 * expected


def test_interface_row_sums_are_lumped_lengths(beam_mesh):
    sp_ = build_spaces(beam_mesh)
    G, nodes = interface_gram(sp_, restrict=False)
    # ∫ φ_i ds: L/6 at the ends, 2L/3 at the midpoint of every P2 edge
    lumped = np.zeros(len(nodes))
    for tri in sp_.facet_p2(beam_mesh.facets_with_role("interface")):
        L = np.linalg.norm(sp_.p2_coords[tri[1]] - sp_.p2_coords[tri[0]])
        k = np.searchsorted(nodes, tri)
        lumped[k] += [L / 6, L / 6, 2 * L / 3]
    rows = np.asarray(G.sum(axis=1)).ravel()
    assert np.allclose(rows[0::2], lumped, atol=1e-14) and np.allclose(rows[1::2], lumped, atol=1e-14)
    assert abs(lumped.sum() - 1.2) < 1e-13     # two beam sides of 0.5 plus the 0.2 top


def test_reference_configuration_only(beam_mesh):
    with pytest.raises(ValueError):
        assemble_inner_product("H1_fluid", build_spaces(beam_mesh), configuration="current")
