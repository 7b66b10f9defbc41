import numpy as np
import pytest

from irkfsi.ale import (ale_from_interface, build_extension, dirichlet_lifting, mesh_velocity_at_stages,
                        min_jacobian)
from irkfsi.fluid import MeshTanglingError
from irkfsi.irk import radau_iia


@pytest.fixture(scope="module", params=["pseudo_elastic", "harmonic_fluid", "harmonic_solid"])
def ext(request, beam_problem):
    return build_extension(request.param, beam_problem.spaces)


def test_zero_trace(ext):
    assert not ext.extend(np.zeros(ext.n_c)).any()


def test_linearity_and_trace(ext, rng):
    g1, g2 = rng.standard_normal((2, ext.n_c))
    e = ext.extend(2.0 * g1 - 3.0 * g2)
    assert np.abs(e - (2.0 * ext.extend(g1) - 3.0 * ext.extend(g2))).max() < 1e-12 * np.abs(e).max()
    assert np.array_equal(ext.extend(g1)[ext.gamma], g1)
    assert np.allclose(ext.matrix @ g1, ext.extend(g1), atol=1e-13)


def test_identity_map(beam_problem):
    cfg = ale_from_interface(beam_problem.ale, np.zeros(beam_problem.n_c), beam_problem.spaces)
    assert not cfg.X.any()
    _, det = min_jacobian(beam_problem.spaces, cfg.X)
    # det of the reference element map: twice the smallest triangle area
    assert np.isclose(det, 2 * beam_problem.mesh.signed_areas().min())


def test_box_translation_decays(box_problem):
    sp_ = box_problem.spaces
    g = np.tile([0.05, 0.02], box_problem.n_c // 2)
    X = box_problem.ale.extend(g)
    assert np.array_equal(X[sp_.fluid.gamma], g)
    assert not X[sp_.fluid.boundary].any()
    assert np.abs(X).max() <= 0.05 + 1e-12


def test_fold_over_detected(beam_problem):
    sp_ = beam_problem.spaces
    xg = sp_.velocity.dof_coords()[sp_.fluid.gamma]
    amp = 0.0
    # shear the beam faces sideways until elements invert
    with pytest.raises(MeshTanglingError):
        for amp in np.linspace(0.1, 3.0, 30):
            g = np.where(np.arange(beam_problem.n_c) % 2 == 0, amp * xg[:, 1], 0.0)
            ale_from_interface(beam_problem.ale, g, sp_)
    assert amp > 0.1


def test_mesh_velocity(beam_problem, rng):
    ext = beam_problem.ale
    g0 = rng.standard_normal(ext.n_c) * 1e-3
    for s in (1, 2, 3):
        tab = radau_iia(s)
        W = mesh_velocity_at_stages(np.tile(g0, (s, 1)), tab, 0.1, g0, ext)
        assert np.abs(W).max() < 1e-13
        slope = rng.standard_normal(ext.n_c)
        G = g0 + 0.1 * np.outer(tab.c, slope)
        W = mesh_velocity_at_stages(G, tab, 0.1, g0, ext)
        assert np.abs(W - ext.extend(slope)[None]).max() < 1e-12 * np.abs(W).max()
    g1 = g0 + rng.standard_normal(ext.n_c)
    W = mesh_velocity_at_stages(g1[None], radau_iia(1), 0.1, g0, ext)
    assert np.allclose(W[0], (ext.extend(g1) - ext.extend(g0)) / 0.1, atol=1e-12)


def test_dirichlet_lifting(beam_problem):
    sp_ = beam_problem.spaces
    vals = beam_problem.profile[sp_.fluid.dirichlet]
    u = dirichlet_lifting(sp_, vals)
    assert np.array_equal(u[sp_.fluid.dirichlet], vals)
    assert not u[sp_.fluid.gamma].any()
