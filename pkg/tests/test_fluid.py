import numpy as np
import pytest

from irkfsi.fluid import (FluidOperators, FluidParams, MeshTanglingError, assemble_fluid_jacobians,
                          assemble_fluid_residual, assemble_mass_divergence)
from irkfsi.spaces import build_spaces


@pytest.fixture(scope="module")
def ops(beam_mesh):
    return FluidOperators(build_spaces(beam_mesh), FluidParams(rho=1.3, mu=0.07))


def _random(ops, rng, amp=0.1):
    z = lambda n, a: a * rng.standard_normal(n)
    return z(ops.nu, amp), z(ops.np_, 1.0), z(ops.nu, 1e-3), z(ops.nu, amp)


def test_zero_state(ops):
    z = np.zeros(ops.nu)
    assert np.abs(assemble_fluid_residual(ops, z, np.zeros(ops.np_), z, z)).max() == 0.0


def test_pressure_term_is_bt_action(ops, rng):
    # B carries the minus sign of -∫ θ div φ, so -∫ p div v = Bᵀp
    z = np.zeros(ops.nu)
    p = rng.standard_normal(ops.np_)
    _, B = assemble_mass_divergence(ops, z)
    r = assemble_fluid_residual(ops, z, p, z, z)
    assert np.abs(r - B.T @ p).max() < 1e-13 * np.abs(B.T @ p).max()
    c = np.tile([1.0, 0.0], ops.nu // 2)
    assert abs(np.ones(ops.np_) @ B @ c) < 1e-14


def test_rigid_translation_divergence_free(box_problem):
    f = box_problem.fluid
    _, B = f.mass_divergence(np.zeros(f.nu))
    c = np.tile([0.4, -1.1], f.nu // 2)
    assert np.abs(B @ c).max() < 1e-14


def test_rotation_divergence_free(ops):
    x = ops.spaces.velocity.coords
    u = np.column_stack([-(x[:, 1] - 0.5), x[:, 0] - 1.0]).ravel()
    _, B = ops.mass_divergence(np.zeros(ops.nu))
    assert np.abs(B @ u).max() < 1e-14


def test_constant_velocity_mass(ops, beam_mesh):
    M, _ = ops.mass_divergence(np.zeros(ops.nu))
    c = np.tile([0.3, 2.0], ops.nu // 2)
    assert abs(c @ M @ c - 1.3 * (0.09 + 4.0) * beam_mesh.area(0)) < 1e-12


def test_dilation_scales_mass(ops):
    alpha = 1.3
    X = (alpha - 1.0) * ops.spaces.velocity.coords.ravel()
    M0, _ = ops.mass_divergence(np.zeros(ops.nu))
    M1, _ = ops.mass_divergence(X)
    assert abs(M1 - alpha ** 2 * M0).max() < 1e-13


@pytest.mark.parametrize("block", ["u", "p", "X", "w"])
def test_jacobian_blocks_match_fd(ops, rng, block):
    u, p, X, w = _random(ops, rng)
    lin = ops.linearize(u, p, X, w)
    J = {"u": lin.Kuu, "p": lin.Kup, "X": lin.dR, "w": lin.Kuw}[block].toarray()
    args = {"u": u, "p": p, "X": X, "w": w}
    h = 1e-6
    fd = np.empty_like(J)
    for k in range(J.shape[1]):
        a = {n: v.copy() for n, v in args.items()}
        b = {n: v.copy() for n, v in args.items()}
        a[block][k] += h
        b[block][k] -= h
        fd[:, k] = (ops.residual(**a) - ops.residual(**b)) / (2 * h)
    assert np.abs(J - fd).max() < 1e-5 * np.abs(fd).max()


def test_pressure_block_independent_of_velocity(ops, rng):
    u, p, X, w = _random(ops, rng)
    a = ops.linearize(u, p, X, w, shape=False).Kup
    b = ops.linearize(2 * u, p, X, w, shape=False).Kup
    assert abs(a - b).max() == 0.0


def test_frozen_shape_block_vanishes(beam_problem, rng):
    f = beam_problem.fluid
    u, p, X, w = _random(f, rng)
    ext = beam_problem.ale.matrix
    _, _, dg = assemble_fluid_jacobians(f, u, p, X, w, ext, frozen=True)
    assert dg.shape == (f.nu, beam_problem.n_c) and not dg.any()
    _, _, dg = assemble_fluid_jacobians(f, u, p, X, w, ext)
    assert np.abs(dg).max() > 0


def test_convective_skew_symmetry(beam_mesh, rng):
    sp_ = build_spaces(beam_mesh)
    a = FluidOperators(sp_, FluidParams(rho=1.0, mu=0.1))
    b = FluidOperators(sp_, FluidParams(rho=2.0, mu=0.1))
    u = rng.standard_normal(a.nu)
    u[sp_.fluid.boundary] = 0.0
    u[sp_.fluid.gamma] = 0.0
    z, zp = np.zeros(a.nu), np.zeros(a.np_)
    conv = b.residual(u, zp, z, z) - a.residual(u, zp, z, z)
    assert abs(u @ conv) < 1e-10 * np.linalg.norm(u) * np.linalg.norm(conv)


def test_tangled_mesh_reported(ops):
    X = np.zeros(ops.nu)
    X[0::2] = -3.0 * ops.spaces.velocity.coords[:, 0]
    with pytest.raises(MeshTanglingError) as err:
        ops.residual(np.zeros(ops.nu), np.zeros(ops.np_), X, np.zeros(ops.nu))
    assert err.value.det <= 0


def test_dissipation_matches_viscous_work(ops, rng):
    # with ρ → 0 contributions removed, uᵀR'(u) of a velocity vanishing on the boundary is the dissipation
    sp_ = ops.spaces
    u = rng.standard_normal(ops.nu)
    u[sp_.fluid.boundary] = 0.0
    u[sp_.fluid.gamma] = 0.0
    z, zp = np.zeros(ops.nu), np.zeros(ops.np_)
    lin = ops.linearize(z, zp, z, z, shape=False)
    visc = lin.Kuu @ u          # at u = 0 the tangent is the viscous operator
    assert abs(u @ visc - ops.dissipation(u, z)) < 1e-10 * abs(u @ visc)
