import numpy as np
import pytest

from irkfsi.mesh import BenchmarkGeometry, generate_benchmark
from irkfsi.solid import (SolidOperators, SolidParams, assemble_solid_jacobian, assemble_solid_residual,
                          elastic_energy)
from irkfsi.spaces import build_spaces


@pytest.fixture(scope="module")
def spaces(beam_mesh):
    return build_spaces(beam_mesh)


@pytest.fixture(scope="module", params=["linear", "svk"])
def ops(request, spaces):
    return SolidOperators(spaces, SolidParams(rho=1.1, E=1e3, nu=0.3, model=request.param))


def _coords(ops):
    return ops.spaces.displacement.coords


def test_params_validation():
    with pytest.raises(ValueError):
        SolidParams(nu=0.5)
    with pytest.raises(ValueError):
        SolidParams(E=-1.0)
    lam, mu = SolidParams(E=1e3, nu=0.3).lame
    assert np.isclose(lam, 1e3 * 0.3 / (1.3 * 0.4)) and np.isclose(mu, 1e3 / 2.6)


def test_zero_and_translation(ops):
    assert np.abs(assemble_solid_residual(ops, np.zeros(ops.ns))).max() == 0.0
    d = np.tile([0.2, -0.05], ops.ns // 2)
    assert np.abs(assemble_solid_residual(ops, d)).max() < 1e-12
    assert abs(elastic_energy(ops, d)) < 1e-14


def test_svk_rotation_objective(spaces):
    ops = SolidOperators(spaces, SolidParams(model="svk"))
    th = 0.7
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    x = _coords(ops)
    d = (x @ R.T - x).ravel()
    r = assemble_solid_residual(ops, d)
    assert np.abs(r).max() < 1e-10 * ops.mu


def test_linear_jacobian_constant_symmetric(spaces, rng):
    ops = SolidOperators(spaces, SolidParams(model="linear"))
    K0 = assemble_solid_jacobian(ops, np.zeros(ops.ns))
    K1 = assemble_solid_jacobian(ops, rng.standard_normal(ops.ns))
    assert abs(K0 - K1).max() == 0.0
    assert abs(K0 - K0.T).max() < 1e-12 * abs(K0).max()
    d = rng.standard_normal(ops.ns)
    assert np.allclose(assemble_solid_residual(ops, d), K0 @ d, rtol=0, atol=1e-10 * abs(K0).max())


def test_svk_tangent_at_zero_is_linear(spaces):
    lin = SolidOperators(spaces, SolidParams(model="linear"))
    svk = SolidOperators(spaces, SolidParams(model="svk"))
    z = np.zeros(lin.ns)
    assert abs(assemble_solid_jacobian(lin, z) - assemble_solid_jacobian(svk, z)).max() < 1e-10


def test_jacobian_fd(ops, rng):
    d = rng.standard_normal(ops.ns)
    d *= 0.1 / np.abs(d).max()
    K = assemble_solid_jacobian(ops, d).toarray()
    assert np.abs(K - K.T).max() < 1e-10 * np.abs(K).max()
    h = 1e-6
    fd = np.column_stack([(ops.residual(d + h * e) - ops.residual(d - h * e)) / (2 * h) for e in np.eye(ops.ns)])
    assert np.abs(K - fd).max() < 1e-6 * np.abs(fd).max()


def test_energy_residual_consistency(ops, rng):
    d = 0.05 * rng.standard_normal(ops.ns)
    v = rng.standard_normal(ops.ns)
    eps = 1e-5
    dW = (elastic_energy(ops, d + eps * v) - elastic_energy(ops, d - eps * v)) / (2 * eps)
    assert abs(dW - v @ assemble_solid_residual(ops, d)) < 1e-7 * abs(dW)


def test_uniaxial_stretch_energy():
    # unit-square block of the isolated box
    sp_ = build_spaces(generate_benchmark(BenchmarkGeometry("box_isolated", 0.25)))
    ops = SolidOperators(sp_, SolidParams(E=10.0, nu=0.3, model="linear"))
    alpha = 0.01
    x = sp_.displacement.coords
    d = np.column_stack([alpha * x[:, 0], 0 * x[:, 0]]).ravel()
    lam, mu = ops.lam, ops.mu
    assert np.isclose(elastic_energy(ops, d), mu * alpha ** 2 + 0.5 * lam * alpha ** 2, rtol=1e-12)


def test_mass_spd_and_total(spaces):
    ops = SolidOperators(spaces, SolidParams(rho=1.1))
    M = ops.M.toarray()
    assert np.abs(M - M.T).max() < 1e-15 and np.linalg.eigvalsh(M).min() > 0
    c = np.tile([1.0, 0.0], ops.ns // 2)
    assert np.isclose(c @ M @ c, 1.1 * 0.2 * 0.5, rtol=1e-12)
