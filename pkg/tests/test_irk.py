from fractions import Fraction

import numpy as np
import pytest

from irkfsi.irk import (NewmarkParams, bdf2_newmark_coefficients, differentiate, fluid_stage_residual,
                        integrate, irk_coefficients, irk_linear_step, newmark_oscillator, newmark_update,
                        oscillator_energy_error, radau_iia, solid_stage_residual, stability_function, stack,
                        unstack)


def test_implicit_euler():
    t = radau_iia(1)
    assert t.A.tolist() == [[1.0]] and t.b.tolist() == [1.0] and t.c.tolist() == [1.0]


def test_two_stage_values():
    t = radau_iia(2)
    # collocation integrals at c = (1/3, 1), worked in exact rationals
    A = [[Fraction(5, 12), Fraction(-1, 12)], [Fraction(3, 4), Fraction(1, 4)]]
    assert np.allclose(t.c, [1 / 3, 1], atol=1e-15)
    assert np.abs(t.A - np.array(A, dtype=float)).max() < 1e-15
    assert np.abs(t.b - [0.75, 0.25]).max() < 1e-15


def test_three_stage_nodes():
    c = radau_iia(3).c
    r6 = np.sqrt(6.0)
    assert np.abs(c - [(4 - r6) / 10, (4 + r6) / 10, 1.0]).max() < 1e-15


@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_stiff_accuracy_and_invertible(s):
    t = radau_iia(s)
    assert np.abs(t.A[-1] - t.b).max() < 1e-14 and t.c[-1] == 1.0
    assert abs(np.linalg.det(t.A)) > 1e-6


def test_unsupported_stage_count():
    with pytest.raises(ValueError):
        radau_iia(5)


def test_stacking_round_trip(rng):
    X = rng.standard_normal((3, 7))
    assert np.array_equal(unstack(stack(X), 3), X)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_differentiation(s, rng):
    t = radau_iia(s)
    d0 = rng.standard_normal(4)
    assert not differentiate(t, 0.1, np.tile(d0, (s, 1)), d0).any()
    D = d0 + rng.standard_normal((s, 4))
    assert np.abs(integrate(t, 0.1, differentiate(t, 0.1, D, d0), d0) - D).max() < 1e-12


def test_differentiation_implicit_euler(rng):
    d0, d1 = rng.standard_normal((2, 5))
    assert np.allclose(differentiate(radau_iia(1), 0.2, d1[None], d0)[0], (d1 - d0) / 0.2, atol=1e-14)


def test_differentiation_quadratic_exact():
    t, dt, tn = radau_iia(2), 0.3, 1.7
    ts = tn + t.c * dt
    U = differentiate(t, dt, (ts ** 2)[:, None], np.array([tn ** 2]))
    assert np.abs(U[:, 0] - 2 * ts).max() < 1e-12


@pytest.mark.parametrize("s", [1, 2, 3])
def test_scalar_stage_solve_matches_stability_function(s):
    t = radau_iia(s)
    for z in (-0.3, -5.0, 2.0):
        y1 = irk_linear_step(t, np.array([[z]]), np.array([1.0]), 1.0)[0]
        assert abs(y1 - stability_function(t, z)) < 1e-12


def test_fluid_stage_residual_backward_euler(rng):
    t = radau_iia(1)
    M = np.diag(rng.random(3) + 1)
    u0, u1, r = rng.standard_normal((3, 3))
    res = fluid_stage_residual(0, (M @ u1)[None], M @ u0, r[None], t, 0.1)
    assert np.allclose(res, M @ u1 - M @ u0 + 0.1 * r)
    z = np.zeros((2, 3))
    assert not fluid_stage_residual(1, z, np.zeros(3), z, radau_iia(2), 0.1).any()


def test_solid_stage_residual_backward_euler(rng):
    t = radau_iia(1)
    M = np.diag(rng.random(3) + 1)
    d0, d1, v0, r = rng.standard_normal((4, 3))
    res = solid_stage_residual(0, d1[None], d0, v0, M, r[None], t, 0.1)
    assert np.allclose(res, M @ ((d1 - d0) / 0.1 - v0) + 0.1 * r)
    # static equilibrium: held displacement, zero velocity and spatial residual
    z = np.zeros((2, 3))
    assert not solid_stage_residual(0, np.tile(d0, (2, 1)), d0, np.zeros(3), M, z, radau_iia(2), 0.1).any()


@pytest.mark.parametrize("s", [1, 2, 3])
def test_oscillator_energy_order(s):
    t = radau_iia(s)
    n0 = {1: 256, 2: 32, 3: 16}[s]      # inside the asymptotic range
    errs = [oscillator_energy_error(t, 1.0, 2 * np.pi / n) for n in (n0, 2 * n0, 4 * n0)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert rates.min() >= 2 * s - 1 - 0.1


def test_trapezoidal_newmark_conserves_energy():
    E = newmark_oscillator(NewmarkParams(0.25, 0.5), 2.0, 0.1, 1000)
    assert np.abs(E - E[0]).max() < 1e-10 * E[0]


def test_damped_newmark_decays():
    # energy oscillates within a period; its per-period peaks decay monotonically
    E = newmark_oscillator(NewmarkParams(1 / 3, 0.6), 2.0, np.pi / 32, 32 * 20)
    peaks = E[:-1].reshape(20, 32).max(axis=1)
    assert np.all(np.diff(peaks) < 0) and E[-1] < 0.5 * E[0]


def test_unconditional_stability_check():
    with pytest.raises(ValueError):
        NewmarkParams(0.2, 0.5, require_unconditional_stability=True)
    NewmarkParams(1 / 3, 0.6, require_unconditional_stability=True)


def test_newmark_coefficients_match_update(rng):
    p = NewmarkParams(1 / 3, 0.6)
    d, v, a, d1, Mu = rng.standard_normal((5, 4))
    co = bdf2_newmark_coefficients(p, 0.05, d, v, a, Mu, None)
    v1, a1 = newmark_update(p, 0.05, d, v, a, d1)
    assert np.allclose(co.V[0, 0] * d1 + co.vel_const[0], v1)
    # solid inertia term M (C d + S0) with C d + S0 = Δt a_new (single stage, a_11 = 1)
    assert np.allclose(co.C[0, 0] * d1 + co.solid_const[0], 0.05 * a1)
    assert co.mass_coef[0] == 1.0 and np.array_equal(co.fluid_const, -Mu)
    co2 = bdf2_newmark_coefficients(p, 0.05, d, v, a, Mu, 2 * Mu)
    assert co2.mass_coef[0] == 1.5 and np.allclose(co2.fluid_const, -2 * Mu + Mu)


def test_irk_coefficients_velocity(rng):
    t = radau_iia(2)
    d0, v0, Mu = rng.standard_normal((3, 4))
    co = irk_coefficients(t, 0.1, d0, v0, Mu)
    D = rng.standard_normal((2, 4))
    assert np.allclose(co.V @ D + co.vel_const, differentiate(t, 0.1, D, d0))
