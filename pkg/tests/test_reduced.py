import numpy as np
import pytest

from irkfsi.basis import BasisBuilder, SnapshotSet
from irkfsi.irk import radau_iia
from irkfsi.postproc import relative_error_h1l2
from irkfsi.reduced import ReducedSolver
from irkfsi.solver import advance_step


@pytest.fixture(scope="module")
def training(tiny_problem):
    st = tiny_problem.zero_state()
    snaps = SnapshotSet(tiny_problem.mesh.hash())
    states = []
    for _ in range(4):
        st = advance_step(tiny_problem, st, radau_iia(2), 0.05)
        snaps.add_step(tiny_problem, st)
        states.append(st)
    return snaps, states


def _run(solver, state, n, **kw):
    out = []
    for _ in range(n):
        state = solver.advance(state, 0.05, **kw)
        out.append(state)
    return out


def test_complete_basis_reproduces_training_run(tiny_problem, training):
    """When the trial space contains the trajectory, the full-order solution solves the reduced system."""
    snaps, hf = training
    basis = BasisBuilder(tiny_problem).build(snaps, 0.0)
    rom = _run(ReducedSolver(tiny_problem, basis, radau_iia(2)), tiny_problem.zero_state(), 4)
    for a, b in zip(rom, hf):
        for name in ("u", "p", "d", "v", "X"):
            ref = np.abs(getattr(b, name)).max()
            assert np.abs(getattr(a, name) - getattr(b, name)).max() < 1e-7 * ref, name


def test_kinematic_continuity_in_reduced_space(tiny_problem, training):
    snaps, _ = training
    basis = BasisBuilder(tiny_problem).build(snaps, 1e-3)
    st = _run(ReducedSolver(tiny_problem, basis, radau_iia(2)), tiny_problem.zero_state(), 2)[-1]
    fg, sg = tiny_problem.spaces.fluid.gamma, tiny_problem.spaces.solid.gamma
    assert np.abs(st.stages.U[:, fg] - st.stages.Us[:, sg]).max() < 1e-12


def test_condensed_and_dense_reduced_newton_agree(tiny_problem, training):
    snaps, hf = training
    basis = BasisBuilder(tiny_problem).build(snaps, 1e-4)
    rs = ReducedSolver(tiny_problem, basis, radau_iia(2))
    parts, F, J = rs.linear_system(hf[1], 0.05)
    a, b = rs.solve_direction(parts, J, F), rs.solve_direction(parts, J, F, dense=True)
    assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)


def test_projection_is_idempotent(tiny_problem, training):
    snaps, hf = training
    rs = ReducedSolver(tiny_problem, BasisBuilder(tiny_problem).build(snaps, 1e-3), radau_iia(2))
    once = rs.project(hf[-1])
    twice = rs.project(once)
    for name in ("u", "p", "d", "v"):
        np.testing.assert_allclose(getattr(twice, name), getattr(once, name), atol=1e-12)


def test_error_decreases_with_richer_basis(tiny_problem, training):
    snaps, hf = training
    errs = []
    for tol in (1e-2, 1e-6):
        rs = ReducedSolver(tiny_problem, BasisBuilder(tiny_problem).build(snaps, tol), radau_iia(2))
        errs.append(relative_error_h1l2(rs.inner, hf, _run(rs, tiny_problem.zero_state(), 4)))
    assert errs[1] < errs[0]


def test_mesh_mismatch_rejected(tiny_problem, beam_problem, training):
    snaps, _ = training
    basis = BasisBuilder(tiny_problem).build(snaps, 1e-3)
    with pytest.raises(ValueError, match="different mesh"):
        ReducedSolver(beam_problem, basis, radau_iia(2))
