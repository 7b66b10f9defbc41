import numpy as np
import pytest

from irkfsi.basis import (BasisBuilder, BasisFileError, SnapshotSet, load_basis, pod, read_basis_header,
                          reduced_inf_sup, save_basis)
from irkfsi.irk import radau_iia
from irkfsi.solver import advance_step


@pytest.fixture(scope="module")
def run(tiny_problem):
    st = tiny_problem.zero_state()
    snaps = SnapshotSet(tiny_problem.mesh.hash())
    states = []
    for _ in range(4):
        st = advance_step(tiny_problem, st, radau_iia(2), 0.05)
        snaps.add_step(tiny_problem, st)
        states.append(st)
    return snaps, states


@pytest.fixture(scope="module")
def builder(tiny_problem):
    return BasisBuilder(tiny_problem)


def test_pod_recovers_low_rank_data(rng):
    G = np.diag(rng.uniform(0.5, 2.0, 30))
    Q = np.linalg.qr(rng.standard_normal((30, 3)))[0]
    S = Q @ np.diag([10.0, 1.0, 0.1]) @ rng.standard_normal((3, 12))
    res = pod(S, G, 1e-12)
    assert res.retained == 3
    np.testing.assert_allclose(res.modes.T @ G @ res.modes, np.eye(3), atol=1e-12)
    # projection in the G norm reproduces every snapshot
    P = res.modes @ (res.modes.T @ G @ S)
    assert np.abs(P - S).max() < 1e-10 * np.abs(S).max()


def test_pod_truncation_rule(rng):
    G = np.eye(20)
    Q = np.linalg.qr(rng.standard_normal((20, 4)))[0]
    sig = np.array([1.0, 0.3, 0.1, 0.01])
    S = Q * sig
    energy = sig ** 2 / np.sum(sig ** 2)
    tail = 1.0 - np.cumsum(energy)
    for tol, expect in ((0.5, 1), (tail[0] * 1.01, 1), (tail[0] * 0.99, 2), (tail[1] * 1.01, 2),
                        (tail[2] * 1.01, 3), (tail[2] * 0.99, 4), (0.0, 4)):
        res = pod(S, G, tol)
        assert res.retained == expect
        assert res.discarded <= tol + 1e-15


def test_pod_sign_convention(rng):
    S = rng.standard_normal((10, 4))
    a, b = pod(S, np.eye(10), 0.0), pod(-S, np.eye(10), 0.0)
    np.testing.assert_allclose(a.modes, b.modes, atol=1e-12)
    for j in range(a.modes.shape[1]):
        assert a.modes[np.argmax(np.abs(a.modes[:, j])), j] > 0


def test_pod_rejects_bad_input():
    with pytest.raises(ValueError):
        pod(np.zeros((5, 0)), np.eye(5), 1e-3)
    with pytest.raises(ValueError):
        pod(np.zeros((5, 2)), np.eye(5), 1e-3)
    with pytest.raises(ValueError):
        pod(np.ones((5, 2)), np.eye(5), 1.0)


def test_snapshots_skip_held_steps_and_respect_window(tiny_problem, run):
    snaps, states = run
    assert len(snaps) == 2 * len(states)
    w = SnapshotSet(snaps.mesh_hash)
    for st in states:
        w.add_step(tiny_problem, st, window=(0.11, 0.16))
    assert len(w) == 2 and w.times[-1] == pytest.approx(0.15)
    stride = SnapshotSet(snaps.mesh_hash, stride=2)
    for st in states:
        stride.add_step(tiny_problem, st)
    assert len(stride) == 4
    held = states[0].copy()
    held.info["hold"] = True
    stride.add_step(tiny_problem, held)
    assert len(stride) == 4
    with pytest.raises(ValueError):
        SnapshotSet("x").matrices()


def test_snapshot_file_round_trip(run, tmp_path):
    snaps, _ = run
    snaps.save(tmp_path / "s.npz")
    back = SnapshotSet.load(tmp_path / "s.npz")
    for a, b in zip(snaps.matrices(), back.matrices()):
        np.testing.assert_array_equal(a, b)
    with pytest.raises(BasisFileError):
        back.extend(SnapshotSet("other"))


def test_basis_structure(tiny_problem, builder, run):
    snaps, _ = run
    b = builder.build(snaps, 1e-6)
    fp, spt = tiny_problem.spaces.fluid, tiny_problem.spaces.solid
    Hf = builder.inner["H1_fluid"].matrix
    np.testing.assert_allclose(b.Z_f.T @ Hf @ b.Z_f, np.eye(b.n_u), atol=1e-10)
    Gi = builder.inner["L2_interface"].matrix
    np.testing.assert_allclose(b.psi.T @ Gi @ b.psi, np.eye(b.m), atol=1e-10)
    # port extensions carry the interface modes; bubbles vanish on the interface
    assert np.abs(b.E_f[fp.gamma] - b.psi).max() < 1e-12
    assert np.abs(b.E_s[spt.gamma] - b.psi).max() < 1e-12
    assert np.abs(b.Z_f[fp.gamma]).max() == 0.0 and np.abs(b.Z_s[spt.gamma]).max() == 0.0
    assert np.abs(b.Z_f[fp.dirichlet]).max() < 1e-12
    assert b.n_u == b.n_u0 + b.n_p


def test_supremizers_improve_inf_sup(builder, tiny_problem, run):
    snaps, _ = run
    with_sup = builder.build(snaps, 1e-6, supremizers=True)
    without = builder.build(snaps, 1e-6, supremizers=False)
    assert reduced_inf_sup(tiny_problem, with_sup) > reduced_inf_sup(tiny_problem, without)
    assert reduced_inf_sup(tiny_problem, with_sup) > 1e-2


def test_mode_counts_grow_as_tolerance_tightens(builder, run):
    snaps, _ = run
    counts = [builder.build(snaps, tol).report() for tol in (1e-2, 1e-4, 1e-8)]
    for key in ("m", "n_u0", "n_p", "n_s"):
        vals = [c[key] for c in counts]
        assert vals == sorted(vals), key


def test_basis_file_round_trip_is_bitwise(builder, run, tmp_path):
    snaps, _ = run
    b = builder.build(snaps, 1e-5)
    path = tmp_path / "b.rb"
    save_basis(b, path)
    back = load_basis(path, snaps.mesh_hash)
    for name in ("psi", "E_f", "E_s", "Z_f", "Z_s", "Z_p", "u_dir"):
        assert getattr(back, name).tobytes() == getattr(b, name).tobytes()
    assert back.report() == b.report() and back.kinds == b.kinds
    save_basis(back, tmp_path / "c.rb")
    assert (tmp_path / "c.rb").read_bytes() == path.read_bytes()
    assert read_basis_header(path)["m"] == b.m


def test_basis_file_errors(builder, run, tmp_path):
    snaps, _ = run
    path = tmp_path / "b.rb"
    save_basis(builder.build(snaps, 1e-3), path)
    with pytest.raises(BasisFileError, match="different mesh"):
        load_basis(path, "0" * 64)
    raw = bytearray(path.read_bytes())
    raw[-40] ^= 1
    (tmp_path / "bad.rb").write_bytes(bytes(raw))
    with pytest.raises(BasisFileError, match="checksum"):
        load_basis(tmp_path / "bad.rb")
    (tmp_path / "short.rb").write_bytes(bytes(raw[:50]))
    with pytest.raises(BasisFileError, match="truncated"):
        load_basis(tmp_path / "short.rb")
    (tmp_path / "junk.rb").write_bytes(b"x" * 400)
    with pytest.raises(BasisFileError, match="not a reduced basis"):
        load_basis(tmp_path / "junk.rb")
