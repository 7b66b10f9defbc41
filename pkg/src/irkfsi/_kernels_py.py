"""NumPy element kernels (reference implementation and import fallback).

Arrays are batched over elements. Element vectors use the interleaved
local layout ``2 * node + component`` (12 entries for a P2 vector field).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _pullback(x: np.ndarray, dN: np.ndarray):
    G = np.einsum("eak,qal->eqkl", x, dN)
    det = G[..., 0, 0] * G[..., 1, 1] - G[..., 0, 1] * G[..., 1, 0]
    inv = np.empty_like(G)
    inv[..., 0, 0] = G[..., 1, 1]
    inv[..., 1, 1] = G[..., 0, 0]
    inv[..., 0, 1] = -G[..., 0, 1]
    inv[..., 1, 0] = -G[..., 1, 0]
    inv /= det[..., None, None]
    return det, np.einsum("qal,eqlk->eqak", dN, inv)


def _fluid_fields(x, ue, we, pe, N, dN, L, w):
    det, gN = _pullback(x, dN)
    dx = det * w
    u = np.einsum("qa,eak->eqk", N, ue)
    Gu = np.einsum("eak,eqal->eqkl", ue, gN)
    om = np.einsum("qa,eak->eqk", N, we)
    divw = np.einsum("eak,eqak->eq", we, gN)
    p = pe @ L.T
    return det, gN, dx, u, Gu, om, divw, p


def fluid_residual(xe, Xe, ue, we, pe, rho, mu, N, dN, L, w):
    """Element residuals (ne, 12), mass action M u (ne, 12) and B u (ne, 3)."""
    det, gN, dx, u, Gu, om, divw, p = _fluid_fields(xe + Xe, ue, we, pe, N, dN, L, w)
    divu = Gu[..., 0, 0] + Gu[..., 1, 1]
    c = u - om
    sig = mu * (Gu + Gu.transpose(0, 1, 3, 2))
    sig[..., 0, 0] -= p
    sig[..., 1, 1] -= p
    f = rho * (np.einsum("eql,eqkl->eqk", c, Gu) + (0.5 * divu - divw)[..., None] * u)
    r = np.einsum("eq,eqkl,eqal->eak", dx, sig, gN) + np.einsum("eq,qa,eqk->eak", dx, N, f)
    Mu = rho * np.einsum("eq,qa,eqk->eak", dx, N, u)
    Bu = -np.einsum("eq,qb,eq->eb", dx, L, divu)
    ne = len(xe)
    return r.reshape(ne, 12), Mu.reshape(ne, 12), Bu, det.min(axis=1)


def fluid_jacobian(xe, Xe, ue, we, pe, rho, mu, N, dN, L, w):
    """Residual plus element blocks.

    Returns r, Kuu, Kup, Kuw, M, B, detmin with Kuu/Kuw/M of shape
    (ne, 12, 12), Kup (ne, 12, 3) and B (ne, 3, 12).
    """
    det, gN, dx, u, Gu, om, divw, p = _fluid_fields(xe + Xe, ue, we, pe, N, dN, L, w)
    ne = len(xe)
    divu = Gu[..., 0, 0] + Gu[..., 1, 1]
    c = u - om
    sig = mu * (Gu + Gu.transpose(0, 1, 3, 2))
    sig[..., 0, 0] -= p
    sig[..., 1, 1] -= p
    f = rho * (np.einsum("eql,eqkl->eqk", c, Gu) + (0.5 * divu - divw)[..., None] * u)
    r = np.einsum("eq,eqkl,eqal->eak", dx, sig, gN) + np.einsum("eq,qa,eqk->eak", dx, N, f)

    NN = np.einsum("qa,qb->qab", N, N)
    cg = np.einsum("eql,eqbl->eqb", c, gN)
    diag = (mu * np.einsum("eqal,eqbl->eqab", gN, gN)
            + rho * np.einsum("qa,eqb->eqab", N, cg)
            + rho * (0.5 * divu - divw)[..., None, None] * NN)
    S = np.einsum("eq,eqab->eab", dx, diag)
    T = (mu * np.einsum("eq,eqbk,eqam->eakbm", dx, gN, gN)
         + rho * np.einsum("eq,qab,eqkm->eakbm", dx, NN, Gu)
         + 0.5 * rho * np.einsum("eq,qa,eqbm,eqk->eakbm", dx, N, gN, u))
    eye = np.eye(2)
    Kuu = T + S[:, :, None, :, None] * eye[None, None, :, None, :]
    Kup = -np.einsum("eq,qb,eqak->eakb", dx, L, gN)
    Kuw = -rho * (np.einsum("eq,qab,eqkm->eakbm", dx, NN, Gu)
                  + np.einsum("eq,qa,eqk,eqbm->eakbm", dx, N, u, gN))
    m = rho * np.einsum("eq,qab->eab", dx, NN)
    M = m[:, :, None, :, None] * eye[None, None, :, None, :]
    Kup = Kup.reshape(ne, 12, 3)
    return (r.reshape(ne, 12), Kuu.reshape(ne, 12, 12), Kup, Kuw.reshape(ne, 12, 12),
            M.reshape(ne, 12, 12), Kup.transpose(0, 2, 1).copy(), det.min(axis=1))


def fluid_shape_fd(xe, Xe, ue, we, pe, rho, mu, N, dN, L, w, h):
    """Central differences of (r, M u, B u) w.r.t. the 12 element geometry DOFs.

    Returns dR (ne, 12, 12), dMu (ne, 12, 12), dBu (ne, 3, 12); column j
    is the derivative along geometry DOF j = 2 * node + component.
    """
    ne = len(xe)
    pert = np.zeros((12, 6, 2))
    pert.reshape(12, 12)[np.arange(12), np.arange(12)] = h
    Xs = np.concatenate([Xe[None] + pert[:, None], Xe[None] - pert[:, None]]).reshape(-1, 6, 2)
    rep = lambda a: np.broadcast_to(a, (24,) + a.shape).reshape((-1,) + a.shape[1:])
    r, Mu, Bu, _ = fluid_residual(rep(xe), Xs, rep(ue), rep(we), rep(pe), rho, mu, N, dN, L, w)
    r, Mu, Bu = (a.reshape(2, 12, ne, -1) for a in (r, Mu, Bu))
    inv = 0.5 / h
    d = lambda a: ((a[0] - a[1]) * inv).transpose(1, 2, 0)
    return d(r), d(Mu), d(Bu)


def _solid_fields(xe, de, dN):
    det, gN = _pullback(xe, dN)
    H = np.einsum("eak,eqal->eqkl", de, gN)
    return det, gN, H


def _stress(H, lam, mu, svk):
    eye = np.eye(2)
    if svk:
        F = eye + H
        E = 0.5 * (np.einsum("eqki,eqkj->eqij", F, F) - eye)
    else:
        F = np.broadcast_to(eye, H.shape)
        E = 0.5 * (H + H.transpose(0, 1, 3, 2))
    trE = E[..., 0, 0] + E[..., 1, 1]
    S = 2 * mu * E + lam * trE[..., None, None] * eye
    W = mu * np.einsum("eqij,eqij->eq", E, E) + 0.5 * lam * trE ** 2
    return F, E, S, W


def solid_residual(xe, de, lam, mu, svk, dN, w):
    """Element residuals (ne, 12) and stored energies (ne,)."""
    det, gN, H = _solid_fields(xe, de, dN)
    dx = det * w
    F, E, S, W = _stress(H, lam, mu, svk)
    P = np.einsum("eqkj,eqjl->eqkl", F, S) if svk else S
    r = np.einsum("eq,eqkl,eqal->eak", dx, P, gN)
    return r.reshape(len(xe), 12), np.einsum("eq,eq->e", dx, W)


def solid_jacobian(xe, de, lam, mu, svk, dN, w):
    """Residual (ne, 12), tangent (ne, 12, 12) and energy (ne,)."""
    det, gN, H = _solid_fields(xe, de, dN)
    dx = det * w
    F, E, S, W = _stress(H, lam, mu, svk)
    P = np.einsum("eqkj,eqjl->eqkl", F, S) if svk else S
    r = np.einsum("eq,eqkl,eqal->eak", dx, P, gN)
    ne = len(xe)
    # Q[a,k]_{jl} = F_kj gN[a,l]; its symmetric part is δE along φ_{a,k}
    Q = np.einsum("eqkj,eqal->eqakjl", F, gN)
    Es = 0.5 * (Q + Q.swapaxes(-1, -2))
    tr = Es[..., 0, 0] + Es[..., 1, 1]
    K = (2 * mu * np.einsum("eq,eqakij,eqbmij->eakbm", dx, Es, Es)
         + lam * np.einsum("eq,eqak,eqbm->eakbm", dx, tr, tr))
    if svk:
        geo = np.einsum("eq,eqaj,eqjl,eqbl->eab", dx, gN, S, gN)
        K = K + geo[:, :, None, :, None] * np.eye(2)[None, None, :, None, :]
    return r.reshape(ne, 12), K.reshape(ne, 12, 12), np.einsum("eq,eq->e", dx, W)


def dissipation(xe, Xe, ue, mu, dN, w):
    """Per-element 2μ ∫ ε(u):ε(u) on the deformed configuration."""
    det, gN = _pullback(xe + Xe, dN)
    Gu = np.einsum("eak,eqal->eqkl", ue, gN)
    eps = 0.5 * (Gu + Gu.transpose(0, 1, 3, 2))
    return 2 * mu * np.einsum("eq,q,eqij,eqij->e", det, w, eps, eps)
