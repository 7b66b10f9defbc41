# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled element kernels; same signatures and layouts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

BACKEND = "cython"



cdef inline double _pull(const double[:, :] x, const double[:, :, :] dN, int q,
                         double[:, :] gN) noexcept nogil:
    cdef double g00 = 0.0, g01 = 0.0, g10 = 0.0, g11 = 0.0, det, i00, i01, i10, i11
    cdef int a
    for a in range(6):
        g00 += x[a, 0] * dN[q, a, 0]
        g01 += x[a, 0] * dN[q, a, 1]
        g10 += x[a, 1] * dN[q, a, 0]
        g11 += x[a, 1] * dN[q, a, 1]
    det = g00 * g11 - g01 * g10
    i00 = g11 / det
    i01 = -g01 / det
    i10 = -g10 / det
    i11 = g00 / det
    for a in range(6):
        gN[a, 0] = dN[q, a, 0] * i00 + dN[q, a, 1] * i10
        gN[a, 1] = dN[q, a, 0] * i01 + dN[q, a, 1] * i11
    return det


cdef double _fluid_res_elem(const double[:, :] x, const double[:, :] ue, const double[:, :] we,
                            const double[:] pe, double rho, double mu,
                            const double[:, :] N, const double[:, :, :] dN, const double[:, :] L,
                            const double[:] w, double[:, :] gN,
                            double[:] r, double[:] Mu, double[:] Bu) noexcept nogil:
    cdef int nq = w.shape[0], q, a, k, b
    cdef double det, dx, detmin = 1e300
    cdef double u0, u1, o0, o1, G00, G01, G10, G11, divw, divu, p, c0, c1, f0, f1, s00, s01, s11
    for a in range(12):
        r[a] = 0.0
        Mu[a] = 0.0
    for b in range(3):
        Bu[b] = 0.0
    for q in range(nq):
        det = _pull(x, dN, q, gN)
        if det < detmin:
            detmin = det
        dx = det * w[q]
        u0 = u1 = o0 = o1 = G00 = G01 = G10 = G11 = divw = 0.0
        for a in range(6):
            u0 += N[q, a] * ue[a, 0]
            u1 += N[q, a] * ue[a, 1]
            o0 += N[q, a] * we[a, 0]
            o1 += N[q, a] * we[a, 1]
            G00 += ue[a, 0] * gN[a, 0]
            G01 += ue[a, 0] * gN[a, 1]
            G10 += ue[a, 1] * gN[a, 0]
            G11 += ue[a, 1] * gN[a, 1]
            divw += we[a, 0] * gN[a, 0] + we[a, 1] * gN[a, 1]
        p = 0.0
        for b in range(3):
            p += L[q, b] * pe[b]
        divu = G00 + G11
        c0 = u0 - o0
        c1 = u1 - o1
        f0 = rho * (c0 * G00 + c1 * G01 + (0.5 * divu - divw) * u0)
        f1 = rho * (c0 * G10 + c1 * G11 + (0.5 * divu - divw) * u1)
        s00 = 2.0 * mu * G00 - p
        s11 = 2.0 * mu * G11 - p
        s01 = mu * (G01 + G10)
        for a in range(6):
            r[2 * a] += dx * (s00 * gN[a, 0] + s01 * gN[a, 1] + N[q, a] * f0)
            r[2 * a + 1] += dx * (s01 * gN[a, 0] + s11 * gN[a, 1] + N[q, a] * f1)
            Mu[2 * a] += dx * rho * N[q, a] * u0
            Mu[2 * a + 1] += dx * rho * N[q, a] * u1
        for b in range(3):
            Bu[b] -= dx * L[q, b] * divu
    return detmin


def fluid_residual(xe, Xe, ue, we, pe, double rho, double mu, N, dN, L, w):
    cdef double[:, :, :] x = np.ascontiguousarray(np.asarray(xe, dtype=float) + Xe)
    cdef const double[:, :, :] u = np.ascontiguousarray(ue, dtype=float)
    cdef const double[:, :, :] om = np.ascontiguousarray(we, dtype=float)
    cdef const double[:, :] pp = np.ascontiguousarray(pe, dtype=float)
    cdef const double[:, :] NN = np.ascontiguousarray(N, dtype=float)
    cdef const double[:, :, :] dNN = np.ascontiguousarray(dN, dtype=float)
    cdef const double[:, :] LL = np.ascontiguousarray(L, dtype=float)
    cdef const double[:] ww = np.ascontiguousarray(w, dtype=float)
    cdef Py_ssize_t ne = x.shape[0], e
    r = np.zeros((ne, 12))
    Mu = np.zeros((ne, 12))
    Bu = np.zeros((ne, 3))
    dmin = np.zeros(ne)
    cdef double[:, :] rv = r, Muv = Mu, Buv = Bu
    cdef double[:] dv = dmin
    cdef double[:, :] gN = np.zeros((6, 2))
    with nogil:
        for e in range(ne):
            dv[e] = _fluid_res_elem(x[e], u[e], om[e], pp[e], rho, mu, NN, dNN, LL, ww, gN,
                                    rv[e], Muv[e], Buv[e])
    return r, Mu, Bu, dmin


def fluid_shape_fd(xe, Xe, ue, we, pe, double rho, double mu, N, dN, L, w, double h):
    cdef const double[:, :, :] x0 = np.ascontiguousarray(np.asarray(xe, dtype=float) + Xe)
    cdef const double[:, :, :] u = np.ascontiguousarray(ue, dtype=float)
    cdef const double[:, :, :] om = np.ascontiguousarray(we, dtype=float)
    cdef const double[:, :] pp = np.ascontiguousarray(pe, dtype=float)
    cdef const double[:, :] NN = np.ascontiguousarray(N, dtype=float)
    cdef const double[:, :, :] dNN = np.ascontiguousarray(dN, dtype=float)
    cdef const double[:, :] LL = np.ascontiguousarray(L, dtype=float)
    cdef const double[:] ww = np.ascontiguousarray(w, dtype=float)
    cdef Py_ssize_t ne = x0.shape[0], e
    dR = np.zeros((ne, 12, 12))
    dMu = np.zeros((ne, 12, 12))
    dBu = np.zeros((ne, 3, 12))
    cdef double[:, :, :] dRv = dR, dMv = dMu, dBv = dBu
    cdef double[:, :] x = np.zeros((6, 2)), gN = np.zeros((6, 2))
    cdef double[:] rp = np.zeros(12), rm = np.zeros(12), mp = np.zeros(12), mm = np.zeros(12)
    cdef double[:] bp = np.zeros(3), bm = np.zeros(3)
    cdef int j, a, k, i
    cdef double inv = 0.5 / h
    with nogil:
        for e in range(ne):
            for a in range(6):
                x[a, 0] = x0[e, a, 0]
                x[a, 1] = x0[e, a, 1]
            for j in range(12):
                a = j // 2
                k = j % 2
                x[a, k] = x0[e, a, k] + h
                _fluid_res_elem(x, u[e], om[e], pp[e], rho, mu, NN, dNN, LL, ww, gN, rp, mp, bp)
                x[a, k] = x0[e, a, k] - h
                _fluid_res_elem(x, u[e], om[e], pp[e], rho, mu, NN, dNN, LL, ww, gN, rm, mm, bm)
                x[a, k] = x0[e, a, k]
                for i in range(12):
                    dRv[e, i, j] = (rp[i] - rm[i]) * inv
                    dMv[e, i, j] = (mp[i] - mm[i]) * inv
                for i in range(3):
                    dBv[e, i, j] = (bp[i] - bm[i]) * inv
    return dR, dMu, dBu


def fluid_jacobian(xe, Xe, ue, we, pe, double rho, double mu, N, dN, L, w):
    cdef const double[:, :, :] x = np.ascontiguousarray(np.asarray(xe, dtype=float) + Xe)
    cdef const double[:, :, :] u = np.ascontiguousarray(ue, dtype=float)
    cdef const double[:, :, :] om = np.ascontiguousarray(we, dtype=float)
    cdef const double[:, :] pp = np.ascontiguousarray(pe, dtype=float)
    cdef const double[:, :] NN = np.ascontiguousarray(N, dtype=float)
    cdef const double[:, :, :] dNN = np.ascontiguousarray(dN, dtype=float)
    cdef const double[:, :] LL = np.ascontiguousarray(L, dtype=float)
    cdef const double[:] ww = np.ascontiguousarray(w, dtype=float)
    cdef Py_ssize_t ne = x.shape[0], e
    r = np.zeros((ne, 12))
    Kuu = np.zeros((ne, 12, 12))
    Kup = np.zeros((ne, 12, 3))
    Kuw = np.zeros((ne, 12, 12))
    M = np.zeros((ne, 12, 12))
    dmin = np.full(ne, 1e300)
    cdef double[:, :] rv = r
    cdef double[:, :, :] Kv = Kuu, Pv = Kup, Wv = Kuw, Mv = M
    cdef double[:] dv = dmin
    cdef double[:, :] gN = np.zeros((6, 2))
    cdef double G[2][2]
    cdef double uq[2]
    cdef double cg[6]
    cdef int nq = ww.shape[0], q, a, b, k, m, l
    cdef double det, dx, divw, divu, p, c0, c1, o0, o1, f0, f1, s00, s01, s11, d, nab, gab, sab
    with nogil:
        for e in range(ne):
            for q in range(nq):
                det = _pull(x[e], dNN, q, gN)
                if det < dv[e]:
                    dv[e] = det
                dx = det * ww[q]
                uq[0] = uq[1] = o0 = o1 = divw = 0.0
                G[0][0] = G[0][1] = G[1][0] = G[1][1] = 0.0
                for a in range(6):
                    uq[0] += NN[q, a] * u[e, a, 0]
                    uq[1] += NN[q, a] * u[e, a, 1]
                    o0 += NN[q, a] * om[e, a, 0]
                    o1 += NN[q, a] * om[e, a, 1]
                    for k in range(2):
                        for l in range(2):
                            G[k][l] += u[e, a, k] * gN[a, l]
                    divw += om[e, a, 0] * gN[a, 0] + om[e, a, 1] * gN[a, 1]
                p = 0.0
                for b in range(3):
                    p += LL[q, b] * pp[e, b]
                divu = G[0][0] + G[1][1]
                c0 = uq[0] - o0
                c1 = uq[1] - o1
                d = 0.5 * divu - divw
                f0 = rho * (c0 * G[0][0] + c1 * G[0][1] + d * uq[0])
                f1 = rho * (c0 * G[1][0] + c1 * G[1][1] + d * uq[1])
                s00 = 2.0 * mu * G[0][0] - p
                s11 = 2.0 * mu * G[1][1] - p
                s01 = mu * (G[0][1] + G[1][0])
                for b in range(6):
                    cg[b] = c0 * gN[b, 0] + c1 * gN[b, 1]
                for a in range(6):
                    rv[e, 2 * a] += dx * (s00 * gN[a, 0] + s01 * gN[a, 1] + NN[q, a] * f0)
                    rv[e, 2 * a + 1] += dx * (s01 * gN[a, 0] + s11 * gN[a, 1] + NN[q, a] * f1)
                    for b in range(3):
                        Pv[e, 2 * a, b] -= dx * LL[q, b] * gN[a, 0]
                        Pv[e, 2 * a + 1, b] -= dx * LL[q, b] * gN[a, 1]
                    for b in range(6):
                        nab = NN[q, a] * NN[q, b]
                        gab = gN[a, 0] * gN[b, 0] + gN[a, 1] * gN[b, 1]
                        sab = dx * (mu * gab + rho * NN[q, a] * cg[b] + rho * d * nab)
                        Mv[e, 2 * a, 2 * b] += dx * rho * nab
                        Mv[e, 2 * a + 1, 2 * b + 1] += dx * rho * nab
                        for k in range(2):
                            Kv[e, 2 * a + k, 2 * b + k] += sab
                            for m in range(2):
                                Kv[e, 2 * a + k, 2 * b + m] += dx * (
                                    mu * gN[b, k] * gN[a, m] + rho * nab * G[k][m]
                                    + 0.5 * rho * NN[q, a] * gN[b, m] * uq[k])
                                Wv[e, 2 * a + k, 2 * b + m] -= dx * rho * (
                                    nab * G[k][m] + NN[q, a] * uq[k] * gN[b, m])
    return r, Kuu, Kup, Kuw, M, Kup.transpose(0, 2, 1).copy(), dmin


cdef void _solid_point(const double[:, :] de, double[:, :] gN, double lam, double mu, bint svk,
                       double F[2][2], double S[2][2], double *W) noexcept nogil:
    cdef double H[2][2]
    cdef double E[2][2]
    cdef double tr
    cdef int a, k, l, j
    H[0][0] = H[0][1] = H[1][0] = H[1][1] = 0.0
    for a in range(6):
        for k in range(2):
            for l in range(2):
                H[k][l] += de[a, k] * gN[a, l]
    for k in range(2):
        for l in range(2):
            if svk:
                F[k][l] = H[k][l] + (1.0 if k == l else 0.0)
            else:
                F[k][l] = 1.0 if k == l else 0.0
    for k in range(2):
        for l in range(2):
            if svk:
                E[k][l] = 0.0
                for j in range(2):
                    E[k][l] += F[j][k] * F[j][l]
                E[k][l] = 0.5 * (E[k][l] - (1.0 if k == l else 0.0))
            else:
                E[k][l] = 0.5 * (H[k][l] + H[l][k])
    tr = E[0][0] + E[1][1]
    for k in range(2):
        for l in range(2):
            S[k][l] = 2.0 * mu * E[k][l] + (lam * tr if k == l else 0.0)
    W[0] = mu * (E[0][0] * E[0][0] + E[0][1] * E[0][1] + E[1][0] * E[1][0] + E[1][1] * E[1][1]) \
        + 0.5 * lam * tr * tr


def solid_residual(xe, de, double lam, double mu, svk, dN, w):
    r, _, W = _solid(xe, de, lam, mu, bool(svk), dN, w, False)
    return r, W


def solid_jacobian(xe, de, double lam, double mu, svk, dN, w):
    return _solid(xe, de, lam, mu, bool(svk), dN, w, True)


cdef _solid(xe, de, double lam, double mu, bint svk, dN, w, bint jac):
    cdef const double[:, :, :] x = np.ascontiguousarray(xe, dtype=float)
    cdef const double[:, :, :] d = np.ascontiguousarray(de, dtype=float)
    cdef const double[:, :, :] dNN = np.ascontiguousarray(dN, dtype=float)
    cdef const double[:] ww = np.ascontiguousarray(w, dtype=float)
    cdef Py_ssize_t ne = x.shape[0], e
    r = np.zeros((ne, 12))
    K = np.zeros((ne if jac else 0, 12, 12))
    W = np.zeros(ne)
    cdef double[:, :] rv = r
    cdef double[:, :, :] Kv = K
    cdef double[:] Wv = W
    cdef double[:, :] gN = np.zeros((6, 2))
    cdef double[:, :, :, :] Es = np.zeros((6, 2, 2, 2))
    cdef double F[2][2]
    cdef double S[2][2]
    cdef double P[2][2]
    cdef double Wq, det, dx, tra, trb, ee, geo
    cdef int nq = ww.shape[0], q, a, b, k, m, i, j, l
    with nogil:
        for e in range(ne):
            for q in range(nq):
                det = _pull(x[e], dNN, q, gN)
                dx = det * ww[q]
                _solid_point(d[e], gN, lam, mu, svk, F, S, &Wq)
                Wv[e] += dx * Wq
                for k in range(2):
                    for l in range(2):
                        P[k][l] = F[k][0] * S[0][l] + F[k][1] * S[1][l]
                for a in range(6):
                    for k in range(2):
                        rv[e, 2 * a + k] += dx * (P[k][0] * gN[a, 0] + P[k][1] * gN[a, 1])
                if not jac:
                    continue
                for a in range(6):
                    for k in range(2):
                        for i in range(2):
                            for j in range(2):
                                Es[a, k, i, j] = 0.5 * (F[k][i] * gN[a, j] + F[k][j] * gN[a, i])
                for a in range(6):
                    for b in range(6):
                        geo = 0.0
                        if svk:
                            for j in range(2):
                                for l in range(2):
                                    geo += gN[a, j] * S[j][l] * gN[b, l]
                        for k in range(2):
                            tra = Es[a, k, 0, 0] + Es[a, k, 1, 1]
                            for m in range(2):
                                trb = Es[b, m, 0, 0] + Es[b, m, 1, 1]
                                ee = 0.0
                                for i in range(2):
                                    for j in range(2):
                                        ee += Es[a, k, i, j] * Es[b, m, i, j]
                                Kv[e, 2 * a + k, 2 * b + m] += dx * (2.0 * mu * ee + lam * tra * trb)
                            Kv[e, 2 * a + k, 2 * b + k] += dx * geo
    return r, K, W


def dissipation(xe, Xe, ue, double mu, dN, w):
    cdef const double[:, :, :] x = np.ascontiguousarray(np.asarray(xe, dtype=float) + Xe)
    cdef const double[:, :, :] u = np.ascontiguousarray(ue, dtype=float)
    cdef const double[:, :, :] dNN = np.ascontiguousarray(dN, dtype=float)
    cdef const double[:] ww = np.ascontiguousarray(w, dtype=float)
    cdef Py_ssize_t ne = x.shape[0], e
    out = np.zeros(ne)
    cdef double[:] ov = out
    cdef double[:, :] gN = np.zeros((6, 2))
    cdef double G00, G01, G10, G11, det, s
    cdef int nq = ww.shape[0], q, a
    with nogil:
        for e in range(ne):
            for q in range(nq):
                det = _pull(x[e], dNN, q, gN)
                G00 = G01 = G10 = G11 = 0.0
                for a in range(6):
                    G00 += u[e, a, 0] * gN[a, 0]
                    G01 += u[e, a, 0] * gN[a, 1]
                    G10 += u[e, a, 1] * gN[a, 0]
                    G11 += u[e, a, 1] * gN[a, 1]
                s = 0.5 * (G01 + G10)
                ov[e] += 2.0 * mu * det * ww[q] * (G00 * G00 + G11 * G11 + 2.0 * s * s)
    return out
