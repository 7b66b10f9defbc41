"""Reduced stage solver over the bubble-port basis.

Fields are rebuilt from reduced coordinates at every Newton iterate and
the full-order residuals are projected onto the basis (no hyper-reduction).
The port coordinates β drive the interface: the solid trace is ψβ, the
fluid interface velocity is ψ applied to the time-differentiated β, and
the mesh moves with the pseudo-elastic extension of ψβ.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .basis import ReducedBasis
from .irk import ButcherTableau, StepCoefficients
from .problem import CoupledState, FSIProblem, StageRecord
from .solver import (IRKScheme, NewtonFailure, SingularBlockError, SolverSettings, StageEvaluation,
                     condensed_solve)
from .spaces import assemble_inner_product
from .ale import build_extension

log = logging.getLogger(__name__)


@dataclass
class ReducedCoordinates:
    beta: np.ndarray     # (s, m)
    af: np.ndarray       # (s, n_u)
    ap: np.ndarray       # (s, n_p)
    a_s: np.ndarray      # (s, n_s)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.beta.ravel(), self.af.ravel(), self.ap.ravel(), self.a_s.ravel()])

    def copy(self):
        return ReducedCoordinates(self.beta.copy(), self.af.copy(), self.ap.copy(), self.a_s.copy())


def _dense_lu_solver(M: np.ndarray, block: str):
    if M.shape[0] == 0:
        return lambda b: np.zeros((0,) + np.shape(b)[1:])
    lu = sla.lu_factor(M)
    if np.min(np.abs(np.diag(lu[0]))) <= 1e-300:
        raise SingularBlockError(f"singular reduced {block} block", worst_block=block)
    return lambda b: sla.lu_solve(lu, b)


class ReducedSolver:
    def __init__(self, problem: FSIProblem, basis: ReducedBasis, tableau: ButcherTableau,
                 settings: SolverSettings = SolverSettings()):
        if basis.mesh_hash != problem.mesh.hash():
            raise ValueError("basis was built on a different mesh")
        self.problem, self.basis, self.settings = problem, basis, settings
        self.scheme = IRKScheme(tableau)
        self.tableau = tableau
        sp_ = problem.spaces
        self.fg, self.sg = sp_.fluid.gamma, sp_.solid.gamma
        self.Xpsi = problem.ale.extend(basis.psi)
        self.H_f = build_extension("harmonic_fluid", sp_)
        self.H_s = build_extension("harmonic_solid", sp_)
        self._inner = None
        self.last_history: list[float] = []

    @property
    def inner(self):
        if self._inner is None:
            self._inner = {k: assemble_inner_product(k, self.problem.spaces) for k in self.basis.kinds}
        return self._inner

    # -- reconstruction
    def _const_parts(self, co: StepCoefficients):
        v0 = co.vel_const[:, self.sg]
        return self.H_f.extend(v0.T).T, v0 @ self.problem.ale.matrix.T

    def fields(self, q: ReducedCoordinates, co: StepCoefficients, times, consts=None):
        b = self.basis
        Hv0, Wv0 = consts if consts is not None else self._const_parts(co)
        c = self.problem.fluid.params.c_dir(times)
        Vb = co.V @ q.beta
        U = np.outer(c, b.u_dir) + q.af @ b.Z_f.T + Vb @ b.E_f.T + Hv0
        P = q.ap @ b.Z_p.T
        D = q.a_s @ b.Z_s.T + q.beta @ b.E_s.T
        X = q.beta @ self.Xpsi.T
        W = Vb @ self.Xpsi.T + Wv0
        return U, P, D, X, W

    # -- projections
    def _test_matrix(self, co: StepCoefficients):
        """Ψ and Φ as dense matrices on the stacked full fields [U; P; D]."""
        b, pb = self.basis, self.problem
        s = co.s
        nu, np_, ns = pb.fluid.nu, pb.fluid.np_, pb.solid.ns
        m, n_u, n_p, n_s = b.m, b.n_u, b.n_p, b.n_s
        nfull = s * (nu + np_ + ns)
        oB, oF = 0, s * m
        oP, oS = oF + s * n_u, oF + s * (n_u + n_p)
        nred = oS + s * n_s
        Phi = np.zeros((nfull, nred))
        Psi = np.zeros((nred, nfull))
        fU, fP, fD = 0, s * nu, s * (nu + np_)
        for i in range(s):
            u, p, d = slice(fU + i * nu, fU + (i + 1) * nu), slice(fP + i * np_, fP + (i + 1) * np_), \
                slice(fD + i * ns, fD + (i + 1) * ns)
            for k in range(s):
                Phi[u, oB + k * m:oB + (k + 1) * m] = co.V[i, k] * b.E_f
            Phi[u, oF + i * n_u:oF + (i + 1) * n_u] = b.Z_f
            Phi[p, oP + i * n_p:oP + (i + 1) * n_p] = b.Z_p
            Phi[d, oS + i * n_s:oS + (i + 1) * n_s] = b.Z_s
            Phi[d, oB + i * m:oB + (i + 1) * m] = b.E_s
            Psi[oB + i * m:oB + (i + 1) * m, u] = b.E_f.T
            Psi[oB + i * m:oB + (i + 1) * m, d] = b.E_s.T
            Psi[oF + i * n_u:oF + (i + 1) * n_u, u] = b.Z_f.T
            Psi[oP + i * n_p:oP + (i + 1) * n_p, p] = b.Z_p.T
            Psi[oS + i * n_s:oS + (i + 1) * n_s, d] = b.Z_s.T
        blocks = dict(port=np.arange(oB, oF), fluid=np.arange(oF, oS), solid=np.arange(oS, nred),
                      pressure=np.arange(oP, oS))
        return Psi, Phi, blocks

    def _partition(self, blocks):
        if self.problem.enclosed:
            port = np.concatenate([blocks["port"], blocks["pressure"]])
            fluid = np.setdiff1d(blocks["fluid"], blocks["pressure"])
        else:
            port, fluid = blocks["port"], blocks["fluid"]
        return port, fluid, blocks["solid"]

    def reduced_residual(self, ev: StageEvaluation, Psi) -> np.ndarray:
        Rf, Div, Rs = ev.residuals()
        return Psi @ np.concatenate([Rf.ravel(), Div.ravel(), Rs.ravel()])

    def reduced_jacobian(self, ev: StageEvaluation, Psi, Phi, m_cols: int) -> np.ndarray:
        J = Psi @ (ev.jacobian_fields() @ Phi)
        J[:, :m_cols] += Psi @ ev.jacobian_control()
        return J

    def _unflat(self, z, s):
        b = self.basis
        m, n_u, n_p, n_s = b.m, b.n_u, b.n_p, b.n_s
        o = np.cumsum([0, s * m, s * n_u, s * n_p, s * n_s])
        return ReducedCoordinates(z[o[0]:o[1]].reshape(s, m), z[o[1]:o[2]].reshape(s, n_u),
                                  z[o[2]:o[3]].reshape(s, n_p), z[o[3]:o[4]].reshape(s, n_s))

    # -- state handling
    def project(self, state: CoupledState) -> CoupledState:
        """Best approximation of a full-order state in the reduced space."""
        b, pb = self.basis, self.problem
        Gg = self.inner["L2_interface"].matrix
        Hf, Hs = self.inner["H1_fluid"].matrix, self.inner["H1_solid"].matrix
        Mp = self.inner["L2_pressure"].matrix
        c = float(pb.fluid.params.c_dir(state.t))

        def port(x):
            return b.psi.T @ (Gg @ x)

        beta = port(state.d[self.sg])
        a_s = b.Z_s.T @ (Hs @ (state.d - self.H_s.extend(state.d[self.sg])))
        bv = port(state.u[self.fg])
        af = b.Z_f.T @ (Hf @ (state.u - c * b.u_dir - self.H_f.extend(state.u[self.fg])))
        ap = b.Z_p.T @ (Mp @ state.p)
        bsv = port(state.v[self.sg])
        asv = b.Z_s.T @ (Hs @ (state.v - self.H_s.extend(state.v[self.sg])))
        u = c * b.u_dir + b.Z_f @ af + b.E_f @ bv
        d = b.Z_s @ a_s + b.E_s @ beta
        v = b.Z_s @ asv + b.E_s @ bsv
        p = b.Z_p @ ap
        X = self.Xpsi @ beta
        M, _ = pb.fluid.mass_divergence(X)
        out = CoupledState(state.t, u, p, d, v, X, M @ u)
        out.info["reduced"] = ReducedCoordinates(beta[None], af[None], ap[None], a_s[None])
        return out

    def linear_system(self, state: CoupledState, dt: float):
        co = self.scheme.coefficients(state, dt)
        q = self._initial(state, co)
        times = state.t + co.c * dt
        consts = self._const_parts(co)
        Psi, Phi, blocks = self._test_matrix(co)
        ev = StageEvaluation(self.problem, co, *self.fields(q, co, times, consts), ext=self.Xpsi)
        F = self.reduced_residual(ev, Psi)
        J = self.reduced_jacobian(ev, Psi, Phi, co.s * self.basis.m)
        return self._partition(blocks), F, J

    def _initial(self, state, co) -> ReducedCoordinates:
        s = co.s
        q0 = state.info.get("reduced")
        if q0 is None:
            q0 = self.project(state).info["reduced"]
        return ReducedCoordinates(*(np.repeat(x[-1:], s, axis=0) for x in
                                    (q0.beta, q0.af, q0.ap, q0.a_s)))

    def solve_direction(self, parts, J, F, dense: bool = False) -> np.ndarray:
        if dense:
            return np.linalg.solve(J, -F)
        pr, fr, sr = parts
        dg, dw, dd = condensed_solve(J[np.ix_(pr, pr)], J[np.ix_(pr, fr)], J[np.ix_(pr, sr)],
                                     J[np.ix_(fr, pr)], J[np.ix_(sr, pr)],
                                     _dense_lu_solver(J[np.ix_(fr, fr)], "fluid"),
                                     _dense_lu_solver(J[np.ix_(sr, sr)], "solid"), F[pr], F[fr], F[sr])
        delta = np.empty(len(F))
        delta[pr], delta[fr], delta[sr] = dg, dw, dd
        return delta

    def advance(self, state: CoupledState, dt: float, dense: bool = False) -> CoupledState:
        pb, st = self.problem, self.settings
        co = self.scheme.coefficients(state, dt)
        s = co.s
        times = state.t + co.c * dt
        consts = self._const_parts(co)
        Psi, Phi, blocks = self._test_matrix(co)
        parts = self._partition(blocks)
        q = self._initial(state, co)
        mcols = s * self.basis.m

        def evaluate(q):
            ev = StageEvaluation(pb, co, *self.fields(q, co, times, consts), ext=self.Xpsi)
            return ev, self.reduced_residual(ev, Psi)

        ev, F = evaluate(q)
        history = [float(np.linalg.norm(F))]
        atol = st.atol * np.sqrt(len(F))
        k = 0
        while history[-1] > max(atol, st.rtol * history[0]):
            if k >= st.max_iter:
                raise NewtonFailure(f"reduced Newton did not converge at t={state.t + dt:.6g}", history, "port")
            delta = self.solve_direction(parts, self.reduced_jacobian(ev, Psi, Phi, mcols), F, dense)
            z = q.flat() + delta
            q = self._unflat(z, s)
            ev, F = evaluate(q)
            history.append(float(np.linalg.norm(F)))
            k += 1
        self.last_history = history
        log.info("reduced step t=%.6g iterations=%d residual=%.3e", state.t + dt, k, history[-1])
        U, P, D, X, W = ev.U, ev.P, ev.D, ev.X, ev.W
        Us = co.V @ D + co.vel_const
        G = q.beta @ self.basis.psi.T
        rec = StageRecord(times, U.copy(), P.copy(), D.copy(), Us, G, X.copy())
        new = CoupledState(state.t + dt, U[-1].copy(), P[-1].copy(), D[-1].copy(), Us[-1].copy(), X[-1].copy(),
                           ev.Mu[-1].copy(), Mu_prev=state.Mu.copy(), body_residual=ev.time_term_residual()[-1],
                           stages=rec, info={"iterations": k, "residual": history[-1], "history": history,
                                             "reduced": q, "hold": False})
        return new


def rom_advance_step(solver: ReducedSolver, state: CoupledState, dt: float) -> CoupledState:
    return solver.advance(state, dt)
