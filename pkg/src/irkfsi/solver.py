"""Monolithic stage solver with static condensation onto the interface.

Per time step the unknowns are the stage values of fluid velocity ``U``,
pressure ``P``, solid displacement ``D`` and the interface displacement
``G`` (the control). The interface velocity of the fluid and the mesh
motion are functions of ``G`` only, so kinematic continuity holds by
construction. Newton linear systems are solved by eliminating the fluid
and solid local unknowns and solving a Schur system in ``G``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fluid import MeshTanglingError
from .irk import (ButcherTableau, NewmarkParams, StepCoefficients, bdf2_newmark_coefficients,
                  irk_coefficients, newmark_update)
from .problem import CoupledState, FSIProblem, StageRecord

log = logging.getLogger(__name__)

ORACLE_LIMIT = 5000


@dataclass(frozen=True)
class SolverSettings:
    atol: float = 1e-10          # multiplied by sqrt(total unknowns)
    rtol: float = 1e-8
    max_iter: int = 25
    line_search: bool = False
    damping: float = 0.5
    max_backtracks: int = 8
    linear_solver: str = "condensed"   # or "dense"

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0 and self.max_iter > 0):
            raise ValueError("solver tolerances and iteration limit must be positive")
        if not 0 < self.damping < 1:
            raise ValueError("damping factor must lie in (0, 1)")
        if self.linear_solver not in ("condensed", "dense"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")


class NewtonFailure(RuntimeError):
    def __init__(self, message: str, history=(), worst_block: str = ""):
        super().__init__(message)
        self.history = list(history)
        self.worst_block = worst_block


class SingularBlockError(NewtonFailure):
    pass


# ---------------------------------------------------------------- time schemes

class IRKScheme:
    def __init__(self, tableau: ButcherTableau):
        self.tableau = tableau
        self.s = tableau.s
        self.name = tableau.name

    def coefficients(self, state: CoupledState, dt: float) -> StepCoefficients:
        return irk_coefficients(self.tableau, dt, state.d, state.v, state.Mu)

    def solid_update(self, state, coeffs, D, dt):
        return (coeffs.V @ D + coeffs.vel_const)[-1], None


class BDF2NewmarkScheme:
    s = 1

    def __init__(self, params: NewmarkParams = NewmarkParams()):
        self.params = params
        self.name = f"bdf2_newmark(beta={params.beta:g},gamma={params.gamma:g})"

    def coefficients(self, state: CoupledState, dt: float) -> StepCoefficients:
        a = state.a if state.a is not None else np.zeros_like(state.d)
        return bdf2_newmark_coefficients(self.params, dt, state.d, state.v, a, state.Mu, state.Mu_prev)

    def solid_update(self, state, coeffs, D, dt):
        a = state.a if state.a is not None else np.zeros_like(state.d)
        return newmark_update(self.params, dt, state.d, state.v, a, D[-1])


# ---------------------------------------------------------------- stage evaluation

class StageEvaluation:
    """Stage residuals and Jacobians at one iterate.

    ``ext`` maps control coordinates to ALE displacement: the mesh
    displacement at stage j is ``ext @ q_j`` (plus nothing) and the mesh
    velocity is ``ext @ (Σ_k V_jk q_k) + W0_j``. For the full-order solver
    the control is the interface trace; the reduced model passes the
    extension of its port modes.
    """

    def __init__(self, problem: FSIProblem, coeffs: StepCoefficients, U, P, D, X, W, ext=None):
        self.problem = problem
        self.co = coeffs
        self.U, self.P, self.D, self.X, self.W = U, P, D, X, W
        self.ext = ext
        s = coeffs.s
        fl, so = problem.fluid, problem.solid
        parts = [fl.residual_parts(U[j], P[j], X[j], W[j]) for j in range(s)]
        self.r = np.array([q[0] for q in parts])
        self.Mu = np.array([q[1] for q in parts])
        self.Bu = np.array([q[2] for q in parts])
        self.rs = np.array([so.residual(D[j]) for j in range(s)])
        self._lin = None

    # residuals (natural rows, no Dirichlet replacement)
    def residuals(self):
        co = self.co
        Rf = co.mass_coef[:, None] * self.Mu + co.fluid_const[None] + co.dt * (co.A @ self.r)
        Ms = self.problem.solid.M
        Rs = (Ms @ (co.C @ self.D + co.solid_const).T).T + co.dt * (co.A @ self.rs)
        return Rf, self.Bu.copy(), Rs

    def time_term_residual(self) -> np.ndarray:
        """Per-stage fluid momentum rate plus spatial residual (Rf = Δt A · this)."""
        Rf = self.residuals()[0]
        return np.linalg.solve(self.co.A, Rf) / self.co.dt

    def _linearize(self):
        if self._lin is None:
            s = self.co.s
            fl, so = self.problem.fluid, self.problem.solid
            shape = self.ext is not None
            flin = [fl.linearize(self.U[j], self.P[j], self.X[j], self.W[j], shape=shape) for j in range(s)]
            Ks = [so.linearize(self.D[j])[1] for j in range(s)]
            self._lin = SimpleNamespace(f=flin, Ks=Ks)
        return self._lin

    def jacobian_fields(self) -> sp.csr_matrix:
        """∂(Rf, Div, Rs)/∂(U, P, D) with all stages stacked."""
        lin = self._linearize()
        co = self.co
        s, A, dt = co.s, co.A, co.dt
        Ms = self.problem.solid.M
        blocks = [[None] * (3 * s) for _ in range(3 * s)]
        for i in range(s):
            for j in range(s):
                Kuu = dt * A[i, j] * lin.f[j].Kuu
                if i == j:
                    Kuu = Kuu + co.mass_coef[i] * lin.f[i].M
                blocks[i][j] = Kuu
                blocks[i][s + j] = dt * A[i, j] * lin.f[j].Kup
                blocks[2 * s + i][2 * s + j] = co.C[i, j] * Ms + dt * A[i, j] * lin.Ks[j]
            blocks[s + i][i] = lin.f[i].B
            blocks[s + i][s + i] = sp.csr_matrix((self.problem.fluid.np_, self.problem.fluid.np_))
        return sp.bmat(blocks, format="csr")

    def jacobian_control(self) -> np.ndarray:
        """Dense ∂(Rf, Div, Rs)/∂q through the mesh displacement and velocity."""
        lin = self._linearize()
        co = self.co
        s, A, dt, V = co.s, co.A, co.dt, co.V
        ext = self.ext
        nu, np_, ns = self.problem.fluid.nu, self.problem.fluid.np_, self.problem.solid.ns
        q = ext.shape[1]
        dMuE = [lin.f[j].dMu @ ext for j in range(s)]
        dRE = [lin.f[j].dR @ ext for j in range(s)]
        KwE = [lin.f[j].Kuw @ ext for j in range(s)]
        out = np.zeros((s * (nu + np_ + ns), s * q))
        for i in range(s):
            rows = slice(i * nu, (i + 1) * nu)
            for k in range(s):
                blk = dt * A[i, k] * dRE[k]
                if i == k:
                    blk = blk + co.mass_coef[i] * dMuE[i]
                for j in range(s):
                    blk = blk + (dt * A[i, j] * V[j, k]) * KwE[j]
                out[rows, k * q:(k + 1) * q] = blk
            out[s * nu + i * np_: s * nu + (i + 1) * np_, i * q:(i + 1) * q] = lin.f[i].dBu @ ext
        return out


# ---------------------------------------------------------------- expanded full-order system

class _Layout:
    """Index bookkeeping for the expanded full-order stage system.

    Columns: [G | U_free | P | D_free], rows: [port | Rf_free | Div | Rs_free],
    each stage-stacked. ``free`` means interior plus Dirichlet DOFs.
    """

    def __init__(self, problem: FSIProblem, coeffs: StepCoefficients):
        sp_ = problem.spaces
        fp, spt = sp_.fluid, sp_.solid
        s = coeffs.s
        nu, np_, ns, nc = fp.ndof, sp_.pressure.ndof, spt.ndof, fp.n_c
        self.s, self.nu, self.np_, self.ns, self.nc = s, nu, np_, ns, nc
        self.fg, self.sg = fp.gamma, spt.gamma
        self.ff = np.sort(np.concatenate([fp.inner, fp.dirichlet]))
        self.sf = np.sort(np.concatenate([spt.inner, spt.dirichlet]))
        self.fdir_pos = np.searchsorted(self.ff, fp.dirichlet)
        self.sdir_pos = np.searchsorted(self.sf, spt.dirichlet)
        self.fdir, self.sdir = fp.dirichlet, spt.dirichlet
        nff, nsf = len(self.ff), len(self.sf)
        self.nff, self.nsf = nff, nsf
        self.oG, self.oU = 0, s * nc
        self.oP = self.oU + s * nff
        self.oD = self.oP + s * np_
        self.n = self.oD + s * nsf
        # full-field column offsets: [U (s nu) | P (s np) | D (s ns)]
        fU, fP, fD = 0, s * nu, s * (nu + np_)
        nfull = s * (nu + np_ + ns)
        V = coeffs.V
        r, c, v = [], [], []
        for i in range(s):
            r.append(fU + i * nu + self.ff); c.append(self.oU + i * nff + np.arange(nff)); v.append(np.ones(nff))
            for k in range(s):
                if V[i, k] != 0.0:
                    r.append(fU + i * nu + self.fg); c.append(self.oG + k * nc + np.arange(nc))
                    v.append(np.full(nc, V[i, k]))
            r.append(fP + i * np_ + np.arange(np_)); c.append(self.oP + i * np_ + np.arange(np_)); v.append(np.ones(np_))
            r.append(fD + i * ns + self.sf); c.append(self.oD + i * nsf + np.arange(nsf)); v.append(np.ones(nsf))
            r.append(fD + i * ns + self.sg); c.append(self.oG + i * nc + np.arange(nc)); v.append(np.ones(nc))
        cat = np.concatenate
        self.T = sp.csr_matrix((cat(v), (cat(r), cat(c))), shape=(nfull, self.n))
        r, c = [], []
        for i in range(s):
            port = self.oG + i * nc + np.arange(nc)
            r += [port, port]; c += [fU + i * nu + self.fg, fD + i * ns + self.sg]
            r.append(self.oU + i * nff + np.arange(nff)); c.append(fU + i * nu + self.ff)
            r.append(self.oP + i * np_ + np.arange(np_)); c.append(fP + i * np_ + np.arange(np_))
            r.append(self.oD + i * nsf + np.arange(nsf)); c.append(fD + i * ns + self.sf)
        rr, cc = cat(r), cat(c)
        self.R = sp.csr_matrix((np.ones(len(rr)), (rr, cc)), shape=(self.n, nfull))
        self.dir_rows = cat([self.oU + i * nff + self.fdir_pos for i in range(s)] +
                            [self.oD + i * nsf + self.sdir_pos for i in range(s)]).astype(np.int64)
        gauge = np.array([self.oP + i * np_ for i in range(s)], dtype=np.int64) if problem.enclosed \
            else np.zeros(0, dtype=np.int64)
        self.gauge = gauge
        self.port = np.concatenate([np.arange(self.oG, self.oU), gauge])
        fl = np.arange(self.oU, self.oD)
        self.fluid = np.setdiff1d(fl, gauge)
        self.solid = np.arange(self.oD, self.n)

    def residual(self, ev: StageEvaluation, dir_data: np.ndarray) -> np.ndarray:
        Rf, Div, Rs = ev.residuals()
        F = self.R @ np.concatenate([Rf.ravel(), Div.ravel(), Rs.ravel()])
        s = self.s
        fvals = np.concatenate([ev.U[i, self.fdir] - dir_data[i] for i in range(s)])
        svals = np.concatenate([ev.D[i, self.sdir] for i in range(s)])
        F[self.dir_rows] = np.concatenate([fvals, svals])
        return F

    def jacobian(self, ev: StageEvaluation, control: bool = True):
        Jsp = (self.R @ ev.jacobian_fields() @ self.T).tocsr()
        Jd = self.R @ ev.jacobian_control() if control else np.zeros((self.n, self.s * self.nc))
        keep = np.ones(self.n)
        keep[self.dir_rows] = 0.0
        Jsp = (sp.diags(keep) @ Jsp).tocsr()
        Jsp = Jsp + sp.csr_matrix((np.ones(len(self.dir_rows)), (self.dir_rows, self.dir_rows)), shape=Jsp.shape)
        Jd[self.dir_rows] = 0.0
        return ExpandedJacobian(Jsp.tocsr(), Jd, self)

    def split_delta(self, delta):
        s = self.s
        dG = delta[self.oG:self.oU].reshape(s, self.nc)
        dU = delta[self.oU:self.oP].reshape(s, self.nff)
        dP = delta[self.oP:self.oD].reshape(s, self.np_)
        dD = delta[self.oD:].reshape(s, self.nsf)
        return dG, dU, dP, dD


@dataclass
class ExpandedJacobian:
    sparse: sp.csr_matrix       # all columns
    control: np.ndarray         # dense addition on the G columns
    layout: _Layout

    def dense(self) -> np.ndarray:
        J = self.sparse.toarray()
        J[:, :self.control.shape[1]] += self.control
        return J

    def port_columns(self, rows: np.ndarray) -> np.ndarray:
        L = self.layout
        out = self.sparse[rows][:, L.port].toarray()
        out[:, :self.control.shape[1]] += self.control[rows]
        return out


def solve_dense(J: ExpandedJacobian, F: np.ndarray) -> np.ndarray:
    if len(F) > ORACLE_LIMIT:
        raise ValueError(f"dense oracle limited to {ORACLE_LIMIT} unknowns, got {len(F)}")
    return np.linalg.solve(J.dense(), -F)


def _factor(M: sp.spmatrix, block: str):
    try:
        # symmetric-pattern ordering: the stage blocks have a structurally symmetric sparsity
        return spla.splu(M.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.01,
                         options=dict(SymmetricMode=True))
    except RuntimeError as exc:
        raise SingularBlockError(f"singular {block} block: {exc}", worst_block=block) from None


def condensed_solve(J_pp, J_pf, J_ps, J_fp, J_sp, solve_f, solve_s, F_p, F_f, F_s):
    """Three-phase Schur solve: local solves, interface system, back-substitution."""
    W_star, Jgf = -solve_f(F_f), -solve_f(J_fp)
    D_star, Jgs = -solve_s(F_s), -solve_s(J_sp)
    S = J_pp + J_pf @ Jgf + J_ps @ Jgs
    rhs = -F_p - J_pf @ W_star - J_ps @ D_star
    try:
        lu = sla.lu_factor(S, check_finite=True)
        if np.min(np.abs(np.diag(lu[0]))) == 0.0:
            raise sla.LinAlgError("zero pivot")
        dg = sla.lu_solve(lu, rhs)
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularBlockError(f"singular interface Schur system: {exc}", worst_block="schur") from None
    return dg, W_star + Jgf @ dg, D_star + Jgs @ dg


def _lu_solver(lu, n):
    def solve(b):
        b = np.asarray(b)
        if b.size == 0 or n == 0:
            return np.zeros((n,) + b.shape[1:])
        return lu.solve(b)
    return solve


def solve_condensed(J: ExpandedJacobian, F: np.ndarray) -> np.ndarray:
    L = J.layout
    Jsp = J.sparse
    pr, fr, sr = L.port, L.fluid, L.solid
    J_ff = Jsp[fr][:, fr]
    J_ss = Jsp[sr][:, sr]
    lu_f = _factor(J_ff, "fluid") if len(fr) else None
    lu_s = _factor(J_ss, "solid") if len(sr) else None
    Jp_rows = Jsp[pr]
    dg, dw, dd = condensed_solve(J.port_columns(pr), Jp_rows[:, fr], Jp_rows[:, sr],
                                 J.port_columns(fr), J.port_columns(sr),
                                 _lu_solver(lu_f, len(fr)), _lu_solver(lu_s, len(sr)),
                                 F[pr], F[fr], F[sr])
    delta = np.empty(L.n)
    delta[pr], delta[fr], delta[sr] = dg, dw, dd
    return delta


# ---------------------------------------------------------------- iterate

@dataclass
class _Iterate:
    U: np.ndarray
    P: np.ndarray
    D: np.ndarray
    G: np.ndarray
    X: np.ndarray = None
    W: np.ndarray = None

    def copy(self):
        return _Iterate(self.U.copy(), self.P.copy(), self.D.copy(), self.G.copy())


class CoupledSolver:
    """Advance a :class:`CoupledState` by one monolithic time step."""

    def __init__(self, problem: FSIProblem, scheme, settings: SolverSettings = SolverSettings()):
        self.problem = problem
        self.scheme = scheme
        self.settings = settings
        self.ext = problem.ale.matrix
        self.last_history: list[float] = []

    # -- iterate handling
    def _sync(self, it: _Iterate, co: StepCoefficients) -> _Iterate:
        sp_ = self.problem.spaces
        fg, sg = sp_.fluid.gamma, sp_.solid.gamma
        it.D[:, sg] = it.G
        it.U[:, fg] = co.V @ it.G + co.vel_const[:, sg]
        it.X = it.G @ self.ext.T
        it.W = it.U[:, fg] @ self.ext.T
        return it

    def _initial(self, state: CoupledState, co: StepCoefficients, dir_data) -> _Iterate:
        s = co.s
        sg = self.problem.spaces.solid.gamma
        it = _Iterate(np.tile(state.u, (s, 1)), np.tile(state.p, (s, 1)), np.tile(state.d, (s, 1)),
                      np.tile(state.d[sg], (s, 1)))
        it.U[:, self.problem.spaces.fluid.dirichlet] = dir_data
        return self._sync(it, co)

    def _evaluate(self, it: _Iterate, co, hold: bool = False) -> StageEvaluation:
        # a held structure needs no configuration sensitivities
        return StageEvaluation(self.problem, co, it.U, it.P, it.D, it.X, it.W, None if hold else self.ext)

    def _apply(self, it: _Iterate, L: _Layout, delta, co, scale=1.0, hold=False) -> _Iterate:
        new = it.copy()
        dG, dU, dP, dD = L.split_delta(delta)
        if not hold:
            new.G += scale * dG
            new.D[:, L.sf] += scale * dD
        new.U[:, L.ff] += scale * dU
        new.P += scale * dP
        return self._sync(new, co)

    def _block_norms(self, L: _Layout, F) -> dict:
        return {"port": float(np.linalg.norm(F[L.port])), "fluid": float(np.linalg.norm(F[L.fluid])),
                "solid": float(np.linalg.norm(F[L.solid]))}

    # -- linear algebra entry points (also used by tests)
    def linear_system(self, state: CoupledState, dt: float):
        """(layout, residual, Jacobian) at the warm-start iterate of the next step."""
        co = self.scheme.coefficients(state, dt)
        data = self._dir_data(state.t, co)
        it = self._initial(state, co, data)
        L = _Layout(self.problem, co)
        ev = self._evaluate(it, co)
        return L, L.residual(ev, data), L.jacobian(ev)

    def _dir_data(self, t, co):
        return np.array([self.problem.dirichlet_values(t + c * co.dt) for c in co.c])

    def _direction(self, J: ExpandedJacobian, F, hold: bool):
        L = J.layout
        if hold:
            fr = L.fluid
            lu = _factor(J.sparse[fr][:, fr], "fluid")
            delta = np.zeros(L.n)
            delta[fr] = -lu.solve(F[fr])
            return delta
        if self.settings.linear_solver == "dense":
            return solve_dense(J, F)
        return solve_condensed(J, F)

    def advance(self, state: CoupledState, dt: float) -> CoupledState:
        if dt <= 0:
            raise ValueError("time step must be positive")
        pb, st = self.problem, self.settings
        co = self.scheme.coefficients(state, dt)
        hold = state.t + dt <= pb.hold_until + 1e-12 * max(1.0, abs(pb.hold_until))
        if hold and pb.enclosed:
            raise ValueError("holding the structure requires an open fluid boundary")
        data = self._dir_data(state.t, co)
        L = _Layout(pb, co)
        it = self._initial(state, co, data)
        rows = L.fluid if hold else np.arange(L.n)
        atol = st.atol * np.sqrt(L.n)
        ev = self._evaluate(it, co, hold)
        F = L.residual(ev, data)
        history = [float(np.linalg.norm(F[rows]))]
        ref = history[0]
        k = 0
        while history[-1] > max(atol, st.rtol * ref):
            if k >= st.max_iter:
                norms = self._block_norms(L, F)
                worst = max(norms, key=norms.get)
                raise NewtonFailure(f"Newton did not converge at t={state.t + dt:.6g} after {k} iterations "
                                    f"(residual {history[-1]:.3e}, worst block {worst})", history, worst)
            delta = self._direction(L.jacobian(ev, control=not hold), F, hold)
            scale = 1.0
            for attempt in range(st.max_backtracks + 1):
                try:
                    trial = self._apply(it, L, delta, co, scale, hold)
                    ev_t = self._evaluate(trial, co, hold)
                    F_t = L.residual(ev_t, data)
                    norm_t = float(np.linalg.norm(F_t[rows]))
                except MeshTanglingError as exc:
                    if not st.line_search or attempt == st.max_backtracks:
                        raise NewtonFailure(f"mesh tangling after Newton update: {exc}", history, "port") from None
                    scale *= st.damping
                    continue
                if not st.line_search or norm_t < history[-1] or attempt == st.max_backtracks:
                    break
                scale *= st.damping
            it, ev, F = trial, ev_t, F_t
            history.append(norm_t)
            k += 1
        self.last_history = history
        log.info("step t=%.6g dt=%.4g scheme=%s iterations=%d residual=%.3e hold=%s",
                 state.t + dt, dt, self.scheme.name, k, history[-1], hold)
        return self._finish(state, co, ev, it, dt, k, history, hold)

    def _finish(self, state, co, ev: StageEvaluation, it: _Iterate, dt, iters, history, hold) -> CoupledState:
        if hold:
            v_new, a_new = state.v.copy(), (None if state.a is None else state.a.copy())
        else:
            v_new, a_new = self.scheme.solid_update(state, co, it.D, dt)
        Us = co.V @ it.D + co.vel_const
        rec = StageRecord(state.t + co.c * dt, it.U.copy(), it.P.copy(), it.D.copy(), Us, it.G.copy(), it.X.copy())
        new = CoupledState(t=state.t + dt, u=it.U[-1].copy(), p=it.P[-1].copy(), d=it.D[-1].copy(),
                           v=np.asarray(v_new).copy(), X=it.X[-1].copy(), Mu=ev.Mu[-1].copy(),
                           a=None if a_new is None else np.asarray(a_new).copy(), Mu_prev=state.Mu.copy(),
                           body_residual=ev.time_term_residual()[-1], stages=rec,
                           info={"iterations": iters, "residual": history[-1], "history": list(history),
                                 "hold": hold})
        return new


def bdf2_newmark_step(problem: FSIProblem, state: CoupledState, dt: float, params: NewmarkParams = NewmarkParams(),
                      settings: SolverSettings = SolverSettings()) -> CoupledState:
    return CoupledSolver(problem, BDF2NewmarkScheme(params), settings).advance(state, dt)


def advance_step(problem: FSIProblem, state: CoupledState, tableau: ButcherTableau, dt: float,
                 settings: SolverSettings = SolverSettings()) -> CoupledState:
    return CoupledSolver(problem, IRKScheme(tableau), settings).advance(state, dt)


def monolithic_oracle_step(problem: FSIProblem, state: CoupledState, tableau: ButcherTableau, dt: float,
                           settings: SolverSettings = SolverSettings()) -> CoupledState:
    if problem.ndof_total(tableau.s) > ORACLE_LIMIT:
        raise ValueError(f"dense oracle limited to {ORACLE_LIMIT} unknowns")
    dense = SolverSettings(settings.atol, settings.rtol, settings.max_iter, settings.line_search,
                           settings.damping, settings.max_backtracks, "dense")
    return CoupledSolver(problem, IRKScheme(tableau), dense).advance(state, dt)


def simulate(solver, state, dt: float, t_end: float, observer=None):
    """Step until ``t_end``; ``observer(state)`` is called after every accepted step."""
    n = int(round((t_end - state.t) / dt))
    for _ in range(n):
        state = solver.advance(state, dt)
        if observer is not None:
            observer(state)
    return state
