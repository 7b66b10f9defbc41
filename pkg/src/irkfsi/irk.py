"""Radau IIA tableaux, stage algebra and the BDF2 + Newmark baseline coefficients.

Stage quantities are stacked along the first axis: an array of shape
``(s, n)`` holds one length-``n`` vector per stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np


@dataclass(frozen=True)
class ButcherTableau:
    s: int
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""

    @property
    def Ainv(self) -> np.ndarray:
        return np.linalg.inv(self.A)

    @property
    def order(self) -> int:
        return 2 * self.s - 1


def _poly_mul(p, q):
    out = [mpmath.mpf(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def _poly_int(p, x):
    # p in ascending powers
    return sum(a * x ** (k + 1) / (k + 1) for k, a in enumerate(p))


@lru_cache(maxsize=None)
def radau_iia(s: int) -> ButcherTableau:
    """Radau IIA collocation tableau with ``s`` stages (order 2s - 1)."""
    if s not in (1, 2, 3, 4):
        raise ValueError(f"unsupported stage count {s!r} (1..4)")
    with mpmath.workdps(50):
        # nodes: zeros of d^{s-1}/dx^{s-1} [x^{s-1} (x-1)^s]
        poly = [mpmath.mpf(0)] * (s - 1) + [mpmath.binomial(s, k) * (-1) ** (s - k) for k in range(s + 1)]
        for _ in range(s - 1):
            poly = [k * poly[k] for k in range(1, len(poly))]
        if len(poly) == 2:
            roots = [-poly[0] / poly[1]]
        else:
            roots = mpmath.polyroots(poly[::-1], maxsteps=200, extraprec=200)
        c = sorted(mpmath.re(r) for r in roots)
        A = mpmath.matrix(s, s)
        b = [mpmath.mpf(0)] * s
        for j in range(s):
            lj = [mpmath.mpf(1)]
            for m in range(s):
                if m != j:
                    lj = _poly_mul(lj, [-c[m] / (c[j] - c[m]), 1 / (c[j] - c[m])])
            for i in range(s):
                A[i, j] = _poly_int(lj, c[i])
            b[j] = _poly_int(lj, mpmath.mpf(1))
        Af = np.array([[float(A[i, j]) for j in range(s)] for i in range(s)])
        return ButcherTableau(s, Af, np.array([float(v) for v in b]), np.array([float(v) for v in c]),
                              name=f"radau_iia_{s}")


def stability_function(tab: ButcherTableau, z: complex) -> complex:
    """R(z) = 1 + z bᵀ (I − zA)⁻¹ 1."""
    s = tab.s
    x = np.linalg.solve(np.eye(s) - z * tab.A, np.ones(s, dtype=complex if np.iscomplexobj(z) else float))
    return 1.0 + z * (tab.b @ x)


# ---------------------------------------------------------------- stage algebra

def stack(stages: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(stages).reshape(-1)


def unstack(v: np.ndarray, s: int) -> np.ndarray:
    return np.asarray(v).reshape(s, -1)


def differentiation_matrix(tab: ButcherTableau, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """(V, w) with stage velocities U = V D − w ⊗ d_prev."""
    Ainv = tab.Ainv
    return Ainv / dt, Ainv.sum(axis=1) / dt


def differentiate(tab: ButcherTableau, dt: float, D: np.ndarray, d_prev: np.ndarray) -> np.ndarray:
    """Stage velocities (1/Δt) A⁻¹ (D − 1 ⊗ dⁿ) for stage values ``D`` (s, ...)."""
    return np.tensordot(tab.Ainv, np.asarray(D) - np.asarray(d_prev)[None], axes=1) / dt


def integrate(tab: ButcherTableau, dt: float, U: np.ndarray, d_prev: np.ndarray) -> np.ndarray:
    """Inverse of :func:`differentiate`: D = 1 ⊗ dⁿ + Δt A U."""
    return np.asarray(d_prev)[None] + dt * np.tensordot(tab.A, np.asarray(U), axes=1)


def fluid_stage_residual(i: int, mass_stages: np.ndarray, mass_prev: np.ndarray,
                         spatial: np.ndarray, tab: ButcherTableau, dt: float) -> np.ndarray:
    """M_i u_i − Mⁿ uⁿ + Δt Σ_j a_ij R'_j with ``mass_stages[j] = M_j u_j``."""
    return mass_stages[i] - mass_prev + dt * (tab.A[i] @ spatial)


def solid_stage_residual(i: int, D: np.ndarray, d_prev: np.ndarray, v_prev: np.ndarray, M,
                         spatial: np.ndarray, tab: ButcherTableau, dt: float) -> np.ndarray:
    """M (u_i − uⁿ) + Δt Σ_j a_ij R'_j with u_i from the differentiation operator."""
    U = differentiate(tab, dt, D, d_prev)
    return M @ (U[i] - v_prev) + dt * (tab.A[i] @ spatial)


# ---------------------------------------------------------------- step coefficients

@dataclass(frozen=True)
class NewmarkParams:
    beta: float = 0.25
    gamma: float = 0.5
    bdf2: bool = True
    require_unconditional_stability: bool = False

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0:
            raise ValueError("Newmark parameters must be positive")
        if self.require_unconditional_stability and not (2 * self.beta >= self.gamma >= 0.5):
            raise ValueError("unconditional stability needs 2β ≥ γ ≥ 1/2")


@dataclass(frozen=True)
class StepCoefficients:
    """One time step written in the common stage form.

    Fluid stage i:  m_i M_i u_i + f0 + Δt Σ_j a_ij R'_j
    Solid stage i:  M_s (Σ_k C_ik d_k + S0_i) + Δt Σ_j a_ij R'_s,j
    Solid/interface velocity at stage i:  Σ_k V_ik d_k + V0_i
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    dt: float
    mass_coef: np.ndarray
    fluid_const: np.ndarray
    C: np.ndarray
    solid_const: np.ndarray
    V: np.ndarray
    vel_const: np.ndarray
    name: str

    @property
    def s(self) -> int:
        return len(self.c)


def irk_coefficients(tab: ButcherTableau, dt: float, d_prev: np.ndarray, v_prev: np.ndarray,
                     mass_u_prev: np.ndarray) -> StepCoefficients:
    V, w = differentiation_matrix(tab, dt)
    v0 = -np.outer(w, d_prev)
    return StepCoefficients(tab.A, tab.b, tab.c, dt, np.ones(tab.s), -np.asarray(mass_u_prev),
                            V, v0 - np.asarray(v_prev)[None], V, v0, tab.name)


def bdf2_newmark_coefficients(params: NewmarkParams, dt: float, d: np.ndarray, v: np.ndarray, a: np.ndarray,
                              mass_u_prev: np.ndarray, mass_u_prev2: np.ndarray | None) -> StepCoefficients:
    """BDF2 fluid (backward Euler when no second history value) with Newmark solid."""
    beta, gamma = params.beta, params.gamma
    d_pred = d + dt * v + dt * dt * (0.5 - beta) * a
    if mass_u_prev2 is None or not params.bdf2:
        mc, f0 = 1.0, -np.asarray(mass_u_prev)
    else:
        mc, f0 = 1.5, -2.0 * mass_u_prev + 0.5 * mass_u_prev2
    C = np.array([[1.0 / (beta * dt)]])
    V = np.array([[gamma / (beta * dt)]])
    v0 = v + dt * (1.0 - gamma) * a - gamma * d_pred / (beta * dt)
    one = np.ones(1)
    return StepCoefficients(one[:, None], one, one, dt, np.array([mc]), f0, C, (-d_pred / (beta * dt))[None],
                            V, v0[None], f"bdf2_newmark(beta={beta:g},gamma={gamma:g})")


def newmark_update(params: NewmarkParams, dt: float, d: np.ndarray, v: np.ndarray, a: np.ndarray,
                   d_new: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    beta, gamma = params.beta, params.gamma
    a_new = (d_new - d - dt * v - dt * dt * (0.5 - beta) * a) / (beta * dt * dt)
    v_new = v + dt * ((1.0 - gamma) * a + gamma * a_new)
    return v_new, a_new


# ---------------------------------------------------------------- linear ODE surrogates

def irk_linear_step(tab: ButcherTableau, J: np.ndarray, y: np.ndarray, dt: float,
                    g: np.ndarray | None = None) -> np.ndarray:
    """One step of y' = J y + g(t) with stage forcing values ``g`` (s, n)."""
    n = len(y)
    s = tab.s
    lhs = np.eye(s * n) - dt * np.kron(tab.A, J)
    rhs = np.tile(y, s)
    if g is not None:
        rhs = rhs + dt * (np.kron(tab.A, np.eye(n)) @ np.asarray(g).reshape(-1))
    Y = np.linalg.solve(lhs, rhs).reshape(s, n)
    return Y[-1]


def prothero_robinson(tab: ButcherTableau, lam: float, dt: float, t_end: float,
                      phi=np.sin, dphi=np.cos) -> float:
    """Max nodal error on [0, t_end] for y' = λ (y − φ) + φ', y(0) = φ(0)."""
    n = int(round(t_end / dt))
    y = np.array([phi(0.0)])
    J = np.array([[lam]])
    err = 0.0
    for k in range(n):
        ts = (k + tab.c) * dt
        g = (-lam * phi(ts) + dphi(ts))[:, None]
        y = irk_linear_step(tab, J, y, dt, g)
        err = max(err, float(abs(y[0] - phi((k + 1) * dt))))
    return err


def oscillator_energy_error(tab: ButcherTableau, omega: float, dt: float, periods: int = 1) -> float:
    """Relative energy drift of the undamped oscillator d'' = −ω² d after whole periods."""
    T = 2 * np.pi / omega * periods
    n = int(round(T / dt))
    J = np.array([[0.0, 1.0], [-omega ** 2, 0.0]])
    y = np.array([1.0, 0.0])
    e0 = 0.5 * (y[1] ** 2 + omega ** 2 * y[0] ** 2)
    for _ in range(n):
        y = irk_linear_step(tab, J, y, T / n)
    return abs(0.5 * (y[1] ** 2 + omega ** 2 * y[0] ** 2) - e0) / e0


def newmark_oscillator(params: NewmarkParams, omega: float, dt: float, n: int) -> np.ndarray:
    """Energies of the Newmark oscillator d'' = −ω² d over ``n`` steps (length n + 1)."""
    d, v = 1.0, 0.0
    a = -omega ** 2 * d
    beta, gamma = params.beta, params.gamma
    out = [0.5 * (v * v + omega ** 2 * d * d)]
    for _ in range(n):
        d_pred = d + dt * v + dt * dt * (0.5 - beta) * a
        a_new = -omega ** 2 * d_pred / (1.0 + omega ** 2 * beta * dt * dt)
        d_new = d_pred + beta * dt * dt * a_new
        v = v + dt * ((1 - gamma) * a + gamma * a_new)
        d, a = d_new, a_new
        out.append(0.5 * (v * v + omega ** 2 * d * d))
    return np.array(out)
