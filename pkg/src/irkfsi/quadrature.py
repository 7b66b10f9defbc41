"""Quadrature on the reference triangle {x >= 0, y >= 0, x + y <= 1}."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

MAX_DEGREE = 10


def _sym3(a: float, w: float) -> tuple[list, list]:
    b = 1.0 - 2.0 * a
    return [(a, a), (b, a), (a, b)], [w, w, w]


def _collapsed(degree: int) -> tuple[np.ndarray, np.ndarray]:
    n = degree // 2 + 1
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    xl, wl = roots_legendre(n)
    s = 0.5 * (xj + 1.0)
    ws = 0.25 * wj
    t = 0.5 * (xl + 1.0)
    wt = 0.5 * wl
    S, T = np.meshgrid(s, t, indexing="ij")
    W = np.outer(ws, wt)
    pts = np.column_stack([S.ravel(), (T * (1.0 - S)).ravel()])
    return pts, W.ravel()


@lru_cache(maxsize=None)
def _rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    if degree <= 1:
        return np.array([[1.0 / 3.0, 1.0 / 3.0]]), np.array([0.5])
    if degree == 2:
        p, w = _sym3(1.0 / 6.0, 1.0 / 6.0)
        return np.array(p), np.array(w)
    if degree == 5:
        r = np.sqrt(15.0)
        p1, w1 = _sym3((6.0 - r) / 21.0, (155.0 - r) / 2400.0)
        p2, w2 = _sym3((6.0 + r) / 21.0, (155.0 + r) / 2400.0)
        pts = [(1.0 / 3.0, 1.0 / 3.0)] + p1 + p2
        wts = [9.0 / 80.0] + w1 + w2
        return np.array(pts), np.array(wts)
    return _collapsed(degree)


def quadrature_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Points (n, 2) and weights (n,) exact for polynomials of total degree ``degree``."""
    if not isinstance(degree, (int, np.integer)) or degree < 0 or degree > MAX_DEGREE:
        raise ValueError(f"unsupported quadrature degree {degree!r} (0..{MAX_DEGREE})")
    p, w = _rule(int(degree))
    return p.copy(), w.copy()


def gauss_line(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [0, 1]."""
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w
