from math import factorial

import numpy as np
import pytest

from irkfsi.quadrature import MAX_DEGREE, gauss_line, quadrature_rule


def monomial(a, b):
    # ∫ x^a y^b over the reference triangle
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def test_degree_one_is_centroid():
    p, w = quadrature_rule(1)
    assert p.shape == (1, 2) and w[0] == 0.5


@pytest.mark.parametrize("degree", range(MAX_DEGREE + 1))
def test_exactness(degree):
    p, w = quadrature_rule(degree)
    assert abs(w.sum() - 0.5) < 1e-15
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            q = w @ (p[:, 0] ** a * p[:, 1] ** b)
            assert abs(q - monomial(a, b)) < 1e-14


def test_x_squared():
    p, w = quadrature_rule(4)
    assert abs(w @ p[:, 0] ** 2 - 1.0 / 12.0) < 1e-15


@pytest.mark.parametrize("bad", [-1, MAX_DEGREE + 1, 2.5])
def test_unsupported(bad):
    with pytest.raises(ValueError):
        quadrature_rule(bad)


def test_gauss_line():
    x, w = gauss_line(3)
    assert abs(w @ x ** 5 - 1.0 / 6.0) < 1e-15
