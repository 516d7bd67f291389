import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracmv.errors import EvaluationError
from fracmv.quadrature import (adaptive_simpson, gauss_even_weight,
                               gauss_legendre, integrate_ball_weighted)


def test_gauss_legendre_polynomial_exactness():
    rule = gauss_legendre(5, (0.0, 1.0))
    assert_allclose(rule.integrate(lambda x: x ** 2), 1.0 / 3.0, rtol=1e-12)


def test_gauss_legendre_weight_sum():
    rule = gauss_legendre(2, (-1.0, 1.0))
    assert_allclose(rule.weights.sum(), 2.0, rtol=1e-14)


def test_gauss_legendre_exp_against_oracle():
    rule = gauss_legendre(20, (0.0, 1.0))
    oracle = adaptive_simpson(math.exp, 0.0, 1.0, 1e-13)
    assert_allclose(rule.integrate(np.exp), oracle, rtol=1e-12)
    assert_allclose(oracle, math.e - 1.0, rtol=1e-12)


def test_gauss_legendre_nodes_sorted_inside():
    rule = gauss_legendre(12, (2.0, 5.0))
    assert np.all(np.diff(rule.nodes) > 0)
    assert rule.nodes[0] > 2.0 and rule.nodes[-1] < 5.0


@pytest.mark.parametrize("count,interval", [(0, (0, 1)), (3, (1, 1)), (3, (2, 1))])
def test_gauss_legendre_invalid(count, interval):
    with pytest.raises(ValueError):
        gauss_legendre(count, interval)


def test_even_weight_constant():
    # integral of |y|^0.5 over [-1, 1] is 2/(1+a) = 4/3
    rule = gauss_even_weight(6, 0.5, 1.0)
    assert_allclose(rule.weights.sum(), 4.0 / 3.0, rtol=1e-13)


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5, 0.9])
def test_even_weight_odd_function_vanishes(a):
    rule = gauss_even_weight(8, a, 1.0)
    assert abs(rule.integrate(lambda y: y)) < 1e-14


def test_even_weight_quadratic_closed_form():
    a = -0.5
    rule = gauss_even_weight(6, a, 1.0)
    assert_allclose(rule.integrate(lambda y: y ** 2), 2.0 / (3.0 + a),
                    rtol=1e-13)


def test_even_weight_rejects_bad_exponent():
    with pytest.raises(ValueError):
        gauss_even_weight(6, 1.0, 1.0)
    with pytest.raises(ValueError):
        gauss_even_weight(6, -1.2, 1.0)


def test_ball_weighted_disk_area():
    val = integrate_ball_weighted(lambda p: np.ones(len(p)),
                                  np.zeros(2), 1.0, 0.0, 64)
    assert_allclose(val, math.pi, atol=1e-6)


def test_ball_weighted_odd_in_y():
    val = integrate_ball_weighted(lambda p: p[:, -1], np.zeros(2), 1.0, 0.3, 48)
    assert abs(val) < 1e-10


def test_ball_weighted_matches_slice_oracle():
    # for g == 1: integral over the disk of |y|^a equals
    # int_{-1}^{1} |y|^a 2 sqrt(1 - y^2) dy
    a = 0.5

    def slice_mass(y):
        return abs(y) ** a * 2.0 * math.sqrt(max(0.0, 1.0 - y * y))

    oracle = 2.0 * adaptive_simpson(slice_mass, 0.0, 1.0, 1e-13)
    val = integrate_ball_weighted(lambda p: np.ones(len(p)),
                                  np.zeros(2), 1.0, a, 96)
    assert_allclose(val, oracle, atol=1e-6)


def test_ball_weighted_error_shrinks_with_resolution():
    def g(p):
        return np.exp(np.cos(3.0 * p[:, 0]) - p[:, 1] ** 2)

    target = integrate_ball_weighted(g, np.zeros(2), 1.0, 0.0, 256)
    errs = [abs(integrate_ball_weighted(g, np.zeros(2), 1.0, 0.0, res) - target)
            for res in (16, 24, 32)]
    assert errs[2] < errs[1] < errs[0]


def test_ball_weighted_propagates_nonfinite():
    def bad(p):
        out = np.ones(len(p))
        out[0] = np.nan
        return out

    with pytest.raises(EvaluationError):
        integrate_ball_weighted(bad, np.zeros(2), 1.0, 0.0, 16)


def test_rules_are_deterministic():
    r1 = gauss_even_weight(9, 0.3, 2.0)
    r2 = gauss_even_weight(9, 0.3, 2.0)
    assert np.array_equal(r1.nodes, r2.nodes)
    assert np.array_equal(r1.weights, r2.weights)
