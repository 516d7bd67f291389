import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracmv.errors import FieldRejectedError
from fracmv.extension import (ExtensionKernel, extend, poisson_constant,
                              reflected_extension)
from fracmv.fraclap import make_field
from fracmv.quadrature import adaptive_simpson, gauss_legendre


def test_constant_classical_value():
    # n=1, a=0 is the classical half-plane Poisson kernel 1/pi * y/(x^2+y^2)
    assert_allclose(poisson_constant(1, 0.0), 1.0 / math.pi, rtol=1e-8)


def test_constant_against_adaptive_oracle():
    oracle = 2.0 * adaptive_simpson(lambda x: 1.0 / (1.0 + x * x), 0.0, 1e6,
                                    1e-13)
    # tail beyond 1e6: integral of x^-2 = 1e-6 to leading order
    oracle += 2.0e-6
    assert_allclose(1.0 / poisson_constant(1, 0.0), oracle, rtol=1e-6)


def _kernel_mass(k, y, cut=1e4):
    """Adaptive-Simpson mass of P_y with an analytic two-term tail."""
    n, a = k.n, k.a
    surf = 2.0 if n == 1 else 2.0 * math.pi
    m = 0.5 * (n + 1.0 - a)

    def radial(u):
        x = np.zeros(n)
        x[0] = y * u
        return float(k.poisson_kernel(x, y)) * u ** (n - 1)

    core = adaptive_simpson(radial, 0.0, 1.0, 1e-12) \
        + adaptive_simpson(radial, 1.0, cut, 1e-12)
    tail = k.C * (cut ** (a - 1.0) / (1.0 - a) - m * cut ** (a - 3.0) / (3.0 - a))
    return surf * (y ** n * core + tail)


@pytest.mark.parametrize("n,a", [(1, 0.0), (1, 0.5), (1, -0.5), (2, 0.3)])
def test_unit_mass_at_several_heights(n, a):
    k = ExtensionKernel.create(n, a)
    for y in (0.1, 1.0, 10.0):
        assert_allclose(_kernel_mass(k, y), 1.0, atol=1e-8)


def test_kernel_classical_point_value():
    k = ExtensionKernel.create(1, 0.0)
    assert_allclose(k.poisson_kernel(np.array([1.0]), 1.0), 1.0 / (2.0 * math.pi),
                    rtol=1e-12)


def test_kernel_value_at_origin_is_constant():
    k = ExtensionKernel.create(2, 0.4)
    assert_allclose(k.poisson_kernel(np.zeros(2), 1.0), k.C, rtol=1e-14)


def test_kernel_scaling_homogeneity():
    k = ExtensionKernel.create(1, 0.5)
    x, y, r = 0.7, 0.4, 2.0
    lhs = k.poisson_kernel(np.array([r * x]), r * y)
    rhs = r ** -1 * k.poisson_kernel(np.array([x]), y)
    assert_allclose(lhs, rhs, rtol=1e-12)


def test_kernel_rejects_nonpositive_height():
    k = ExtensionKernel.create(1, 0.0)
    with pytest.raises(ValueError):
        k.poisson_kernel(np.array([0.0]), 0.0)


def test_kernel_stable_at_large_argument():
    k = ExtensionKernel.create(1, 0.5)
    val = k.poisson_kernel(np.array([1e8]), 1.0)
    assert np.isfinite(val) and val > 0.0


def test_extend_constant_field():
    k = ExtensionKernel.create(1, 0.3)
    f = make_field("constant", 1, k.s)
    for y in (0.2, 1.0, 5.0):
        assert_allclose(extend(k, f, np.array([0.4]), y), 1.0, atol=1e-8)


def test_extend_even_in_y():
    k = ExtensionKernel.create(1, 0.0)
    f = make_field("gaussian", 1, k.s)
    v = reflected_extension(k, f)
    up = v(np.array([[0.2, 0.3]]))
    down = v(np.array([[0.2, -0.3]]))
    assert up[0] == down[0]


def test_extend_affine_identity():
    # odd moment of the symmetric kernel vanishes, so v(x, y) = x
    k = ExtensionKernel.create(1, -0.5)  # s = 0.75
    f = make_field("affine", 1, k.s)
    assert_allclose(extend(k, f, np.array([0.3]), 0.7), 0.3, atol=1e-6)


def test_extend_rejects_bad_growth():
    k = ExtensionKernel.create(1, 0.5)  # s = 0.25, degree 1 not integrable
    f = make_field("affine", 1, 0.75)
    with pytest.raises(FieldRejectedError):
        extend(k, f, np.array([0.0]), 1.0)


def test_extend_converges_to_boundary_data():
    k = ExtensionKernel.create(1, 0.2)
    f = make_field("gaussian", 1, k.s)
    x = np.array([0.3])
    errs = [abs(extend(k, f, x, y) - f(x)) for y in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] > errs[2]
    # the boundary limit is attained at rate y^(2s); only the trend is asserted
    assert errs[2] < 1e-2


def test_extend_at_zero_height_returns_field():
    k = ExtensionKernel.create(1, 0.0)
    f = make_field("gaussian", 1, k.s)
    assert extend(k, f, np.array([0.25]), 0.0) == f(np.array([0.25]))
