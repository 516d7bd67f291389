import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fracmv.bump import BumpProfile, eta_raw, eta_raw_prime, normalize
from fracmv.quadrature import adaptive_simpson, integrate_ball_weighted


@pytest.mark.parametrize("rho", [0.0, 0.2, 0.25, 0.75, 0.9, 3.0])
def test_eta_zero_outside_support(rho, get_profile):
    assert get_profile(1, 0.0).eta(rho) == 0.0


def test_eta_midpoint_value(get_profile):
    prof = get_profile(1, 0.0)
    assert_allclose(prof.eta(0.5), prof.kappa * math.exp(-16.0), rtol=1e-14)


def test_eta_rejects_negative_argument(get_profile):
    with pytest.raises(ValueError):
        get_profile(1, 0.0).eta(-0.1)


def test_eta_smooth_at_support_endpoints():
    # first three finite-difference derivatives tend to zero approaching the
    # endpoints from inside
    for edge, sign in ((0.25, 1.0), (0.75, -1.0)):
        for h in (1e-2, 5e-3):
            rho = edge + sign * 4.0 * h
            vals = eta_raw(rho + sign * h * np.arange(-2, 3))
            d1 = (vals[3] - vals[1]) / (2 * h)
            d2 = (vals[3] - 2 * vals[2] + vals[1]) / h ** 2
            d3 = (vals[4] - 2 * vals[3] + 2 * vals[1] - vals[0]) / (2 * h ** 3)
            for d in (d1, d2, d3):
                assert abs(d) < 1e-4


@pytest.mark.parametrize("n,a", [(1, 0.0), (1, 0.5), (1, -0.5), (2, 0.0)])
def test_normalized_weighted_mass_is_one(n, a, get_profile):
    prof = get_profile(n, a)
    mass = integrate_ball_weighted(prof.phi, np.zeros(n + 1), 1.0, a, 96)
    assert_allclose(mass, 1.0, atol=1e-8)


def test_kappa_against_adaptive_oracle(get_profile):
    # n=1, a=0: mass of the raw bump is the polar integral
    # 2*pi*int rho*eta_raw(rho) drho
    # the bump tops out at e^-16, so rescale before integrating to keep the
    # oracle's absolute tolerance meaningful relative to the value
    lift = math.exp(16.0)
    raw_mass = 2.0 * math.pi / lift * adaptive_simpson(
        lambda t: lift * t * float(eta_raw(t)), 0.25, 0.75, 1e-13)
    assert_allclose(get_profile(1, 0.0).kappa, 1.0 / raw_mass, rtol=1e-8)


def test_kappa_depends_on_weight(get_profile):
    assert get_profile(1, 0.5).kappa != get_profile(1, -0.5).kappa


def test_normalize_validates_arguments():
    with pytest.raises(ValueError):
        normalize(3, 0.0)
    with pytest.raises(ValueError):
        normalize(1, 1.5)


def test_zeta_plateaus(get_profile):
    prof = get_profile(1, 0.0)
    assert_allclose(prof.zeta(0.2), -prof.A, rtol=1e-12)
    assert_allclose(prof.zeta(0.0), -prof.A, rtol=1e-12)
    assert abs(prof.zeta(1.0)) < 1e-10
    assert abs(prof.zeta(0.75)) < 1e-10


def test_zeta_strictly_between_on_support(get_profile):
    prof = get_profile(1, 0.0)
    mid = prof.zeta(0.5)
    assert -prof.A < mid < 0.0


def test_zeta_nondecreasing(get_profile):
    prof = get_profile(1, 0.0)
    ts = np.linspace(0.0, 1.0, 41)
    vals = prof.zeta(ts)
    assert np.all(np.diff(vals) >= -1e-14)


def test_grad_psi_zero_cases(get_profile):
    prof = get_profile(1, 0.0)
    assert_allclose(prof.grad_psi(np.zeros(2)), np.zeros(2))
    X = 0.9 * np.array([math.cos(0.3), math.sin(0.3)])
    assert_allclose(prof.grad_psi(X), np.zeros(2))


@pytest.mark.parametrize("n,a", [(1, 0.0), (1, 0.5), (2, -0.5)])
def test_grad_psi_matches_central_differences(n, a, get_profile):
    prof = get_profile(n, a)
    rng = np.random.default_rng(7)
    h = 1e-5
    for _ in range(20):
        X = rng.uniform(-0.8, 0.8, size=n + 1)
        grad = prof.grad_psi(X)
        fd = np.empty(n + 1)
        for j in range(n + 1):
            e = np.zeros(n + 1)
            e[j] = h
            fd[j] = (prof.psi(X + e) - prof.psi(X - e))[0] / (2.0 * h)
        scale = max(np.linalg.norm(grad), 1e-3)
        assert np.linalg.norm(grad - fd) / scale < 1e-6


def test_grad_psi_points_outward(get_profile):
    prof = get_profile(1, 0.0)
    rng = np.random.default_rng(3)
    X = rng.uniform(-1.0, 1.0, size=(50, 2))
    dots = (prof.grad_psi(X) * X).sum(axis=1)
    assert np.all(dots >= 0.0)


def test_phi_even_in_y(get_profile):
    prof = get_profile(2, 0.5)
    pts = np.array([[0.3, 0.1, 0.2], [0.3, 0.1, -0.2]])
    vals = prof.phi(pts)
    assert vals[0] == vals[1]


def test_eta_raw_prime_matches_eta_raw():
    ts = np.linspace(0.26, 0.74, 25)
    h = 1e-6
    fd = (eta_raw(ts + h) - eta_raw(ts - h)) / (2.0 * h)
    assert_allclose(eta_raw_prime(ts), fd, rtol=1e-6, atol=1e-12)
