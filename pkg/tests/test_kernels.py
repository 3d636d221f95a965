import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from hypercone.bessel import bessel_i, bessel_i_scaled_over_power
from hypercone.constants import omega
from hypercone.kernels import (carslaw_images, carslaw_kernel, carslaw_values, euclidean_kernel,
                               gaussian_bound_check, radial_kernel, tip_kernel)
from hypercone.spaces import ConePoint, ConeSpace, ball_volume_tip, make_grid


def mp_scaled_i(nu, x):
    with mp.workdps(40):
        return float(mp.besseli(nu, x) * mp.exp(-x))


def test_bessel_special_values():
    assert bessel_i(0.0, 0.0) == 1.0
    assert bessel_i(2.5, 0.0) == 0.0
    assert bessel_i(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-14)
    assert bessel_i(0.5, 1.0) == pytest.approx(0.937674, abs=1e-6)


@pytest.mark.parametrize("nu", [0.0, 0.3, 1.0, 2.0 / 3.0, 4.0, 17.5, 60.0, 200.0])
def test_bessel_matches_mpmath(nu):
    xs = np.concatenate([np.geomspace(1e-3, 1e4, 40), [24.9, 25.0, 25.1]])
    ours = bessel_i(nu, xs, scaled=True)
    for x, v in zip(xs, ours):
        ref = mp_scaled_i(nu, x)
        if ref < 1e-290:
            continue
        assert v == pytest.approx(ref, rel=1e-10), (nu, x)


def test_bessel_monotone_in_x():
    x = np.linspace(0, 80, 400)
    for nu in (0.0, 1.5, 30.0):
        vals = bessel_i(nu, x)
        assert np.all(vals >= 0) and np.all(np.diff(vals) >= 0)


def test_bessel_over_power_at_zero():
    for nu in (0.0, 0.5, 3.0):
        assert bessel_i_scaled_over_power(nu, 0.0) == pytest.approx(1 / (2 ** nu * gamma(nu + 1)), rel=1e-14)


def test_bessel_rejects_negative():
    with pytest.raises(ValueError):
        bessel_i(-1.0, 1.0)


def test_euclidean_kernel():
    assert euclidean_kernel(2, 0.0, 1.0) == pytest.approx(1 / (4 * math.pi), rel=1e-15)
    mass = quad(lambda r: 2 * math.pi * r * euclidean_kernel(2, r, 0.7), 0, np.inf)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)
    # semigroup in 1-D by numeric convolution
    t, s, x = 0.4, 1.1, 0.8
    conv = quad(lambda y: euclidean_kernel(1, x - y, t) * euclidean_kernel(1, y, s), -np.inf, np.inf,
                epsabs=1e-14)[0]
    assert conv == pytest.approx(euclidean_kernel(1, x, t + s), rel=1e-10)


def test_tip_kernel(half_plane, plane):
    assert tip_kernel(half_plane, 0.0, 1.0) == pytest.approx(1 / (2 * math.pi), rel=1e-15)
    r = np.linspace(0, 5, 11)
    assert np.allclose(tip_kernel(plane, r, 0.6), euclidean_kernel(2, r, 0.6), rtol=1e-14)
    for cone in (half_plane, ConeSpace(3.0, 2.0), ConeSpace(4.5, 1.0)):
        g = make_grid(cone.N, 2.0, 256)
        assert cone.sigma * g.integrate(tip_kernel(cone, g.nodes, 0.7)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("N", [2.0, 3.0, 4.0])
def test_radial_kernel_origin_limit(N):
    # N omega_N = 2 pi^{N/2} / Gamma(N/2)
    assert N * omega(N) == pytest.approx(2 * math.pi ** (N / 2) / gamma(N / 2), rel=1e-14)
    rp = np.linspace(0, 4, 9)
    expect = 2 * (4 * 0.9) ** (-N / 2) * np.exp(-rp ** 2 / 3.6) / gamma(N / 2)
    assert np.allclose(radial_kernel(N, 0.0, rp, 0.9), expect, rtol=1e-13)
    # and matches the tip kernel once multiplied by the cross-section measure
    cone = ConeSpace.with_avr(N, 0.4)
    assert np.allclose(radial_kernel(N, 0.0, rp, 0.9) / cone.sigma, tip_kernel(cone, rp, 0.9), rtol=1e-13)


@pytest.mark.parametrize("N", [1.5, 2.0, 3.0, 5.0])
def test_radial_kernel_mass_and_symmetry(N):
    g = make_grid(N, 20.0, 2048, t_min=0.05)
    for t in (0.1, 1.0, 10.0):
        for r in (0.0, 1.0, 5.0):
            mass = g.integrate(radial_kernel(N, r, g.nodes, t))
            assert mass == pytest.approx(1.0, abs=1e-10)
    r = np.linspace(0, 3, 7)
    K = radial_kernel(N, r[:, None], r[None, :], 0.5)
    assert np.allclose(K, K.T, rtol=1e-15)


def test_carslaw_flat_matches_euclidean(plane):
    rng = np.random.default_rng(11)
    for _ in range(200):
        x = ConePoint(*rng.uniform([0, 0], [5, 2 * math.pi]))
        y = ConePoint(*rng.uniform([0, 0], [5, 2 * math.pi]))
        t = float(np.exp(rng.uniform(math.log(0.05), math.log(20))))
        d = math.hypot(x.r * math.cos(x.phi) - y.r * math.cos(y.phi), x.r * math.sin(x.phi) - y.r * math.sin(y.phi))
        ref = euclidean_kernel(2, d, t)
        assert abs(carslaw_kernel(plane, x, y, t).value - ref) <= 1e-10 * max(ref, 1e-300) + 1e-300


def test_carslaw_tip_reduction(half_plane):
    for r, t in [(0.5, 0.3), (2.0, 1.0), (4.0, 5.0)]:
        val = carslaw_kernel(half_plane, ConePoint(0.0, 0.0), ConePoint(r, 1.0), t).value
        assert val == pytest.approx(tip_kernel(half_plane, r, t), rel=1e-10)


@pytest.mark.parametrize("theta", [math.pi / 3, 2.2, math.pi, 5.0])
def test_carslaw_series_vs_images(theta):
    cone = ConeSpace(2.0, theta)
    rng = np.random.default_rng(5)
    for _ in range(25):
        x = ConePoint(*rng.uniform([0.1, 0], [3, theta]))
        y = ConePoint(*rng.uniform([0.1, 0], [3, theta]))
        t = float(rng.uniform(0.3, 3))
        series, _, _, cond = carslaw_values(cone, x.r, x.phi, y.r, y.phi, t)
        if cond > 1e3:
            continue
        img, _ = carslaw_images(cone, x, y, t)
        assert float(series) == pytest.approx(img, rel=1e-9, abs=1e-300)


def test_carslaw_symmetry_positivity(half_plane):
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = ConePoint(*rng.uniform([0, 0], [4, math.pi]))
        y = ConePoint(*rng.uniform([0, 0], [4, math.pi]))
        t = float(rng.uniform(0.1, 4))
        a = carslaw_kernel(half_plane, x, y, t).value
        b = carslaw_kernel(half_plane, y, x, t).value
        assert a > 0 and a == pytest.approx(b, rel=1e-12)


def _cone_quadrature(theta, rmax=14.0, nr=160, nphi=96):
    xr, wr = np.polynomial.legendre.leggauss(nr)
    # two panels in r to resolve the bulk near the origin
    r = np.concatenate([(xr + 1) * 2.0, 4.0 + (xr + 1) * (rmax - 4.0) / 2])
    w = np.concatenate([wr * 2.0, wr * (rmax - 4.0) / 2])
    phi = np.arange(nphi) * theta / nphi
    R, P = np.meshgrid(r, phi, indexing="ij")
    W = (w * r)[:, None] * np.full(nphi, theta / nphi)[None, :]
    return R, P, W


@pytest.mark.parametrize("theta", [math.pi, 1.5 * math.pi])
def test_carslaw_chapman_kolmogorov_and_mass(theta):
    cone = ConeSpace(2.0, theta)
    R, P, W = _cone_quadrature(theta)
    x, y, t, s = ConePoint(1.0, 0.3), ConePoint(0.6, 2.0), 0.8, 0.5
    hx = carslaw_values(cone, x.r, x.phi, R, P, t)[0]
    hy = carslaw_values(cone, R, P, y.r, y.phi, s)[0]
    assert float(np.sum(hx * W)) == pytest.approx(1.0, abs=1e-6)
    lhs = float(np.sum(hx * hy * W))
    rhs = carslaw_kernel(cone, x, y, t + s).value
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_carslaw_jiang_monotone_and_large_time(half_plane):
    x, y = ConePoint(1.0, 0.0), ConePoint(2.0, 1.0)
    times = np.geomspace(0.05, 1e4, 40)
    scaled = [t * carslaw_kernel(half_plane, x, y, t).value for t in times]
    assert np.all(np.diff(scaled) >= -1e-12 * max(scaled))
    diag = 1e4 * carslaw_kernel(half_plane, x, x, 1e4).value
    assert diag == pytest.approx(2 / (4 * math.pi), rel=1e-2)


def test_gaussian_bounds(plane, half_plane):
    rep = gaussian_bound_check(plane, 1.0, 60)
    assert rep["finite"] and rep["C"] <= 10
    rep = gaussian_bound_check(half_plane, 1.0, 60)
    assert rep["finite"]
    # x = y = tip: m(B_sqrt t) h = AVR omega_2 t / (AVR 4 pi t) = 1/4
    t = 0.7
    val = ball_volume_tip(half_plane, math.sqrt(t)) * tip_kernel(half_plane, 0.0, t)
    assert val == pytest.approx(0.25, rel=1e-14)


def test_gaussian_bound_scale_invariance():
    # same sample, rescaled cone data: h scales by r^{-N}, volume by r^N, distances by r
    from hypercone.kernels import gaussian_ratios
    cone = ConeSpace.planar(1.3)
    x, y, t, lam = ConePoint(1.0, 0.2), ConePoint(2.0, 1.0), 0.6, 3.0
    a = gaussian_ratios(cone, x, y, t, 0.5)
    b = gaussian_ratios(cone, ConePoint(lam * x.r, x.phi), ConePoint(lam * y.r, y.phi), lam ** 2 * t, 0.5)
    assert a == pytest.approx(b, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 6.0), st.floats(0.0, 6.0), st.floats(0.05, 10.0), st.floats(1.2, 6.0))
def test_radial_kernel_positive_symmetric(r, rp, t, N):
    a = radial_kernel(N, r, rp, t)
    b = radial_kernel(N, rp, r, t)
    assert a >= 0 and a == pytest.approx(b, rel=1e-13, abs=1e-300)
