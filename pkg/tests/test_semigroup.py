import math

import numpy as np
import pytest
from scipy.linalg import expm

from hypercone.semigroup import (ConeModel, GridMismatchError, RadialFunction, StepSizeError,
                                 SurfaceModel, apply_heat, cn_amplification, crank_nicolson,
                                 dirichlet_energy, energy_log_convexity_trace, entropy,
                                 fourier_gaussian_check, integral, lp_norm)
from hypercone.spaces import ConeSpace, SurfaceSpace


def gaussian(model, c0):
    return model.sample(lambda r: np.exp(-c0 * r * r), True)


def test_mass_and_constants(half_plane_model):
    m = half_plane_model
    f = gaussian(m, 1.0)
    for t in (0.05, 0.5, 2.0):
        g = apply_heat(m, f, t)
        assert integral(m, g) == pytest.approx(integral(m, f), rel=1e-9)
    # H_t 1 = 1 away from the truncation radius
    ones = m.function(np.ones(m.size), True)
    inner = m.nodes < 0.3 * m.grid.R
    assert np.max(np.abs(apply_heat(m, ones, 0.5).values[inner] - 1)) < 1e-9


def test_plane_gaussian_to_gaussian(plane):
    m = ConeModel.build(plane, 4.0, 512, t_min=0.5)
    a0, t0 = 0.125, 1.0
    b0 = a0 / (1 + 4 * a0 * t0)
    out = apply_heat(m, gaussian(m, a0), t0).values
    expect = np.exp(-b0 * m.nodes ** 2) / (1 + 4 * a0 * t0)
    inner = m.nodes < 12
    assert np.max(np.abs(out[inner] - expect[inner])) < 1e-9
    slope = np.polyfit(m.nodes[inner] ** 2, np.log(out[inner]), 1)[0]
    assert -slope == pytest.approx(b0, abs=1e-8)


def test_semigroup_law(half_plane_model):
    m = half_plane_model
    f = gaussian(m, 2.0).values
    lhs = m.apply(f, 0.8)
    rhs = m.apply(m.apply(f, 0.3), 0.5)
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_lp_norm_gaussian_closed_form(half_plane_model):
    m = half_plane_model
    # int e^{-2 c0 d^2} dm = (pi / 2 c0) AVR
    for c0 in (0.25, 0.5, 2.0):
        f = gaussian(m, c0)
        assert lp_norm(m, f, 2) ** 2 == pytest.approx(math.pi / (2 * c0) * 0.5, rel=1e-10)
    assert integral(m, gaussian(m, 1.0)) == pytest.approx(math.pi / 2, rel=1e-12)
    # sup over nodes: the value at the innermost node
    assert lp_norm(m, gaussian(m, 1.0), "inf") == pytest.approx(math.exp(-m.nodes[0] ** 2), rel=1e-15)


@pytest.mark.parametrize("c0", [0.25, 0.5, 2.0])
def test_entropy_and_energy_closed_forms(half_plane_model, c0):
    m = half_plane_model
    theta = math.pi
    u2 = m.sample(lambda r: np.exp(-2 * c0 * r * r), True)
    mass = theta / (4 * c0)
    assert entropy(m, u2) == pytest.approx(-mass - mass * math.log(mass), rel=1e-10)
    assert dirichlet_energy(m, gaussian(m, c0)) == pytest.approx(theta / 2, rel=1e-10)


def test_entropy_edge_cases(half_plane_model):
    m = half_plane_model
    assert dirichlet_energy(m, np.full(m.size, 3.0)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        entropy(m, -np.ones(m.size))
    # plateau of value 1 and mass 1: zero entropy
    v = np.zeros(m.size)
    v[:10] = 1.0
    v = v / integral(m, v)
    u = m.function(v, True)
    assert entropy(m, u.scaled(1.0)) == pytest.approx(entropy(m, u))


def test_contractivity_positivity(half_plane_model):
    m = half_plane_model
    rng = np.random.default_rng(0)
    r = m.nodes
    for _ in range(10):
        f = sum(rng.uniform(0, 1) * np.exp(-rng.uniform(0.3, 5) * (r - rng.uniform(0, 4)) ** 2)
                for _ in range(3))
        g = m.apply(f, float(rng.uniform(0.05, 3)))
        assert np.all(g >= -1e-300)
        for p in (1, 2, 5, "inf"):
            assert lp_norm(m, g, p) <= lp_norm(m, f, p) * (1 + 1e-9)


def test_log_convexity_gaussian(plane):
    m = ConeModel.build(plane, 12.0, 1024, t_min=0.1)
    rep = energy_log_convexity_trace(m, gaussian(m, 1.0), np.geomspace(0.1, 10, 15))
    assert rep["convex"] and rep["non_increasing"] and rep["positive"]
    # closed form on the plane: E(s) = pi / (2 (1 + 4 s)) for f = e^{-r^2}
    for row in rep["rows"]:
        assert row["E"] == pytest.approx(math.pi / (2 * (1 + 4 * row["s"])), rel=1e-9)


def test_grid_mismatch(half_plane_model, plane):
    other = ConeModel.build(plane, 4.0, 512, t_min=0.05)
    with pytest.raises(GridMismatchError):
        apply_heat(half_plane_model, gaussian(other, 1.0), 1.0)
    with pytest.raises(GridMismatchError):
        RadialFunction(half_plane_model, np.ones(3))


@pytest.mark.parametrize("n", [1, 2])
def test_fourier_check(n):
    rep = fourier_gaussian_check(0.125, 1.0, n)
    assert rep["ok"]
    assert rep["beta"] == pytest.approx(1 / 12, abs=1e-8)
    assert rep["amplitude"] == pytest.approx((1 + 0.5) ** (-n / 2), abs=1e-6)
    if n == 2:
        assert rep["amplitude"] == pytest.approx(2 / 3, abs=1e-6)
    small = fourier_gaussian_check(0.125, 1e-6, n)
    assert small["ok"] and small["beta"] == pytest.approx(0.125, rel=1e-5)
    wide = fourier_gaussian_check(4.0, 50.0, n)
    assert wide["ok"] and wide["beta_error"] <= 1e-8 * wide["beta_expected"]


@pytest.fixture(scope="module")
def surface_model():
    return SurfaceModel(SurfaceSpace(0.5), points=400, t_max=2.0, steps=800)


def test_surface_banded_matches_spectral(surface_model):
    m = surface_model
    u0 = np.exp(-m.nodes ** 2)
    banded = crank_nicolson(m, u0, 1.0)
    spectral = m.propagator(1.0) @ u0
    assert np.max(np.abs(banded - spectral)) < 1e-12


def test_surface_cn_close_to_exact():
    s = SurfaceSpace(0.5)
    cn = SurfaceModel(s, points=200, t_max=1.0, steps=2000)
    ex = SurfaceModel(s, points=200, t_max=1.0, scheme="exact")
    u0 = np.exp(-cn.nodes ** 2)
    assert np.max(np.abs(cn.propagator(0.5) @ u0 - ex.propagator(0.5) @ u0)) < 1e-7
    # the exact scheme is the matrix exponential of the semi-discrete operator
    n = cn.size
    A = np.diag(cn._A_diag) + np.diag(cn._A_off, 1) + np.diag(cn._A_off, -1)
    P = expm(-0.5 * A / cn.mu[:, None])
    assert np.max(np.abs(P @ u0 - ex.propagator(0.5) @ u0)) < 1e-10


def test_surface_self_adjoint_positive(surface_model):
    m = surface_model
    P = m.propagator(0.7)
    H = P / m.mu[None, :]
    assert np.allclose(H, H.T, rtol=1e-9, atol=1e-14)
    u = np.exp(-m.nodes)
    assert np.all(P @ u >= -1e-14)
    assert integral(m, P @ u) <= integral(m, u) * (1 + 1e-12)


def test_surface_flat_limit():
    # c = 1 is the flat plane: pole diagonal equals 1/(4 pi t)
    m = SurfaceModel(SurfaceSpace(1.0), points=800, t_max=1.0)
    for t in (0.1, 1.0):
        assert 4 * math.pi * t * m.origin_diagonal(t) == pytest.approx(1.0, rel=2e-3)


def test_surface_approaches_cone_value():
    m = SurfaceModel(SurfaceSpace(0.5), points=1200, t_max=100.0)
    vals = [4 * math.pi * t * m.origin_diagonal(t) for t in (1.0, 10.0, 100.0)]
    assert vals[0] < vals[1] < vals[2] < 2.0
    assert vals[2] == pytest.approx(2.0, rel=0.1)


def test_cn_amplification_and_step_errors():
    lam = np.array([0.0, 1.0, 1e6])
    g = cn_amplification(lam, 1.0, 1000)
    assert g[0] == 1.0
    assert g[1] == pytest.approx(math.exp(-1.0), rel=1e-6)
    assert abs(g[2]) < 1e-10
    with pytest.raises(StepSizeError):
        cn_amplification(lam, 1.0, 1)
