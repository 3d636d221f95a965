import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from hypercone.constants import (INF, ExponentPair, SharpBoundInputs, conjugate, extremizer_alpha,
                                 extremizer_beta, gaussian_time_shift, h_ratio, log_m_constant,
                                 m_constant, omega, optimal_a, parse_extended, sharp_bound)


def golden_max_h(p, q):
    """max_a (1+a)^{1/q-1} / a^{1/p-1} by golden-section search in log a."""
    def neg(la):
        a = math.exp(la)
        return -((1 / q - 1) * math.log1p(a) - (1 / p - 1) * la)
    res = minimize_scalar(neg, bracket=(-5, 0, 5), method="golden", tol=1e-12)
    return math.exp(-res.fun), math.exp(res.x)


def test_m_conventions():
    assert m_constant(ExponentPair(2, 2)) == 1.0
    assert m_constant(ExponentPair(1, INF)) == 1.0
    assert m_constant(ExponentPair(1, 3)) == pytest.approx(3 ** (-1 / 3), rel=1e-14)
    assert m_constant(ExponentPair(3, INF)) == pytest.approx((2 / 3) ** (2 / 3), rel=1e-14)


def test_m_matches_golden_section_oracle():
    hmax, amax = golden_max_h(2, 4)
    assert m_constant(ExponentPair(2, 4)) == pytest.approx(hmax * 2 ** 0.5 / 4 ** 0.25, rel=1e-9)
    assert m_constant(ExponentPair(2, 4)) == pytest.approx(0.620403, abs=5e-7)
    assert amax == pytest.approx(optimal_a(ExponentPair(2, 4)), rel=1e-5)


@pytest.mark.parametrize("p,q", [(1.5, 3.0), (2.0, 4.0), (1.2, 7.0), (3.0, 3.5)])
def test_h_ratio_maximised_at_optimal_a(p, q):
    pair = ExponentPair(p, q)
    a = optimal_a(pair)
    grid = np.geomspace(1e-3, 1e3, 4001)
    vals = np.array([h_ratio(x, pair) for x in grid])
    assert h_ratio(a, pair) >= vals.max() * (1 - 1e-12)
    # decays like a^{1-1/p} at 0 and a^{1/p-1/q} at infinity
    assert h_ratio(1e-12, pair) < h_ratio(1e-6, pair) < h_ratio(a, pair)
    assert h_ratio(1e12, pair) < h_ratio(1e6, pair) < h_ratio(a, pair)


def test_omega():
    assert omega(1) == pytest.approx(2.0, rel=1e-14)
    assert omega(2) == pytest.approx(math.pi, rel=1e-14)
    assert omega(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)


def test_sharp_bound_examples():
    assert sharp_bound(SharpBoundInputs(ExponentPair(3, 3), 2.5, 0.3, 7.0)) == 1.0
    assert sharp_bound(SharpBoundInputs(ExponentPair(1, INF), 2, 1, 1 / (4 * math.pi))) == pytest.approx(1.0, rel=1e-14)
    val = sharp_bound(SharpBoundInputs(ExponentPair(2, 4), 2, 0.5, 1))
    assert val == pytest.approx(0.620403 * 0.5 ** -0.25 * (4 * math.pi) ** -0.25, rel=1e-6)


def test_sharp_bound_decreasing_in_t():
    pair = ExponentPair(2, 5)
    vals = [sharp_bound(SharpBoundInputs(pair, 3, 0.7, t)) for t in (0.1, 1, 10)]
    assert vals[0] > vals[1] > vals[2]


def test_extremizer_parameters_rational():
    pair = ExponentPair(2, 4)
    assert extremizer_alpha(pair, 1) == pytest.approx(1 / 8, rel=1e-15)
    assert extremizer_alpha(pair, 2) == pytest.approx(1 / 16, rel=1e-15)
    assert extremizer_beta(pair, 1) == pytest.approx(1 / 12, rel=1e-15)
    assert gaussian_time_shift(pair, 1) == pytest.approx(2.0, rel=1e-15)
    p, q = Fraction(3, 2), Fraction(3)
    alpha = Fraction(1, 4) * (p / (p - 1)) * (1 / p - 1 / q)
    assert alpha == Fraction(1, 4)
    assert extremizer_alpha(ExponentPair(1.5, 3), 1) == pytest.approx(float(alpha), rel=1e-15)
    assert gaussian_time_shift(ExponentPair(1.5, 3), 1) == pytest.approx(1.0, rel=1e-15)


def test_optimal_a_limits_and_errors():
    assert optimal_a(ExponentPair(2, 4)) == 2.0
    assert optimal_a(ExponentPair(2, INF)) == 1.0
    with pytest.raises(ValueError):
        optimal_a(ExponentPair(2, 2))
    with pytest.raises(ValueError):
        optimal_a(ExponentPair(1, 3))
    for bad in [ExponentPair(1, 3), ExponentPair(2, 2), ExponentPair(2, INF)]:
        with pytest.raises(ValueError):
            extremizer_alpha(bad, 1.0)


def test_pair_validation():
    with pytest.raises(ValueError):
        ExponentPair(4, 2)
    with pytest.raises(ValueError):
        ExponentPair(0.5, 2)
    assert ExponentPair(2, 2 + 1e-17).diagonal
    assert parse_extended("inf") is INF
    assert conjugate(1.0) is INF and conjugate(INF) == 1.0


exps = st.floats(1.01, 50.0)


@settings(max_examples=200, deadline=None)
@given(exps, exps)
def test_m_duality(a, b):
    p, q = min(a, b), max(a, b)
    pair = ExponentPair(p, q)
    dual = ExponentPair(float(conjugate(q)), float(conjugate(p)))
    assert log_m_constant(pair) == pytest.approx(log_m_constant(dual), abs=1e-12)


def test_beta_alpha_relation_random():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        p = rng.uniform(1.01, 10)
        q = p + rng.uniform(0.01, 20)
        t0 = math.exp(rng.uniform(-5, 5))
        pair = ExponentPair(p, q)
        a0, b0 = extremizer_alpha(pair, t0), extremizer_beta(pair, t0)
        assert abs(a0 / (1 + 4 * a0 * t0) - b0) <= 1e-14 * b0
        assert gaussian_time_shift(pair, t0) == pytest.approx(1 / (4 * b0) - t0, rel=1e-12, abs=1e-12 * t0)
