import math

import mpmath as mp
import pytest

from hypercone.constants import ExponentPair
from hypercone.rigidity import (BisectionError, avr_pinch_from_deficit, mp_alpha, mp_C, mp_C_exact,
                                mp_delta, mp_h, mp_h_inverse, munn_perelman_table,
                                one_minus_alpha, topology_report)


def test_C_recursion():
    assert mp_C_exact(1, 2, 0) == 1
    assert mp_C_exact(1, 2, 1) == 13 + 16 * 11 ** 2 == 1949
    vals = [mp_C_exact(2, 3, i) for i in range(3)]
    assert vals[0] < vals[1] < vals[2]
    with mp.workdps(60):
        assert mp_C(2, 3, 2) == mp.mpf(vals[2])
    with pytest.raises(ValueError):
        mp_C(3, 2, 1)


def test_delta_against_findroot():
    with mp.workdps(50):
        ref = mp.findroot(lambda s: 1949 * 10 ** 3 * s * (1 + s / 2) - 1, 5e-7)
    d, resid = mp_delta(1, 2, with_residual=True)
    assert float(d) == pytest.approx(float(ref), rel=1e-14)
    assert float(d) == pytest.approx(5.1308e-7, rel=1e-4)
    assert resid < 1e-12
    # larger C, smaller root
    assert mp_delta(1, 3) < mp_delta(1, 2)


def test_h_and_inverse():
    with mp.workdps(50):
        ref = mp.findroot(lambda s: 1949 * 10 ** 3 * s * (1 + s / 2) - mp.mpf(1) / 2, 2.5e-7)
    s = mp_h_inverse(1, 2, 2)
    assert float(s) == pytest.approx(float(ref), rel=1e-14)
    assert float(s) == pytest.approx(2.5654e-7, rel=1e-4)
    assert float(mp_h(1, 2, s)) == pytest.approx(2.0, rel=1e-12)
    assert float(mp_h(1, 2, mp.mpf("1e-30"))) == pytest.approx(1.0, abs=1e-20)
    with pytest.raises(ValueError):
        mp_h(1, 2, 1.0)
    with pytest.raises(ValueError):
        mp_h_inverse(1, 2, 0.5)


def test_alpha_k1():
    s = mp_h_inverse(1, 2, 2)
    expect = 1 / (1 + 2 / s)
    assert float(one_minus_alpha(1, 2)) == pytest.approx(float(expect), rel=1e-14)
    assert float(one_minus_alpha(1, 2)) == pytest.approx(1.283e-7, rel=1e-3)
    assert 0 < mp_alpha(1, 2) < 1


@pytest.mark.parametrize("n", [2, 3, 4])
def test_table_invariants(n):
    table = munn_perelman_table(n)
    assert table.monotone()
    for row in table.rows:
        assert row["in_unit_interval"] and row["residual"] < 1e-12
    assert len(table.to_text().splitlines()) == n + 2


def test_avr_pinch():
    pair = ExponentPair(2, 4)
    assert avr_pinch_from_deficit(pair, 0.0) == 1.0
    assert avr_pinch_from_deficit(pair, 0.01) == pytest.approx(1.01 ** -4, rel=1e-14)
    assert avr_pinch_from_deficit(pair, 0.01) == pytest.approx(0.9610, abs=1e-4)
    assert avr_pinch_from_deficit(pair, 0.1) < avr_pinch_from_deficit(pair, 0.01)
    assert avr_pinch_from_deficit(pair, 1e-12) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        avr_pinch_from_deficit(ExponentPair(2, 2), 0.1)


def test_topology_reports():
    table = munn_perelman_table(2)
    r = topology_report(2, 0.6, table)
    assert r["fundamental_group_order_bound"] == 1 and r["simply_connected"]
    r = topology_report(2, 0.3, table)
    assert r["fundamental_group_order_bound"] == 3 and r["k0"] == 0 and not r["simply_connected"]
    r = topology_report(2, 1.0, table)
    assert len(r["comparisons"]) == 2
    assert r["contractible"] == bool(1 > mp_alpha(2, 2))
    # monotone in K
    ks = [0.1, 0.4, 0.5, 0.51, 0.9, 0.9999999, 1.0]
    reps = [topology_report(2, K, table) for K in ks]
    for a, b in zip(reps, reps[1:]):
        assert b["fundamental_group_order_bound"] <= a["fundamental_group_order_bound"]
        assert b["k0"] >= a["k0"]
        assert b["simply_connected"] >= a["simply_connected"]
    with pytest.raises(ValueError):
        topology_report(2, 0.0, table)


def test_bisection_bracket_failure():
    from hypercone.rigidity import _bisect_log
    with pytest.raises(BisectionError):
        _bisect_log(lambda s: s, mp.mpf(10), mp.mpf(1), mp.mpf(2))
