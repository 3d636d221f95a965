"""Almost-rigidity arithmetic: AVR pinching, Munn-Perelman constants, topology.

The Munn-Perelman quantities are astronomically large or small (C_{k,n}(k) has
hundreds of digits already for n = 4, 1 - alpha_MP underflows doubles), so
everything runs in mpmath; values close to 1 are carried as offsets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath as mp

from .constants import INF, ExponentPair

__all__ = [
    "MunnPerelmanTable",
    "BisectionError",
    "mp_C",
    "mp_C_exact",
    "mp_delta",
    "mp_h",
    "mp_h_inverse",
    "mp_alpha",
    "one_minus_alpha",
    "munn_perelman_table",
    "avr_pinch_from_deficit",
    "topology_report",
]

WORK_DPS = 60
ROOT_RTOL = mp.mpf("1e-40")
RESIDUAL_TOL = 1e-12
# C is computed exactly (Python ints) while it has fewer digits than this
_EXACT_DIGITS = 20000


class BisectionError(ArithmeticError):
    pass


def _check_kn(k: int, n: int):
    if not (isinstance(n, int) and n >= 2):
        raise ValueError("n must be an integer >= 2")
    if not (isinstance(k, int) and 1 <= k <= n):
        raise ValueError("k must be an integer in [1, n]")


def mp_C_exact(k: int, n: int, i: int) -> int:
    """C_{k,n}(i) by the integer recursion (can be very large)."""
    _check_kn(k, n)
    if not 0 <= i <= k:
        raise ValueError("need 0 <= i <= k")
    c = 1
    base = (16 * k) ** (n - 1)
    for _ in range(i):
        c = 3 + 10 * c + base * (1 + 10 * c) ** n
    return c


def mp_C(k: int, n: int, i: int) -> mp.mpf:
    """C_{k,n}(i) as an mpf (exact recursion while feasible, then extended precision)."""
    _check_kn(k, n)
    if not 0 <= i <= k:
        raise ValueError("need 0 <= i <= k")
    with mp.workdps(WORK_DPS):
        c_int = 1
        c = None
        base = (16 * k) ** (n - 1)
        for _ in range(i):
            if c is None and len(str(c_int)) * n < _EXACT_DIGITS:
                c_int = 3 + 10 * c_int + base * (1 + 10 * c_int) ** n
                continue
            if c is None:
                c = mp.mpf(c_int)
            c = 3 + 10 * c + base * (1 + 10 * c) ** n
        return +mp.mpf(c_int) if c is None else +c


def _A(k: int, n: int) -> mp.mpf:
    return mp.mpf(10) ** (k + 2) * mp_C(k, n, k)


def _lhs(k: int, A, s):
    return A * s * (1 + s / (2 * k)) ** k


def _bisect_log(fn, target, lo, hi, iters: int = 400):
    """Root of the increasing fn(s) = target for s in [lo, hi], bisecting in log s."""
    flo, fhi = fn(lo) - target, fn(hi) - target
    if flo > 0 or fhi < 0:
        raise BisectionError("root not bracketed")
    a, b = mp.log(lo), mp.log(hi)
    for _ in range(iters):
        m = (a + b) / 2
        if fn(mp.exp(m)) < target:
            a = m
        else:
            b = m
        if b - a < ROOT_RTOL:
            break
    s = mp.exp((a + b) / 2)
    resid = abs(fn(s) / target - 1)
    if resid >= RESIDUAL_TOL:
        raise BisectionError(f"residual {mp.nstr(resid, 3)} too large")
    return s, resid


def mp_delta(k: int, n: int, with_residual: bool = False):
    """Smallest positive root of 10^{k+2} C_{k,n}(k) s (1 + s/2k)^k = 1."""
    _check_kn(k, n)
    with mp.workdps(WORK_DPS):
        A = _A(k, n)
        # A s <= lhs <= A s (1 + 1/2k)^k < 2 A s on (0, 1]
        s, resid = _bisect_log(lambda s: _lhs(k, A, s), mp.mpf(1), 1 / (2 * A), mp.mpf(1))
        return (+s, resid) if with_residual else +s


def mp_h(k: int, n: int, s) -> mp.mpf:
    """h_{k,n}(s) = [1 - 10^{k+2} C s (1 + s/2k)^k]^{-1} on (0, delta)."""
    _check_kn(k, n)
    with mp.workdps(WORK_DPS):
        s = mp.mpf(s)
        if s <= 0 or s >= mp_delta(k, n):
            raise ValueError("s outside (0, delta_{k,n})")
        return 1 / (1 - _lhs(k, _A(k, n), s))


def mp_h_inverse_offset(k: int, n: int, eps, with_residual: bool = False):
    """h_{k,n}^{-1}(1 + eps) for eps > 0, never forming 1 + eps in rounded form."""
    _check_kn(k, n)
    with mp.workdps(WORK_DPS):
        eps = mp.mpf(eps)
        if eps <= 0:
            raise ValueError("h^{-1} needs an argument > 1")
        A = _A(k, n)
        target = eps / (1 + eps)  # lhs(s) = 1 - 1/y
        delta = mp_delta(k, n)
        s, resid = _bisect_log(lambda s: _lhs(k, A, s), target, target / (2 * A), delta)
        return (+s, resid) if with_residual else +s


def mp_h_inverse(k: int, n: int, y, with_residual: bool = False):
    """h_{k,n}^{-1}(y) for y > 1."""
    with mp.workdps(WORK_DPS):
        return mp_h_inverse_offset(k, n, mp.mpf(y) - 1, with_residual)


def _stage_sum(k: int, n: int) -> mp.mpf:
    """X - 1 for the nested argument of the k >= 2 branch.

    Read inside out: S_k = h_{k-1}^{-1}(1 + delta_k / 2k) / (2(k-1)), then
    S_j = h_j^{-1}(1 + S_{j+1} + ... + S_k) / (2j) for j = k-2, ..., 1, and
    X = 1 + S_1 + ... + S_k.  Alternative readings only change this function.
    """
    delta_k = mp_delta(k, n)
    total = mp_h_inverse_offset(k - 1, n, delta_k / (2 * k)) / (2 * (k - 1))
    for j in range(k - 2, 0, -1):
        total += mp_h_inverse_offset(j, n, total) / (2 * j)
    return total


def one_minus_alpha(k: int, n: int) -> mp.mpf:
    """1 - alpha_MP(k, n), kept separate because it underflows doubles."""
    _check_kn(k, n)
    with mp.workdps(WORK_DPS):
        if k == 1:
            return 1 / (1 + 2 / mp_h_inverse_offset(1, n, 1))
        x_minus_1 = _stage_sum(k, n)
        X = 1 + x_minus_1
        ratio = X / mp_h_inverse_offset(1, n, x_minus_1)
        return 1 / (1 + ratio ** n)


def mp_alpha(k: int, n: int) -> mp.mpf:
    with mp.workdps(WORK_DPS):
        return 1 - one_minus_alpha(k, n)


def _fmt(x) -> str:
    return mp.nstr(x, 12, min_fixed=-4, max_fixed=6)


@dataclass
class MunnPerelmanTable:
    n: int
    rows: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"n": self.n, "residual_tolerance": RESIDUAL_TOL, "rows": self.rows}

    def to_text(self) -> str:
        head = f"{'k':>2}  {'log10 C_k,n(k)':>16}  {'delta_k,n':>20}  {'1 - alpha_MP':>20}  {'residual':>9}"
        lines = [f"Munn-Perelman constants, n = {self.n}", head]
        for r in self.rows:
            lines.append(f"{r['k']:>2}  {r['log10_C']:>16.6f}  {r['delta']:>20}  "
                         f"{r['one_minus_alpha']:>20}  {r['residual']:>9.2e}")
        return "\n".join(lines)

    def monotone(self) -> bool:
        vals = [mp.mpf(r["one_minus_alpha"]) for r in self.rows]
        return all(b < a for a, b in zip(vals, vals[1:]))


def munn_perelman_table(n: int) -> MunnPerelmanTable:
    if not (isinstance(n, int) and n >= 2):
        raise ValueError("n must be an integer >= 2")
    rows = []
    with mp.workdps(WORK_DPS):
        for k in range(1, n + 1):
            C = mp_C(k, n, k)
            delta, resid = mp_delta(k, n, with_residual=True)
            oma = one_minus_alpha(k, n)
            rows.append({
                "k": k,
                "C": _fmt(C),
                "log10_C": float(mp.log10(C)),
                "delta": _fmt(delta),
                "alpha": _fmt(1 - oma),
                "one_minus_alpha": _fmt(oma),
                "log10_one_minus_alpha": float(mp.log10(oma)),
                "residual": float(resid),
                "in_unit_interval": bool(0 < oma < 1),
            })
    return MunnPerelmanTable(n, rows)


def avr_pinch_from_deficit(pair: ExponentPair, delta: float) -> float:
    """Lower factor (1 + delta)^{pq/(p-q)}; the exponent is -p when q = inf."""
    if pair.diagonal:
        raise ValueError("need p < q")
    if delta < 0:
        raise ValueError("deficit must be non-negative")
    if pair.q is INF:
        expo = -float(pair.p)
    else:
        p, q = float(pair.p), float(pair.q)
        expo = p * q / (p - q)
    return math.exp(expo * math.log1p(delta))


def topology_report(n: int, K: float, table: MunnPerelmanTable | None = None) -> dict:
    """Conclusions available when the sharp bound holds with AVR replaced by K."""
    if not 0 < K <= 1:
        raise ValueError("K must lie in (0, 1]")
    if table is None:
        table = munn_perelman_table(n)
    with mp.workdps(WORK_DPS):
        gap = 1 - mp.mpf(K)
        comparisons = []
        k0 = 0
        for r in table.rows:
            above = bool(gap < mp.mpf(r["one_minus_alpha"]))  # K > alpha_MP(k, n)
            comparisons.append({"k": r["k"], "alpha": r["alpha"], "K_exceeds": above})
            if above:
                k0 = max(k0, r["k"])
    order_bound = math.floor(1.0 / K)
    return {
        "n": n,
        "K": K,
        "fundamental_group_order_bound": order_bound,
        "simply_connected": bool(K > 0.5),
        "k0": k0,
        "vanishing_homotopy": [f"pi_{j}" for j in range(1, k0 + 1)],
        "contractible": bool(k0 == n),
        "comparisons": comparisons,
    }
