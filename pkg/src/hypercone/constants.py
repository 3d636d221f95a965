"""Closed-form constants of the sharp hypercontractivity estimate.

Exponents live in the extended half-line [1, inf]; infinity is the dedicated
marker :data:`INF` rather than ``float('inf')`` so the limiting conventions of
M(p, q) are applied as explicit cases.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Union

__all__ = [
    "INF",
    "Extended",
    "ExponentPair",
    "SharpBoundInputs",
    "m_constant",
    "omega",
    "log_omega",
    "sharp_bound",
    "log_sharp_bound",
    "extremizer_alpha",
    "extremizer_beta",
    "gaussian_time_shift",
    "optimal_a",
    "h_ratio",
]

# |1/p - 1/q| below this is treated as p == q
SAME_EXPONENT_EPS = 1e-15


class _Infinity(enum.Enum):
    INF = "inf"

    def __repr__(self) -> str:
        return "INF"

    def __str__(self) -> str:
        return "inf"


INF = _Infinity.INF
Extended = Union[float, _Infinity]


def is_inf(x: Extended) -> bool:
    return x is INF


def recip(x: Extended) -> float:
    """1/x with 1/INF = 0 exactly."""
    return 0.0 if x is INF else 1.0 / float(x)


def conjugate(x: Extended) -> Extended:
    """Hölder conjugate x/(x-1), mapping 1 <-> INF."""
    if x is INF:
        return 1.0
    x = float(x)
    if x == 1.0:
        return INF
    return x / (x - 1.0)


def parse_extended(value) -> Extended:
    if value is INF:
        return INF
    if isinstance(value, str) and value.strip().lower() in {"inf", "infinity", "oo"}:
        return INF
    x = float(value)
    if math.isinf(x):
        return INF
    return x


def _xlogx(u: float) -> float:
    return 0.0 if u == 0.0 else u * math.log(u)


@dataclass(frozen=True)
class ExponentPair:
    """An admissible exponent pair 1 <= p <= q <= inf."""

    p: Extended
    q: Extended

    def __post_init__(self):
        p = parse_extended(self.p)
        q = parse_extended(self.q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        for name, x in (("p", p), ("q", q)):
            if x is not INF and not (x >= 1.0 and math.isfinite(x)):
                raise ValueError(f"{name} must lie in [1, inf], got {x!r}")
        if recip(p) < recip(q):
            raise ValueError(f"need p <= q, got p={p}, q={q}")

    @property
    def inv_p(self) -> float:
        return recip(self.p)

    @property
    def inv_q(self) -> float:
        return recip(self.q)

    @property
    def gap(self) -> float:
        """1/p - 1/q, zero when the exponents coincide."""
        d = self.inv_p - self.inv_q
        return 0.0 if abs(d) < SAME_EXPONENT_EPS else d

    @property
    def diagonal(self) -> bool:
        return self.gap == 0.0

    def dual(self) -> "ExponentPair":
        """The pair (q', p'); H_t has the same norm on both."""
        return ExponentPair(conjugate(self.q), conjugate(self.p))

    def to_json(self) -> dict:
        return {"p": _ext_json(self.p), "q": _ext_json(self.q)}


def _ext_json(x: Extended):
    return "inf" if x is INF else float(x)


@dataclass(frozen=True)
class SharpBoundInputs:
    pair: ExponentPair
    N: float
    avr: float
    t: float

    def __post_init__(self):
        if not self.N > 1:
            raise ValueError("N must exceed 1")
        if not 0 < self.avr <= 1:
            raise ValueError("avr must lie in (0, 1]")
        if not self.t > 0:
            raise ValueError("t must be positive")


def _log_a(u: float) -> float:
    # log(p^{1/p} (1-1/p)^{1-1/p}) written in u = 1/p; 0 log 0 = 0 gives the
    # p = 1 and p = inf conventions
    return -_xlogx(u) + _xlogx(1.0 - u)


def log_m_constant(pair: ExponentPair) -> float:
    if pair.diagonal:
        return 0.0
    u, v = pair.inv_p, pair.inv_q
    if u == 1.0 and v == 0.0:
        return 0.0
    return _log_a(u) - _log_a(v) + _xlogx(u - v)


def m_constant(pair: ExponentPair) -> float:
    """M(p, q) with M(p,p)=1, M(1,q)=q^{-1/q}, M(p,inf)=(1-1/p)^{1-1/p}, M(1,inf)=1."""
    return math.exp(log_m_constant(pair))


def log_omega(N: float) -> float:
    return 0.5 * N * math.log(math.pi) - math.lgamma(0.5 * N + 1.0)


def omega(N: float) -> float:
    """Volume of the unit ball in dimension N (real N allowed)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return math.exp(log_omega(N))


def log_sharp_bound(pair: ExponentPair, N: float, avr: float, t: float) -> float:
    g = pair.gap
    if g == 0.0:
        return 0.0
    return (0.5 * N * log_m_constant(pair) - g * math.log(avr)
            - 0.5 * N * g * math.log(4.0 * math.pi * t))


def sharp_bound(inputs: SharpBoundInputs) -> float:
    """M^{N/2} AVR^{1/q-1/p} (4 pi t)^{-(N/2)(1/p-1/q)}."""
    return math.exp(log_sharp_bound(inputs.pair, inputs.N, inputs.avr, inputs.t))


def _require_interior(pair: ExponentPair) -> tuple[float, float]:
    if pair.p is INF or pair.q is INF or pair.p == 1.0 or pair.diagonal:
        raise ValueError("extremizers are characterised only for 1 < p < q < inf")
    return float(pair.p), float(pair.q)


def extremizer_alpha(pair: ExponentPair, t0: float) -> float:
    """Dilation of the Gaussian extremizer exp(-alpha d^2) at time t0."""
    p, _ = _require_interior(pair)
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    return p / (p - 1.0) * pair.gap / (4.0 * t0)


def extremizer_beta(pair: ExponentPair, t0: float) -> float:
    """Dilation of H_{t0} applied to the extremizer; equals alpha/(1+4 alpha t0)."""
    _, q = _require_interior(pair)
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    return q / (q - 1.0) * pair.gap / (4.0 * t0)


def gaussian_time_shift(pair: ExponentPair, t0: float) -> float:
    """Heat-kernel time of the extremizer, t0 q (p-1)/(q-p) = 1/(4 beta) - t0."""
    p, q = _require_interior(pair)
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    return t0 * q * (p - 1.0) / (q - p)


def optimal_a(pair: ExponentPair) -> float:
    """Maximiser of h(a) = (1+a)^{1/q-1} / a^{1/p-1}; p - 1 when q = inf."""
    if pair.p is INF or pair.p == 1.0 or pair.diagonal:
        raise ValueError("optimal_a needs 1 < p < q <= inf")
    p = float(pair.p)
    if pair.q is INF:
        return p - 1.0
    q = float(pair.q)
    return q * (p - 1.0) / (q - p)


def h_ratio(a: float, pair: ExponentPair) -> float:
    return math.exp((pair.inv_q - 1.0) * math.log1p(a) - (pair.inv_p - 1.0) * math.log(a))
