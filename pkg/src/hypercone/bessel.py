"""Modified Bessel function of the first kind for real order.

Two regimes, both evaluated in exponentially scaled form e^{-x} I_nu(x):

* ascending power series for x <= SERIES_CUTOFF (all terms positive, no
  cancellation);
* the uniform (Debye) expansion in 1/sqrt(nu^2 + x^2) otherwise.  Written in
  terms of R = sqrt(nu^2 + x^2) the coefficients u_k(p)/nu^k stay finite as
  nu -> 0, so the same branch also covers small orders at large argument.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

__all__ = ["bessel_i", "bessel_i_scaled_over_power", "BesselConvergenceError"]

SERIES_CUTOFF = 25.0
DEBYE_TERMS = 24
_SERIES_MAX_TERMS = 400


class BesselConvergenceError(ArithmeticError):
    pass


@lru_cache(maxsize=None)
def _debye_polynomials(K: int = DEBYE_TERMS) -> tuple[tuple[float, ...], ...]:
    """Coefficients of u_k(p) = sum_j c_kj p^j, k < K (exact recurrence)."""
    polys = [[Fraction(1)]]
    for _ in range(1, K):
        u = polys[-1]
        deg = len(u) - 1
        # 1/2 p^2 (1 - p^2) u'(p)
        du = [Fraction(j) * u[j] for j in range(1, deg + 1)]  # coefficient of p^{j-1}
        nxt = [Fraction(0)] * (deg + 4)
        for j, c in enumerate(du):
            nxt[j + 2] += c / 2
            nxt[j + 4] -= c / 2
        # 1/8 int_0^p (1 - 5 s^2) u(s) ds
        for j, c in enumerate(u):
            nxt[j + 1] += c / (8 * (j + 1))
            nxt[j + 3] -= 5 * c / (8 * (j + 3))
        while nxt and nxt[-1] == 0:
            nxt.pop()
        polys.append(nxt)
    return tuple(tuple(float(c) for c in u) for u in polys)


def _series_sum(nu, x):
    """sum_k (x^2/4)^k Gamma(nu+1) / (k! Gamma(k+nu+1))."""
    y = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _SERIES_MAX_TERMS):
        term = term * y / (k * (k + nu))
        total = total + term
        if np.all(term <= 1e-17 * total):
            break
    else:
        raise BesselConvergenceError("power series did not converge")
    return total


def _series_log_prefactor(nu, x):
    # log of e^{-x} / (2^nu Gamma(nu+1))
    return -x - nu * math.log(2.0) - gammaln(nu + 1.0)


def _debye_scaled(nu, x):
    """e^{-x} I_nu(x) by the uniform expansion; needs x large."""
    R = np.hypot(nu, x)
    p = nu / R
    p2 = p * p
    total = np.ones_like(x)
    invR_k = np.ones_like(x)
    for k, coeffs in enumerate(_debye_polynomials()):
        if k == 0:
            continue
        invR_k = invR_k / R
        # u_k(p)/nu^k = R^{-k} sum_j c_{k,k+2i} p^{2i}
        acc = np.zeros_like(x)
        for c in reversed(coeffs[k::2]):
            acc = acc * p2 + c
        term = acc * invR_k
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    # nu*eta - x, with R - x = nu^2/(R + x) to avoid cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.where(nu > 0, nu * np.log(x / (nu + R)), 0.0)
    expo = nu * nu / (R + x) + log_ratio
    return np.exp(expo) / np.sqrt(2.0 * np.pi * R) * total


def _prepare(nu, x):
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(nu < 0) or np.any(x < 0):
        raise ValueError("bessel_i needs nu >= 0 and x >= 0")
    if np.any(~np.isfinite(x)) or np.any(~np.isfinite(nu)):
        raise ValueError("bessel_i needs finite arguments")
    return np.broadcast_arrays(nu, x)


def bessel_i(nu, x, scaled: bool = False):
    """I_nu(x) for real nu >= 0, x >= 0 (array-broadcasting).

    With ``scaled=True`` returns e^{-x} I_nu(x), which never overflows.
    """
    nu_b, x_b = _prepare(nu, x)
    out = np.empty(x_b.shape, dtype=float)
    small = x_b <= SERIES_CUTOFF
    if np.any(small):
        nus, xs = nu_b[small], x_b[small]
        log_pow = np.where(xs > 0, nus * np.log(np.where(xs > 0, xs, 1.0)), 0.0)
        val = _series_sum(nus, xs) * np.exp(_series_log_prefactor(nus, xs) + log_pow)
        out[small] = np.where((xs == 0) & (nus > 0), 0.0, val)
    big = ~small
    if np.any(big):
        out[big] = _debye_scaled(nu_b[big], x_b[big])
    if not scaled:
        with np.errstate(over="ignore"):
            out = out * np.exp(x_b)
    return out[()] if out.ndim == 0 else out


def bessel_i_scaled_over_power(nu, x):
    """e^{-x} I_nu(x) / x^nu, finite at x = 0 where it equals 1/(2^nu Gamma(nu+1))."""
    nu_b, x_b = _prepare(nu, x)
    out = np.empty(x_b.shape, dtype=float)
    small = x_b <= SERIES_CUTOFF
    if np.any(small):
        nus, xs = nu_b[small], x_b[small]
        out[small] = _series_sum(nus, xs) * np.exp(_series_log_prefactor(nus, xs))
    big = ~small
    if np.any(big):
        xb, nb = x_b[big], nu_b[big]
        out[big] = _debye_scaled(nb, xb) * np.exp(-nb * np.log(xb))
    return out[()] if out.ndim == 0 else out
