"""Heat kernels on Euclidean space, cones and their radial reductions."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .bessel import bessel_i, bessel_i_scaled_over_power
from .spaces import (ConePoint, ConeSpace, ball_volume, cone_avr,
                     cone_distance, cone_distance_array)

__all__ = [
    "KernelEval",
    "SeriesConvergenceError",
    "euclidean_kernel",
    "tip_kernel",
    "radial_kernel",
    "carslaw_kernel",
    "carslaw_values",
    "carslaw_images",
    "gaussian_bound_check",
]

SERIES_RTOL = 1e-14
_MAX_MODES = 100_000


class SeriesConvergenceError(ArithmeticError):
    pass


@dataclass
class KernelEval:
    value: float
    space: dict
    points: tuple
    t: float
    series_terms_used: int = 0
    truncation_error_bound: float = 0.0
    converged: bool = True
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "space": self.space,
            "points": [list(p) for p in self.points],
            "t": self.t,
            "series_terms_used": self.series_terms_used,
            "truncation_error_bound": self.truncation_error_bound,
            "converged": self.converged,
            "tolerance": SERIES_RTOL,
        }


def euclidean_kernel(n: int, d, t: float):
    """(4 pi t)^{-n/2} exp(-d^2 / 4t)."""
    if t <= 0:
        raise ValueError("t must be positive")
    d = np.asarray(d, dtype=float)
    out = np.exp(-d * d / (4.0 * t) - 0.5 * n * math.log(4.0 * math.pi * t))
    return out[()] if out.ndim == 0 else out


def tip_kernel(cone: ConeSpace, r, s: float):
    """h(tip, x, s) = AVR^{-1} (4 pi s)^{-N/2} exp(-r^2 / 4s) with r = d(tip, x)."""
    if s <= 0:
        raise ValueError("s must be positive")
    r = np.asarray(r, dtype=float)
    N = cone.N
    out = np.exp(-r * r / (4.0 * s) - 0.5 * N * math.log(4.0 * math.pi * s)
                 - math.log(cone_avr(cone)))
    return out[()] if out.ndim == 0 else out


def radial_kernel(N: float, r, rp, t: float):
    """Bessel-process kernel for int_0^inf K_t(r, r') f(r') r'^{N-1} dr'.

    K_t = (1/2t) (r r')^{1-N/2} e^{-(r^2+r'^2)/4t} I_{N/2-1}(r r'/2t), evaluated as
    (2t)^{-N/2} e^{-(r-r')^2/4t} [e^{-z} I_nu(z) / z^nu] with z = r r'/2t, which is
    finite at r r' = 0.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    nu = 0.5 * N - 1.0
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    z = r * rp / (2.0 * t)
    if nu >= 0:
        core = bessel_i_scaled_over_power(nu, z)
    else:
        # 1 < N < 2: I_nu with negative order; use I_{-mu} = I_mu + (2/pi) sin(mu pi) K_mu
        from scipy.special import ive, kve
        mu = -nu
        with np.errstate(divide="ignore", invalid="ignore"):
            val = ive(mu, z) + (2.0 / math.pi) * math.sin(mu * math.pi) * kve(mu, z) * np.exp(-2 * z)
            core = np.where(z > 0, val * z ** mu, 1.0 / (2.0 ** nu * math.exp(gammaln(nu + 1.0))))
    out = (2.0 * t) ** (-0.5 * N) * np.exp(-(r - rp) ** 2 / (4.0 * t)) * core
    return out[()] if out.ndim == 0 else out


def _mode_orders(theta: float, K: int) -> np.ndarray:
    return 2.0 * math.pi * np.arange(K + 1) / theta


def carslaw_values(cone: ConeSpace, r, phi, rp, php, t: float, rtol: float = SERIES_RTOL):
    """Vectorised angular-series kernel on a 2-D cone.

    Returns (values, modes_used, tail_bound, condition) where condition is
    sum |terms| / |sum|, the factor by which rounding error is amplified.
    Truncation: the scaled terms
    e^{-z} I_{nu_k}(z) decrease in k and nu -> I_nu(z) is log-concave, so once the
    consecutive ratio rho < 1 the tail is bounded by term_{K+1}/(1-rho).  We stop
    after three consecutive modes whose tail bound is below rtol * partial sum.
    """
    if cone.N != 2:
        raise ValueError("angular series needs a 2-D cone")
    if t <= 0:
        raise ValueError("t must be positive")
    theta = cone.theta
    r, phi, rp, php = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (r, phi, rp, php)))
    z = r * rp / (2.0 * t)
    dphi = phi - php
    pref = np.exp(-(r - rp) ** 2 / (4.0 * t)) / (2.0 * theta * t)
    total = bessel_i(0.0, z, scaled=True)
    absum = total.copy()
    k = 0
    quiet = 0
    prev = total.copy()
    bound = np.zeros_like(total)
    step = 2.0 * math.pi / theta
    while True:
        k += 1
        if k > _MAX_MODES:
            raise SeriesConvergenceError("angular series did not reach tolerance")
        term = bessel_i(k * step, z, scaled=True)
        total = total + 2.0 * term * np.cos(k * step * dphi)
        absum = absum + 2.0 * term
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = np.where(prev > 0, term / prev, 0.0)
            bound = np.where(rho < 1, 2.0 * term * rho / (1.0 - rho), np.inf)
        prev = term
        scale = np.maximum(np.abs(total), 1e-300)
        if np.all(bound <= rtol * scale):
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    with np.errstate(divide="ignore"):
        cond = np.where(total > 0, absum / np.abs(total), np.inf)
    return pref * total, k, pref * bound, cond


def carslaw_images(cone: ConeSpace, x: ConePoint, y: ConePoint, t: float) -> tuple[float, float]:
    """Same kernel written as Euclidean images plus a diffraction integral.

    Poisson summation of the angular series against the integral representation
    of I_nu gives, with alpha = 2 pi / theta and psi the angle between x and y,

        h = sum_{|psi + j theta| < pi} (4 pi t)^{-1} e^{-d_j^2/4t}
            - (2 pi theta t)^{-1} int_0^inf e^{-(r^2 + r'^2 + 2 r r' cosh s)/4t}
              [B(pi + psi) + B(pi - psi)] ds,
        B(u) = sin(alpha u) / (2 (cosh(alpha s) - cos(alpha u))).

    No term is larger than the result by more than e^{-(r+r')^2/4t} relative to
    the images, so this is free of the cancellation the series suffers when the
    points are far apart in angle.  Returns (value, quadrature error estimate).
    """
    from scipy.integrate import IntegrationWarning, quad

    theta = cone.theta
    r, rp = x.r, y.r
    psi = (x.phi - y.phi) % theta
    alpha = 2.0 * math.pi / theta
    images = 0.0
    jmax = int(math.ceil(math.pi / theta)) + 2
    for j in range(-jmax - 1, jmax + 2):
        ang = psi + j * theta
        if abs(ang) <= math.pi:
            weight = 0.5 if abs(abs(ang) - math.pi) < 1e-15 else 1.0
            d2 = r * r + rp * rp - 2.0 * r * rp * math.cos(ang)
            images += weight * math.exp(-max(d2, 0.0) / (4.0 * t)) / (4.0 * math.pi * t)
    # for integer alpha the two B terms cancel exactly (pure image solution)
    if r == 0.0 or rp == 0.0 or abs(alpha - round(alpha)) < 1e-12:
        return images, 0.0

    base = (r * r + rp * rp) / (4.0 * t)
    z = r * rp / (2.0 * t)

    def B(u, s):
        return math.sin(alpha * u) / (2.0 * (math.cosh(alpha * s) - math.cos(alpha * u)))

    def integrand(s):
        return math.exp(-base - z * math.cosh(s)) * (B(math.pi + psi, s) + B(math.pi - psi, s))

    # near a shadow boundary B is a Lorentzian of width ~ |dist(alpha u, 2 pi Z)|/alpha
    widths = []
    for u in (math.pi + psi, math.pi - psi):
        w = abs(math.remainder(alpha * u, 2.0 * math.pi)) / alpha
        if 0 < w < 1:
            widths += [w, 5 * w]
    s_hi = math.acosh(1.0 + 800.0 / z) if z > 0 else 50.0
    pts = sorted(p for p in widths if p < s_hi) or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(integrand, 0.0, s_hi, points=pts, epsabs=0.0, epsrel=1e-13, limit=400)
    corr = val / (2.0 * math.pi * theta * t)
    return images - corr, err / (2.0 * math.pi * theta * t)


def carslaw_kernel(cone: ConeSpace, x: ConePoint, y: ConePoint, t: float) -> KernelEval:
    """Heat kernel h(x, y, t) on a 2-D cone of angle theta.

    Sums the angular Bessel series; if its condition number would cost more than
    three digits below the series tolerance the image representation is used.
    """
    val, k, bound, cond = carslaw_values(cone, x.r, x.phi, y.r, y.phi, t)
    val, bound, cond = float(val), float(bound), float(cond)
    method = "series"
    if cond * np.finfo(float).eps > 1e-13:
        val, qerr = carslaw_images(cone, x, y, t)
        bound = qerr
        method = "images"
    return KernelEval(
        value=val,
        space=cone.to_json(),
        points=((x.r, x.phi), (y.r, y.phi)),
        t=t,
        series_terms_used=k + 1,
        truncation_error_bound=bound,
        converged=bound < 1e-12 * max(val, 1e-300),
        extra={"method": method, "condition": cond},
    )


def gaussian_bound_check(cone: ConeSpace, eps: float, samples: int, seed: int = 0,
                         r_max: float = 4.0, t_range=(0.05, 20.0)) -> dict:
    """Smallest C >= 1 making both two-sided Gaussian bounds hold on a random sample.

    C must dominate m(B_sqrt t(x)) h e^{d^2/(4+eps)t} (upper bound) and its
    reciprocal with 4-eps (lower bound).
    """
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    theta = cone.theta
    worst_upper = 0.0
    worst_lower = 0.0
    records = []
    for _ in range(samples):
        x = ConePoint(float(rng.uniform(0, r_max)), float(rng.uniform(0, theta)))
        y = ConePoint(float(rng.uniform(0, r_max)), float(rng.uniform(0, theta)))
        t = float(np.exp(rng.uniform(*np.log(t_range))))
        records.append(_gaussian_ratios(cone, x, y, t, eps))
    for up, low in records:
        worst_upper = max(worst_upper, up)
        worst_lower = max(worst_lower, low)
    C = max(1.0, worst_upper, worst_lower)
    return {
        "space": cone.to_json(),
        "eps": eps,
        "samples": samples,
        "seed": seed,
        "C": C,
        "upper_ratio_max": worst_upper,
        "lower_ratio_max": worst_lower,
        "finite": math.isfinite(C),
    }


def _gaussian_ratios(cone: ConeSpace, x: ConePoint, y: ConePoint, t: float, eps: float):
    h = carslaw_kernel(cone, x, y, t).value
    d = cone_distance(cone, x, y)
    vol = ball_volume(cone, x, math.sqrt(t))
    mh = vol * h
    upper = mh * math.exp(d * d / ((4.0 + eps) * t))
    lower = math.exp(-d * d / ((4.0 - eps) * t)) / mh
    return upper, lower


def gaussian_ratios(cone: ConeSpace, x: ConePoint, y: ConePoint, t: float, eps: float):
    """(upper, lower) ratios whose maximum is the constant C at a single sample."""
    return _gaussian_ratios(cone, x, y, t, eps)


__all__ += ["gaussian_ratios", "cone_distance_array"]
