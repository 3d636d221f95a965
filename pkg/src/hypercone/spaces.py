"""Model spaces: N-Euclidean cones, a smooth surface of revolution, radial grids."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .constants import log_omega, omega

__all__ = [
    "ConeSpace",
    "ConePoint",
    "SurfaceSpace",
    "RadialGrid",
    "GridCalibrationError",
    "cone_avr",
    "ball_volume_tip",
    "ball_volume",
    "cone_distance",
    "surface_avr",
    "make_grid",
    "space_from_json",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ConeSpace:
    """Cone over a cross-section of total measure ``sigma``, measure r^{N-1} dr x m_Z.

    For N = 2 the cross-section is a circle of length ``theta = sigma``.
    """

    N: float
    sigma: float

    def __post_init__(self):
        if not self.N > 1:
            raise ValueError("cone dimension must exceed 1")
        if not self.sigma > 0:
            raise ValueError("cross-section measure must be positive")
        if self.N == 2 and self.sigma > TWO_PI * (1 + 1e-15):
            raise ValueError("2-D cones need theta <= 2 pi")

    @classmethod
    def planar(cls, theta: float) -> "ConeSpace":
        return cls(2.0, float(theta))

    @classmethod
    def with_avr(cls, N: float, avr: float) -> "ConeSpace":
        return cls(float(N), avr * N * omega(N))

    @property
    def theta(self) -> float:
        if self.N != 2:
            raise AttributeError("theta is defined for 2-D cones only")
        return self.sigma

    @property
    def avr(self) -> float:
        return cone_avr(self)

    def rescaled(self, r: float, tau: float) -> "ConeSpace":
        """The cone (X, r d, tau m), expressed again in its own radial coordinate."""
        return ConeSpace(self.N, self.sigma * tau / r ** self.N)

    def to_json(self) -> dict:
        if self.N == 2:
            return {"kind": "cone", "N": 2.0, "theta": self.sigma, "sigma": self.sigma}
        return {"kind": "cone", "N": self.N, "sigma": self.sigma}


@dataclass(frozen=True)
class ConePoint:
    r: float
    phi: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("radial coordinate must be non-negative")

    @property
    def is_tip(self) -> bool:
        return self.r == 0.0


@dataclass(frozen=True)
class SurfaceSpace:
    """Surface of revolution with profile phi(r) = c r + (1-c)(1 - e^{-r}).

    phi(0) = 0, phi'(0) = 1 and phi'' <= 0, so the surface is smooth at the pole,
    has non-negative Gauss curvature -phi''/phi and asymptotic slope c.
    """

    c: float

    def __post_init__(self):
        if not 0 < self.c <= 1:
            raise ValueError("slope c must lie in (0, 1]")

    N = 2.0

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return self.c * r - (1.0 - self.c) * np.expm1(-r)

    def profile_prime(self, r):
        return self.c + (1.0 - self.c) * np.exp(-np.asarray(r, dtype=float))

    def curvature(self, r):
        r = np.asarray(r, dtype=float)
        return (1.0 - self.c) * np.exp(-r) / np.where(r > 0, self.profile(r), 1.0)

    def profile_integral(self, r):
        """int_0^r phi(s) ds."""
        r = np.asarray(r, dtype=float)
        return 0.5 * self.c * r * r + (1.0 - self.c) * (r + np.expm1(-r))

    def ball_area(self, r):
        """Area of the geodesic ball of radius r around the pole."""
        return TWO_PI * self.profile_integral(r)

    @property
    def avr(self) -> float:
        return self.c

    def to_json(self) -> dict:
        return {"kind": "surface", "N": 2.0, "c": self.c}


def cone_avr(cone: ConeSpace) -> float:
    return math.exp(math.log(cone.sigma) - math.log(cone.N) - log_omega(cone.N))


def ball_volume_tip(cone: ConeSpace, r):
    """m(B_r(tip)) = sigma r^N / N."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    out = cone.sigma * r ** cone.N / cone.N
    return out[()] if out.ndim == 0 else out


def _angular_gap(cone: ConeSpace, dphi):
    theta = cone.theta
    d = np.mod(np.abs(dphi), theta)
    return np.minimum(d, theta - d)


def cone_distance(cone: ConeSpace, x: ConePoint, y: ConePoint) -> float:
    """Cone distance on a 2-D cone of angle theta."""
    delta = float(_angular_gap(cone, x.phi - y.phi))
    if delta < math.pi:
        d2 = x.r * x.r + y.r * y.r - 2.0 * x.r * y.r * math.cos(delta)
        return math.sqrt(max(d2, 0.0))
    return x.r + y.r


def cone_distance_array(cone: ConeSpace, r, phi, rp, php):
    delta = _angular_gap(cone, np.asarray(phi) - np.asarray(php))
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    d2 = np.maximum(r * r + rp * rp - 2.0 * r * rp * np.cos(delta), 0.0)
    return np.where(delta < math.pi, np.sqrt(d2), r + rp)


def ball_volume(cone: ConeSpace, x: ConePoint, rho: float) -> float:
    """m(B_rho(x)) on a 2-D cone, by radial integration of the angular measure."""
    from scipy.integrate import quad

    theta = cone.theta
    if rho <= 0:
        return 0.0
    if x.r == 0:
        return float(ball_volume_tip(cone, rho))
    r = x.r

    def angular(s):
        if s + r < rho:
            return theta
        if s == 0:
            return theta if r < rho else 0.0
        c = (r * r + s * s - rho * rho) / (2.0 * r * s)
        if c >= 1:
            return 0.0
        return min(2.0 * math.acos(max(c, -1.0)), theta)

    lo = max(0.0, r - rho)
    hi = r + rho
    pts = [p for p in (rho - r,) if lo < p < hi]
    full = 0.0
    if r < rho:
        # inner disc around the tip is entirely inside the ball
        full = theta * (rho - r) ** 2 / 2.0
        lo = rho - r
        pts = []
    val, _ = quad(lambda s: angular(s) * s, lo, hi, points=pts or None,
                  epsabs=0.0, epsrel=1e-12, limit=200)
    return full + val


def surface_avr(s: SurfaceSpace, r_check: float = 1e5, tol: float = 1e-4) -> dict:
    """AVR of the surface together with a numerical check at a large radius."""
    ratio = float(s.ball_area(r_check) / (math.pi * r_check ** 2))
    return {"avr": s.c, "r": r_check, "ratio": ratio,
            "ok": abs(ratio - s.c) <= tol, "tolerance": tol}


class GridCalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    """Composite Gauss quadrature for int_0^R f(r) r^{N-1} dr.

    The panel touching the origin is Gauss-Jacobi with weight r^{N-1}; the rest are
    Gauss-Legendre with the factor r^{N-1} folded into the weights.
    """

    nodes: np.ndarray
    weights: np.ndarray
    R: float
    N: float
    order: int
    edges: np.ndarray = field(repr=False)
    diff: np.ndarray = field(repr=False)
    calibration: tuple = field(default=(), repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def key(self) -> tuple:
        """Grids are deterministic in these parameters; used as a cache key."""
        return (self.N, self.R, self.size, self.order)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def gaussian_moment(self, t: float) -> float:
        return self.integrate(np.exp(-self.nodes ** 2 / (4.0 * t)))

    def derivative(self, values):
        """Panelwise spectral derivative (exact for degree < order)."""
        v = np.asarray(values, dtype=float).reshape(-1, self.order)
        return np.einsum("pij,pj->pi", self.diff, v).reshape(-1)


def gaussian_moment_exact(N: float, t: float) -> float:
    """int_0^inf e^{-r^2/4t} r^{N-1} dr."""
    return math.exp(0.5 * N * math.log(4.0 * t) + gammaln(0.5 * N) - math.log(2.0))


def _diff_matrix(x: np.ndarray) -> np.ndarray:
    n = x.size
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    w = 1.0 / np.prod(dx, axis=1)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def make_grid(N: float, t_max: float, points: int, t_min: float | None = None,
              order: int = 16, R: float | None = None, tol: float = 1e-10) -> RadialGrid:
    """Radial grid on [0, R], R = 12 sqrt(t_max) max(1, sqrt N), self-calibrated.

    Calibration compares int e^{-r^2/4t} r^{N-1} dr with its closed form at
    geometrically spaced times in [t_min, t_max]; pass the smallest time a session
    will use as ``t_min`` (default: t_max only).
    """
    if points < 64:
        raise ValueError("need at least 64 grid points")
    if t_max <= 0:
        raise ValueError("t_max must be positive")
    panels = max(1, int(round(points / order)))
    if R is None:
        R = 12.0 * math.sqrt(t_max) * max(1.0, math.sqrt(N))
    edges = np.linspace(0.0, R, panels + 1)
    h = edges[1] - edges[0]

    xj, wj = roots_jacobi(order, 0.0, N - 1.0)  # weight (1+x)^{N-1} on [-1, 1]
    first_nodes = 0.5 * h * (xj + 1.0)
    first_w = wj * (0.5 * h) ** N

    xl, wl = np.polynomial.legendre.leggauss(order)
    mids = 0.5 * (edges[1:-1] + edges[2:])
    rest_nodes = (mids[:, None] + 0.5 * h * xl[None, :]).reshape(-1)
    rest_w = (0.5 * h * wl[None, :] * np.ones((panels - 1, 1))).reshape(-1)
    rest_w = rest_w * rest_nodes ** (N - 1.0)

    nodes = np.concatenate([first_nodes, rest_nodes])
    weights = np.concatenate([first_w, rest_w])

    t_min = t_max if t_min is None else t_min
    times = np.geomspace(t_min, t_max, 7) if t_min < t_max else np.array([t_max])
    errs = []
    for t in times:
        approx = float(np.dot(weights, np.exp(-nodes ** 2 / (4.0 * t))))
        exact = gaussian_moment_exact(N, t)
        errs.append((float(t), abs(approx / exact - 1.0)))
    worst = max(e for _, e in errs)
    if worst > tol:
        raise GridCalibrationError(
            f"radial grid with {nodes.size} nodes misses calibration: rel err {worst:.2e} > {tol:.0e}")
    # nodes are affine images of one reference panel (two, counting the Jacobi one)
    D_first = _diff_matrix(first_nodes)
    D_rest = _diff_matrix(0.5 * h * xl)
    diff = np.concatenate([D_first[None], np.broadcast_to(D_rest, (panels - 1, order, order))])
    return RadialGrid(nodes=nodes, weights=weights, R=float(R), N=float(N), order=order,
                      edges=edges, diff=diff, calibration=tuple(errs))


def space_from_json(doc: dict):
    """Inverse of ``to_json`` for the descriptors {kind, N, theta?, sigma?, c?}."""
    kind = doc.get("kind")
    if kind == "euclidean":
        N = float(doc.get("N", 2.0))
        return ConeSpace.with_avr(N, 1.0)
    if kind == "cone":
        N = float(doc.get("N", 2.0))
        if "theta" in doc:
            return ConeSpace(N, float(doc["theta"]))
        if "sigma" in doc:
            return ConeSpace(N, float(doc["sigma"]))
        if "avr" in doc:
            return ConeSpace.with_avr(N, float(doc["avr"]))
        raise ValueError("cone descriptor needs theta, sigma or avr")
    if kind == "surface":
        return SurfaceSpace(float(doc["c"]))
    raise ValueError(f"unknown space kind {kind!r}")
