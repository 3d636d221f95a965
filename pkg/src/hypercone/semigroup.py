"""Discretised heat semigroup on radial functions.

Both space families are reduced to a radial model: nodes r_i, measure weights
mu_i (so that int f dm ~ sum mu_i f_i) and a propagator P_t with H_t f ~ P_t f.
The discrete kernel h_ij = P_ij / mu_j is symmetric, hence P_t is self-adjoint
for the weighted inner product.

* cones: P_t = K_t(r_i, r_j) w_j with the exact Bessel-process kernel, so there is
  no time discretisation at all;
* the surface of revolution: finite volumes on a stretched grid, Neumann at the
  pole (natural), absorbing at the outer radius, Crank-Nicolson in time with a
  short backward-Euler start.
"""
from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded
from scipy.special import logsumexp

from .constants import INF, Extended, parse_extended
from .kernels import euclidean_kernel, radial_kernel
from .spaces import ConeSpace, RadialGrid, SurfaceSpace, make_grid

__all__ = [
    "RadialFunction",
    "ConeModel",
    "SurfaceModel",
    "GridMismatchError",
    "StepSizeError",
    "apply_heat",
    "lp_norm",
    "log_lp_norm",
    "integral",
    "cn_amplification",
    "clear_kernel_cache",
    "entropy",
    "dirichlet_energy",
    "crank_nicolson",
    "energy_log_convexity_trace",
    "fourier_gaussian_check",
]

# entries below this count as exact zeros in u log u
ENTROPY_FLOOR = 1e-300


class GridMismatchError(ValueError):
    pass


class StepSizeError(ArithmeticError):
    pass


# Cone kernel matrices depend on (N, grid, t) only, so cones with different
# cross-sections share them.  Bounded by total bytes.
_KERNEL_CACHE: OrderedDict = OrderedDict()
_KERNEL_CACHE_BYTES = 512 * 2 ** 20
_KERNEL_LOCK = threading.Lock()


def _cached_kernel(grid: RadialGrid, t: float) -> np.ndarray:
    key = (grid.key, float(t))
    with _KERNEL_LOCK:
        K = _KERNEL_CACHE.get(key)
        if K is not None:
            _KERNEL_CACHE.move_to_end(key)
            return K
    r = grid.nodes
    iu, ju = np.triu_indices(r.size)
    vals = radial_kernel(grid.N, r[iu], r[ju], t)
    K = np.empty((r.size, r.size))
    K[iu, ju] = vals
    K[ju, iu] = vals
    K.setflags(write=False)
    with _KERNEL_LOCK:
        _KERNEL_CACHE[key] = K
        while sum(v.nbytes for v in _KERNEL_CACHE.values()) > _KERNEL_CACHE_BYTES and len(_KERNEL_CACHE) > 1:
            _KERNEL_CACHE.popitem(last=False)
    return K


def clear_kernel_cache() -> None:
    with _KERNEL_LOCK:
        _KERNEL_CACHE.clear()


class _RadialModel:
    """Common interface; subclasses set nodes, mu, N, space."""

    nodes: np.ndarray
    mu: np.ndarray
    N: float
    space: object

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def avr(self) -> float:
        return self.space.avr

    def function(self, values, nonnegative: bool = False) -> "RadialFunction":
        return RadialFunction(self, np.asarray(values, dtype=float), nonnegative)

    def sample(self, fn, nonnegative: bool = False) -> "RadialFunction":
        return self.function(fn(self.nodes), nonnegative)

    def propagator(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def apply(self, values: np.ndarray, t: float) -> np.ndarray:
        return self.propagator(t) @ values

    def kernel_matrix(self, t: float) -> np.ndarray:
        return self.propagator(t) / self.mu[None, :]

    def kernel_diagonal(self, t: float) -> np.ndarray:
        return np.diag(self.propagator(t)) / self.mu

    def origin_diagonal(self, t: float) -> float:
        """h(o, o, t) at the tip / pole."""
        raise NotImplementedError

    def origin_column(self, t: float) -> np.ndarray:
        """h(., o, t) at the nodes."""
        raise NotImplementedError

    def energy(self, values: np.ndarray) -> float:
        raise NotImplementedError

    def descriptor(self) -> dict:
        return self.space.to_json()


class ConeModel(_RadialModel):
    """Radial functions on a cone, sampled on a composite Gauss grid."""

    def __init__(self, cone: ConeSpace, grid: RadialGrid):
        if abs(grid.N - cone.N) > 0:
            raise GridMismatchError("grid dimension differs from the cone's")
        self.space = cone
        self.cone = cone
        self.grid = grid
        self.N = cone.N
        self.nodes = grid.nodes
        self.mu = cone.sigma * grid.weights

    @classmethod
    def build(cls, cone: ConeSpace, t_max: float, points: int = 512, t_min: float | None = None,
              **kw) -> "ConeModel":
        return cls(cone, make_grid(cone.N, t_max, points, t_min=t_min, **kw))

    def propagator(self, t: float) -> np.ndarray:
        if t <= 0:
            raise ValueError("t must be positive")
        return _cached_kernel(self.grid, t) * self.grid.weights[None, :]

    def kernel_matrix(self, t: float) -> np.ndarray:
        return _cached_kernel(self.grid, t) / self.cone.sigma

    def kernel_diagonal(self, t: float) -> np.ndarray:
        return radial_kernel(self.N, self.nodes, self.nodes, t) / self.cone.sigma

    def origin_diagonal(self, t: float) -> float:
        return float(radial_kernel(self.N, 0.0, 0.0, t)) / self.cone.sigma

    def origin_column(self, t: float) -> np.ndarray:
        return radial_kernel(self.N, self.nodes, 0.0, t) / self.cone.sigma

    def radial_diagonal(self, r, t: float):
        """Continuous h(r, r, t) of the radial kernel (any r, not only nodes)."""
        return radial_kernel(self.N, r, r, t) / self.cone.sigma

    def derivative(self, values: np.ndarray) -> np.ndarray:
        return self.grid.derivative(values)

    def energy(self, values: np.ndarray) -> float:
        du = self.derivative(values)
        return float(np.dot(self.mu, du * du))


class SurfaceModel(_RadialModel):
    """Finite-volume radial heat flow on a surface of revolution.

    Node i sits at r_i = R sinh(kappa i/n)/sinh(kappa) (dense near the pole);
    its cell runs between neighbouring midpoints, so the cell masses
    mu_i = 2 pi int phi are exact and the pole cell needs no special treatment.
    The last node carries the absorbing condition u = 0 and is dropped.
    """

    def __init__(self, surface: SurfaceSpace, points: int = 1200, R: float | None = None,
                 t_max: float = 1.0, stretch: float = 4.0, steps: int = 4000,
                 scheme: str = "cn"):
        if points < 32:
            raise ValueError("need at least 32 nodes")
        if scheme not in {"cn", "exact"}:
            raise ValueError("scheme must be 'cn' or 'exact'")
        if R is None:
            R = 12.0 * math.sqrt(2.0 * t_max)
        self.space = surface
        self.surface = surface
        self.N = 2.0
        self.R = float(R)
        self.steps = int(steps)
        self.scheme = scheme
        n = points
        x = np.arange(n + 1) / n
        full = self.R * np.sinh(stretch * x) / math.sinh(stretch)
        mids = 0.5 * (full[1:] + full[:-1])
        bounds = np.concatenate([[0.0], mids])
        Phi = surface.profile_integral(bounds)
        self.nodes = full[:-1]
        self.mu = 2.0 * math.pi * np.diff(Phi)
        # face i+1/2 between node i and i+1 (the last face touches the absorbing node)
        self.flux = 2.0 * math.pi * surface.profile(mids) / np.diff(full)
        diag = self.flux.copy()
        diag[1:] += self.flux[:-1]
        self._A_diag = diag
        self._A_off = -self.flux[:-1]
        s = 1.0 / np.sqrt(self.mu)
        self._S_diag = diag * s * s
        self._S_off = self._A_off * s[:-1] * s[1:]
        self._eig = None
        self._cache: dict = {}

    def _eigen(self):
        if self._eig is None:
            lam, V = eigh_tridiagonal(self._S_diag, self._S_off)
            self._eig = (np.maximum(lam, 0.0), V)
        return self._eig

    def amplification(self, lam: np.ndarray, t: float) -> np.ndarray:
        """Spectral multiplier of the time stepper over [0, t]."""
        if self.scheme == "exact":
            return np.exp(-lam * t)
        return cn_amplification(lam, t, self.steps)

    def propagator(self, t: float) -> np.ndarray:
        if t <= 0:
            raise ValueError("t must be positive")
        P = self._cache.get(float(t))
        if P is None:
            lam, V = self._eigen()
            g = self.amplification(lam, t)
            sq = np.sqrt(self.mu)
            P = (V * g[None, :]) @ V.T
            P = P / sq[:, None] * sq[None, :]
            self._cache[float(t)] = P
        return P

    def origin_diagonal(self, t: float) -> float:
        lam, V = self._eigen()
        g = self.amplification(lam, t)
        return float(np.dot(V[0] * V[0], g) / self.mu[0])

    def origin_column(self, t: float) -> np.ndarray:
        lam, V = self._eigen()
        g = self.amplification(lam, t)
        sq = np.sqrt(self.mu)
        return (V @ (g * V[0])) / (sq * sq[0])

    def stiffness_banded(self) -> np.ndarray:
        n = self.size
        ab = np.zeros((3, n))
        ab[0, 1:] = self._A_off
        ab[1] = self._A_diag
        ab[2, :-1] = self._A_off
        return ab

    def energy(self, values: np.ndarray) -> float:
        u = np.asarray(values, dtype=float)
        du = np.diff(np.concatenate([u, [0.0]]))
        return float(np.dot(self.flux, du * du))


def cn_amplification(lam: np.ndarray, t: float, steps: int, start: int = 4) -> np.ndarray:
    """Crank-Nicolson multiplier with ``start`` backward-Euler half steps first.

    The backward-Euler start (Rannacher smoothing) damps the stiff modes that
    plain Crank-Nicolson would carry along with amplification near -1.
    """
    if steps < 2:
        raise StepSizeError("need at least two time steps")
    dt = t / steps
    be = 1.0 / (1.0 + 0.5 * lam * dt)
    cn = (1.0 - 0.5 * lam * dt) * be
    n_cn = steps - start // 2
    return be ** start * np.sign(cn) ** (n_cn % 2) * np.abs(cn) ** n_cn


def crank_nicolson(model: SurfaceModel, u0, t: float, steps: int | None = None,
                   start: int = 4) -> np.ndarray:
    """March mu du/dt = -A u with banded solves; same scheme as the spectral form."""
    steps = model.steps if steps is None else steps
    if steps < 2:
        raise StepSizeError("need at least two time steps")
    dt = t / steps
    ab = model.stiffness_banded()
    M = model.mu
    u = np.asarray(u0, dtype=float).copy()

    def system(scale):
        lhs = ab * scale
        lhs[1] += M
        off = np.zeros_like(M)
        off[:-1] += np.abs(lhs[0, 1:])
        off[1:] += np.abs(lhs[2, :-1])
        if np.any(np.abs(lhs[1]) <= off):
            raise StepSizeError("implicit system lost diagonal dominance")
        return lhs

    # both the backward-Euler half steps and Crank-Nicolson solve with M + dt/2 A
    lhs = system(0.5 * dt)
    for _ in range(start):
        u = solve_banded((1, 1), lhs, M * u)
    for _ in range(steps - start // 2):
        Au = ab[1] * u
        Au[:-1] += ab[0, 1:] * u[1:]
        Au[1:] += ab[2, :-1] * u[:-1]
        u = solve_banded((1, 1), lhs, M * u - 0.5 * dt * Au)
    return u


@dataclass
class RadialFunction:
    model: _RadialModel
    values: np.ndarray
    nonnegative: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.model.size,):
            raise GridMismatchError("values do not match the grid")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("radial function has non-finite values")
        if self.nonnegative and np.any(self.values < 0):
            raise ValueError("function flagged non-negative has negative values")

    def with_values(self, values) -> "RadialFunction":
        return RadialFunction(self.model, values, self.nonnegative)

    def scaled(self, c: float) -> "RadialFunction":
        return RadialFunction(self.model, c * self.values, self.nonnegative and c >= 0)


def _check(model, f: RadialFunction):
    if f.model is not model:
        raise GridMismatchError("function lives on a different grid")


def apply_heat(model, f: RadialFunction, t: float) -> RadialFunction:
    _check(model, f)
    return RadialFunction(model, model.apply(f.values, t), f.nonnegative)


def log_lp_norm(model, f: RadialFunction | np.ndarray, p: Extended) -> float:
    """log ||f||_p, computed in log space so large p and tiny values are safe."""
    vals = f.values if isinstance(f, RadialFunction) else np.asarray(f, dtype=float)
    a = np.abs(vals)
    p = parse_extended(p)
    if p is INF:
        m = a.max()
        return math.log(m) if m > 0 else -math.inf
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    pos = a > 0
    if not np.any(pos):
        return -math.inf
    return float(logsumexp(np.log(model.mu[pos]) + p * np.log(a[pos]))) / p


def lp_norm(model, f, p: Extended) -> float:
    """||f||_{L^p(m)}: quadrature with the full measure (cross-section included)."""
    return math.exp(log_lp_norm(model, f, p))


def integral(model, f) -> float:
    vals = f.values if isinstance(f, RadialFunction) else np.asarray(f, dtype=float)
    return float(np.dot(model.mu, vals))


def entropy(model, u) -> float:
    """int u log u dm - (int u dm) log(int u dm) with 0 log 0 = 0."""
    vals = u.values if isinstance(u, RadialFunction) else np.asarray(u, dtype=float)
    if np.any(vals < 0):
        raise ValueError("entropy needs a non-negative function")
    mass = float(np.dot(model.mu, vals))
    live = vals >= ENTROPY_FLOOR
    ulogu = np.zeros_like(vals)
    ulogu[live] = vals[live] * np.log(vals[live])
    return float(np.dot(model.mu, ulogu)) - (mass * math.log(mass) if mass > 0 else 0.0)


def dirichlet_energy(model, u) -> float:
    """int |grad u|^2 dm for radial u (|grad u| = |u'|)."""
    vals = u.values if isinstance(u, RadialFunction) else np.asarray(u, dtype=float)
    return model.energy(vals)


def energy_log_convexity_trace(model, f: RadialFunction, times, tol: float = 1e-9) -> dict:
    """E(s) = ||H_s f||_2^2 along ``times`` with discrete convexity slack of log E.

    The slack at an interior time is the chord value minus log E there; it must
    be non-negative for a log-convex E.
    """
    _check(model, f)
    s = np.asarray(times, dtype=float)
    if s.size < 3 or np.any(np.diff(s) <= 0):
        raise ValueError("need at least three increasing times")
    E = np.array([math.exp(2.0 * log_lp_norm(model, model.apply(f.values, si), 2.0)) for si in s])
    logE = np.log(E)
    slack = np.full(s.size, np.nan)
    w = (s[2:] - s[1:-1]) / (s[2:] - s[:-2])
    slack[1:-1] = w * logE[:-2] + (1.0 - w) * logE[2:] - logE[1:-1]
    rows = [{"s": float(a), "E": float(b), "logE": float(c), "convexity_slack": float(d)}
            for a, b, c, d in zip(s, E, logE, slack)]
    min_slack = float(np.nanmin(slack))
    decreasing = bool(np.all(np.diff(E) <= tol * E[0]))
    return {
        "space": model.descriptor(),
        "rows": rows,
        "min_slack": min_slack,
        "tolerance": tol,
        "convex": min_slack >= -tol,
        "non_increasing": decreasing,
        "positive": bool(np.all(E > 0)),
    }


def _gl_composite(L: float, panels: int, order: int = 20):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(-L, L, panels + 1)
    h = 0.5 * (edges[1] - edges[0])
    mids = 0.5 * (edges[1:] + edges[:-1])
    return (mids[:, None] + h * x).ravel(), np.tile(h * w, panels)


def fourier_gaussian_check(alpha0: float, t0: float, n: int, fit_tol: float = 1e-6,
                           samples: int = 12) -> dict:
    """Convolve e^{-alpha0 |x|^2} with the Euclidean heat kernel by direct quadrature.

    Fits log u(x) = log A - beta |x|^2 by least squares and compares with
    beta0 = alpha0/(1 + 4 alpha0 t0), A0 = (1 + 4 alpha0 t0)^{-n/2}.
    """
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    if alpha0 <= 0 or t0 <= 0:
        raise ValueError("alpha0 and t0 must be positive")
    beta0 = alpha0 / (1.0 + 4.0 * alpha0 * t0)
    amp0 = (1.0 + 4.0 * alpha0 * t0) ** (-0.5 * n)
    # sample where the output is O(1)..e^{-6}
    xs = np.linspace(0.0, math.sqrt(6.0 / beta0), samples)
    # substitute so the narrower Gaussian becomes e^{-|z|^2}; the other factor is
    # then at least as wide, so a fixed panel quadrature over |z| <= 7 resolves both
    if 4.0 * alpha0 * t0 <= 1.0:
        c = math.sqrt(4.0 * t0)  # y = x - c z, kernel narrow

        def other(x, z1, z2):
            return math.pi ** (-0.5 * n) * np.exp(-alpha0 * ((x - c * z1) ** 2 + z2 * z2 * c * c))
    else:
        c = 1.0 / math.sqrt(alpha0)  # y = c z, data narrow

        def other(x, z1, z2):
            return c ** n * euclidean_kernel(n, np.hypot(x - c * z1, c * z2), t0)

    z, w = _gl_composite(7.0, 28)
    if n == 1:
        base = np.exp(-z * z) * w
        u = np.array([np.dot(base, other(x, z, 0.0)) for x in xs])
    else:
        Z1, Z2 = np.meshgrid(z, z, indexing="ij")
        base = np.exp(-(Z1 * Z1 + Z2 * Z2)) * np.outer(w, w)
        u = np.array([np.sum(base * other(x, Z1, Z2)) for x in xs])
    A = np.column_stack([np.ones_like(xs), -xs * xs])
    coef, *_ = np.linalg.lstsq(A, np.log(u), rcond=None)
    resid = float(np.max(np.abs(A @ coef - np.log(u))))
    beta, amp = float(coef[1]), float(math.exp(coef[0]))
    return {
        "alpha0": alpha0,
        "t0": t0,
        "n": n,
        "beta": beta,
        "beta_expected": beta0,
        "beta_error": abs(beta - beta0),
        "amplitude": amp,
        "amplitude_expected": amp0,
        "amplitude_error": abs(amp - amp0),
        "fit_residual": resid,
        "fit_tolerance": fit_tol,
        "ok": resid <= fit_tol,
    }
