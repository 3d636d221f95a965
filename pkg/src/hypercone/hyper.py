"""Operator norms of H_t from L^p to L^q, extremizers and the limit experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import (INF, ExponentPair, conjugate, log_sharp_bound, omega,
                        optimal_a)
from .kernels import carslaw_kernel, tip_kernel
from .semigroup import (ConeModel, RadialFunction, SurfaceModel, log_lp_norm)
from .spaces import ConePoint, ConeSpace, SurfaceSpace, ball_volume, make_grid

__all__ = [
    "NormEstimate",
    "ConvergenceError",
    "sharp_constant_cone",
    "log_sharp_constant",
    "extremizer",
    "extremizer_ratio",
    "estimate_operator_norm",
    "scaled_norm_trace",
    "two_sided_bound_check",
    "li_limit_trace",
    "rescaling_identity_check",
    "refinement_study",
]

MONOTONE_SLACK = 1e-12


class ConvergenceError(ArithmeticError):
    pass


@dataclass
class NormEstimate:
    value: float
    pair: ExponentPair
    t: float
    iterations: int
    residual: float
    method: str
    extremal: RadialFunction | None = field(default=None, repr=False)
    history: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            **self.pair.to_json(),
            "t": self.t,
            "estimate": self.value,
            "iterations": self.iterations,
            "residual": self.residual,
            "method": self.method,
        }


def _avr_of(space) -> float:
    return space.avr


def log_sharp_constant(space, pair: ExponentPair, t: float) -> float:
    return log_sharp_bound(pair, space.N, _avr_of(space), t)


def sharp_constant_cone(cone: ConeSpace, pair: ExponentPair, t: float) -> float:
    """M^{N/2} AVR^{1/q-1/p} (4 pi t)^{-(N/2)(1/p-1/q)}; also the bound for any space."""
    return math.exp(log_sharp_constant(cone, pair, t))


def extremizer(model: ConeModel, pair: ExponentPair, t: float) -> RadialFunction:
    """Heat kernel from the tip at time a t, a = q(p-1)/(q-p)."""
    if pair.p is INF or pair.p == 1.0:
        raise ValueError("extremizers exist only for p > 1")
    a = optimal_a(pair)
    if not math.isfinite(a):
        raise ValueError("no extremizer for this pair")
    return model.sample(lambda r: tip_kernel(model.cone, r, a * t), nonnegative=True)


def _log_ratio(model, f: np.ndarray, pair: ExponentPair, t: float) -> float:
    return log_lp_norm(model, model.apply(f, t), pair.q) - log_lp_norm(model, f, pair.p)


def extremizer_ratio(model: ConeModel, pair: ExponentPair, t: float) -> float:
    f = extremizer(model, pair, t)
    return math.exp(_log_ratio(model, f.values, pair, t))


def _normalised_power(x: np.ndarray, e: float) -> np.ndarray:
    # x^e after scaling x to max 1, so huge exponents cannot overflow
    m = x.max()
    if m <= 0:
        raise ConvergenceError("iterate vanished")
    y = x / m
    with np.errstate(under="ignore"):
        return np.where(y > 0, np.exp(e * np.log(np.where(y > 0, y, 1.0))), 0.0)


def _boundary_estimate(model, pair: ExponentPair, t: float) -> NormEstimate:
    p_one = pair.p == 1.0
    q_inf = pair.q is INF
    if p_one and q_inf:
        value, arg = _sup_diagonal(model, t)
        return NormEstimate(value, pair, t, 0, 0.0, "kernel-sup", extremal=None,
                            history=[{"argmax_r": arg}])
    if pair.diagonal and (p_one or q_inf):
        # ||H_t||_{1,1} = ||H_t||_{inf,inf} = sup of the kernel mass
        K = model.kernel_matrix(t)
        mass = model.mu @ K
        return NormEstimate(float(mass.max()), pair, t, 0, 0.0, "kernel-mass")
    # (1, q): sup_y ||h(., y)||_q ; (p, inf): sup_x ||h(x, .)||_{p'}
    e = pair.q if p_one else conjugate(pair.p)
    K = model.kernel_matrix(t)
    logs = [log_lp_norm(model, K[:, j], e) for j in range(model.size)]
    logs.append(log_lp_norm(model, model.origin_column(t), e))
    j = int(np.argmax(logs))
    return NormEstimate(math.exp(logs[j]), pair, t, 0, 0.0, "kernel-column",
                        history=[{"argmax_node": j}])


def _sup_diagonal(model, t: float) -> tuple[float, float]:
    diag = model.kernel_diagonal(t)
    best, arg = model.origin_diagonal(t), 0.0
    i = int(np.argmax(diag))
    if diag[i] > best:
        best, arg = float(diag[i]), float(model.nodes[i])
    if isinstance(model, ConeModel) and arg > 0:
        # polish an interior maximum of the continuous diagonal
        lo = model.nodes[max(i - 1, 0)]
        hi = model.nodes[min(i + 1, model.size - 1)]
        res = minimize_scalar(lambda r: -float(model.radial_diagonal(r, t)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        if -res.fun > best:
            best, arg = float(-res.fun), float(res.x)
    return best, arg


def estimate_operator_norm(model, pair: ExponentPair, t: float, start: np.ndarray | None = None,
                           tol: float = 1e-10, max_iter: int = 500,
                           keep_history: bool = False) -> NormEstimate:
    """||H_t||_{p,q} on radial data.

    Boundary exponents use the kernel characterisations.  Otherwise the
    nonlinear power iteration g = H_t f, f <- (H_t g^{q-1})^{1/(p-1)} (L^p
    normalised) is run; its ratio ||H_t f||_q / ||f||_p never decreases for a
    positive symmetric kernel, and a decrease beyond rounding raises.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if pair.p == 1.0 or pair.q is INF:
        return _boundary_estimate(model, pair, t)
    p, q = float(pair.p), float(pair.q)
    if start is None:
        if isinstance(model, ConeModel) and not pair.diagonal:
            f = extremizer(model, pair, t).values
        else:
            f = np.exp(-model.nodes ** 2)
    else:
        f = np.asarray(start, dtype=float)
    if np.any(f < 0) or not np.any(f > 0):
        raise ValueError("power iteration needs non-negative, non-zero start")
    f = f / math.exp(log_lp_norm(model, f, p))
    P = model.propagator(t)
    g = P @ f
    ratio = log_lp_norm(model, g, q)
    history = [ratio] if keep_history else []
    residual = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        f_new = _normalised_power(P @ _normalised_power(g, q - 1.0), 1.0 / (p - 1.0))
        f_new = f_new / math.exp(log_lp_norm(model, f_new, p))
        g = P @ f_new
        new_ratio = log_lp_norm(model, g, q)
        if new_ratio < ratio - MONOTONE_SLACK * max(1.0, abs(ratio)):
            raise ConvergenceError(
                f"power iteration ratio decreased by {ratio - new_ratio:.3e} (grid inadequate?)")
        residual = abs(math.expm1(new_ratio - ratio))
        f, ratio = f_new, new_ratio
        if keep_history:
            history.append(ratio)
        if residual < tol:
            break
    else:
        raise ConvergenceError(f"no convergence in {max_iter} iterations (residual {residual:.2e})")
    return NormEstimate(math.exp(ratio), pair, t, it, residual, "power-iteration",
                        extremal=RadialFunction(model, f, True),
                        history=[math.exp(h) for h in history])


def scaled_norm_trace(model, pair: ExponentPair, times, cone_rtol: float = 1e-8) -> dict:
    """(4 pi t)^{(N/2)(1/p-1/q)} ||H_t||_{p,q} along ``times``."""
    times = [float(s) for s in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must increase")
    N = model.N
    expo = 0.5 * N * pair.gap
    limit = math.exp(log_sharp_bound(pair, N, model.avr, 1.0 / (4.0 * math.pi)))
    rows = []
    for s in times:
        est = estimate_operator_norm(model, pair, s)
        rows.append({"t": s, "estimate": est.value,
                     "scaled": est.value * (4.0 * math.pi * s) ** expo,
                     "method": est.method})
    scaled = np.array([r["scaled"] for r in rows])
    out = {"space": model.descriptor(), **pair.to_json(), "rows": rows, "cone_value": limit}
    if pair.p == 1.0 and pair.q is INF:
        out["non_decreasing"] = bool(np.all(np.diff(scaled) >= -1e-12 * scaled[:-1]))
    if isinstance(model, ConeModel):
        dev = float(np.max(np.abs(scaled / limit - 1.0)))
        out.update(max_rel_deviation=dev, tolerance=cone_rtol, constant=dev <= cone_rtol)
    else:
        out["final_rel_gap"] = float(abs(scaled[-1] / limit - 1.0))
    if pair.diagonal:
        out["bounded_by_one"] = bool(np.all(scaled <= 1.0 + 1e-9))
    return out


def volume_density_inf(space) -> float:
    """inf_x of the small-ball volume density: AVR at a cone tip, 1 on smooth surfaces."""
    if isinstance(space, ConeSpace):
        return min(space.avr, 1.0)
    if isinstance(space, SurfaceSpace):
        return 1.0
    raise TypeError("unsupported space")


def two_sided_bound_check(model, t: float, tol: float = 1e-8) -> dict:
    """1/inf nu <= (4 pi t)^{N/2} ||H_t||_{1,inf} <= 1/AVR."""
    N = model.N
    est = estimate_operator_norm(model, ExponentPair(1.0, INF), t)
    mid = (4.0 * math.pi * t) ** (0.5 * N) * est.value
    lower = 1.0 / volume_density_inf(model.space)
    upper = 1.0 / model.avr
    ok = lower * (1 - tol) <= mid <= upper * (1 + tol)
    out = {"space": model.descriptor(), "t": t, "lower": lower, "middle": mid, "upper": upper,
           "tolerance": tol, "holds": bool(ok)}
    if isinstance(model, ConeModel):
        out["equality"] = bool(abs(mid - upper) <= tol * upper and abs(lower - upper) <= tol * upper)
    else:
        out["strict"] = bool(lower < mid < upper)
    return out


def li_limit_trace(space, x, y, z, times, model: SurfaceModel | None = None,
                   rtol: float = 0.01) -> dict:
    """m(B_sqrt t(z)) h(x, y, t) along ``times``; the limit is omega_N / (4 pi)^{N/2}.

    2-D cones use the Carslaw kernel at arbitrary points.  On the surface only
    the pole is available (radial model), so x = y = z = pole is required.
    """
    N = space.N
    target = omega(N) / (4.0 * math.pi) ** (0.5 * N)
    rows = []
    for t in times:
        t = float(t)
        if isinstance(space, ConeSpace):
            h = carslaw_kernel(space, x, y, t).value
            vol = ball_volume(space, z, math.sqrt(t))
            extra = t ** (0.5 * N) * h
        elif isinstance(space, SurfaceSpace):
            if model is None:
                raise ValueError("surface traces need a SurfaceModel")
            if any(pt.r != 0.0 for pt in (x, y, z)):
                raise ValueError("surface traces are available at the pole only")
            h = model.origin_diagonal(t)
            vol = float(space.ball_area(math.sqrt(t)))
            extra = t * h
        else:
            raise TypeError("unsupported space")
        rows.append({"t": t, "h": h, "volume": vol, "trace": vol * h, "t_scaled_h": extra})
    last = rows[-1]["trace"]
    return {"space": space.to_json(), "target": target, "rows": rows,
            "final_rel_error": abs(last / target - 1.0), "tolerance": rtol,
            "converged": abs(last / target - 1.0) <= rtol}


def rescaling_identity_check(cone: ConeSpace, pair: ExponentPair, t: float, r: float,
                             tau: float, tol: float = 1e-12) -> dict:
    """C(X, r d, tau m, t) = tau^{1/q-1/p} C(X, d, m, r^{-2} t) on cones."""
    if r <= 0 or tau <= 0:
        raise ValueError("r and tau must be positive")
    # AVR(X, r d, tau m) = tau r^{-N} AVR(X, d, m); it may exceed 1 since the
    # measure is rescaled, so no ConeSpace is built for it
    avr_scaled = cone.avr * tau / r ** cone.N
    lhs = log_sharp_bound(pair, cone.N, avr_scaled, t)
    rhs = -pair.gap * math.log(tau) + log_sharp_constant(cone, pair, t / (r * r))
    dev = abs(math.expm1(lhs - rhs))
    return {"space": cone.to_json(), **pair.to_json(), "t": t, "r": r, "tau": tau,
            "lhs": math.exp(lhs), "rhs": math.exp(rhs), "rel_deviation": dev,
            "tolerance": tol, "ok": dev <= tol}


def refinement_study(cone: ConeSpace, pair: ExponentPair, t: float,
                     ladder=(512, 1024, 2048, 4096), t_max: float | None = None) -> dict:
    """Power-iteration estimate on successively finer grids with Richardson gaps."""
    if t_max is None:
        t_max = (1.0 + optimal_a(pair)) * t
    sharp = sharp_constant_cone(cone, pair, t)
    rows = []
    for n in ladder:
        model = ConeModel(cone, make_grid(cone.N, t_max, n))
        est = estimate_operator_norm(model, pair, t)
        rows.append({"points": n, "estimate": est.value, "gap": sharp - est.value,
                     "iterations": est.iterations})
    for a, b in zip(rows, rows[1:]):
        b["gap_change"] = abs(b["estimate"] - a["estimate"])
    return {"space": cone.to_json(), **pair.to_json(), "t": t, "sharp": sharp, "rows": rows}


def surface_point(r: float = 0.0) -> ConePoint:
    return ConePoint(r, 0.0)
