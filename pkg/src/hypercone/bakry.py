"""Entropy-energy flow: exponent p(t), gauge m(t) and the monotone functional V(t).

Along the heat flow f_t = H_t f, with p(t) = N p / (N - 8 lambda p t) and the
matching m(t), the quantity V(t) = e^{-m(t)} ||f_t||_{p(t)} does not increase;
at the time where p(t) = q, e^{m} is the sharp L^p -> L^q constant.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .constants import INF, ExponentPair
from .semigroup import (ConeModel, RadialFunction, dirichlet_energy, entropy,
                        log_lp_norm, lp_norm)

__all__ = [
    "FlowTrace",
    "MonotonicityError",
    "phi",
    "phi_prime",
    "v_opt",
    "p_of_t",
    "t_of_lambda",
    "lambda_of_t",
    "T_lambda",
    "m_of_t",
    "m_of_t_quadrature",
    "integrate_flow",
    "logsobolev_check",
    "linearized_logsobolev_check",
]

EXPONENT_CAP = 1e3


class MonotonicityError(ArithmeticError):
    pass


def phi(s, N: float, avr: float):
    """(N/2) log(2 s AVR^{-2/N} / (N pi e))."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("phi needs s > 0")
    out = 0.5 * N * (np.log(2.0 * s / (N * math.pi)) - 1.0 - (2.0 / N) * math.log(avr))
    return out[()] if out.ndim == 0 else out


def phi_prime(s, N: float):
    return 0.5 * N / np.asarray(s, dtype=float)


def v_opt(s, lam: float):
    """lambda s^2 / (s - 1)."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 1):
        raise ValueError("v_opt needs s > 1")
    out = lam * s * s / (s - 1.0)
    return out[()] if out.ndim == 0 else out


def T_lambda(lam: float, p: float, N: float) -> float:
    return N / (8.0 * lam * p)


def p_of_t(t, lam: float, p: float, N: float):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t >= T_lambda(lam, p, N)):
        raise ValueError("t outside [0, T_lambda)")
    out = N * p / (N - 8.0 * lam * p * t)
    return out[()] if out.ndim == 0 else out


def t_of_lambda(lam: float, pair: ExponentPair, N: float) -> float:
    """The time at which p(t) reaches q."""
    return N / (8.0 * lam) * pair.gap


def lambda_of_t(t: float, pair: ExponentPair, N: float) -> float:
    return N / (8.0 * t) * pair.gap


def _log_A(s):
    # log(s^{1/s} (1 - 1/s)^{1-1/s})
    u = 1.0 / s
    return -u * np.log(u) + (1.0 - u) * np.log1p(-u)


def m_of_t(t, lam: float, p: float, N: float, avr: float):
    pt = p_of_t(t, lam, p, N)
    gap = 1.0 / p - 1.0 / pt
    out = 0.5 * N * (math.log(2.0 * lam / (N * math.pi) * avr ** (-2.0 / N)) * gap
                     + _log_A(p) - _log_A(pt))
    return out[()] if np.ndim(out) == 0 else out


def m_of_t_quadrature(t: float, lam: float, p: float, N: float, avr: float) -> float:
    """Independent route: int_p^{p(t)} (Phi(v(s)) - N/2) ds / s^2."""
    pt = float(p_of_t(t, lam, p, N))
    if pt == p:
        return 0.0
    val, _ = quad(lambda s: (phi(v_opt(s, lam), N, avr) - 0.5 * N) / (s * s), p, pt,
                  epsabs=0.0, epsrel=1e-13, limit=200)
    return val


@dataclass
class FlowTrace:
    lam: float
    N: float
    avr: float
    p_start: float
    T_lambda: float
    samples: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        from .report import csv_text

        return csv_text(["t", "p", "m", "V"], [[float(x) for x in row] for row in self.samples])

    def to_json(self) -> dict:
        return {"lambda": self.lam, "N": self.N, "avr": self.avr, "p_start": self.p_start,
                "T_lambda": self.T_lambda,
                "samples": [{"t": t, "p": p, "m": m, "V": V} for t, p, m, V in self.samples],
                **self.checks}


def integrate_flow(model: ConeModel, f: RadialFunction, pair: ExponentPair, t_target: float,
                   steps: int = 16, slack: float = 1e-8, fd_tol: float = 1e-6,
                   strict: bool = True) -> FlowTrace:
    """Sample V(t) = e^{-m(t)} ||H_t f||_{p(t)} on [0, t_target] with p(t_target) = q.

    The heat flow uses the exact cone kernel at every sample time; p and m are
    the closed forms.  The two ODE relations linking p, m and v are verified by
    central differences at interior samples.
    """
    if pair.q is INF or pair.diagonal or float(pair.p) < 2.0:
        raise ValueError("the flow needs 2 <= p < q < inf")
    p = float(pair.p)
    if np.any(f.values < 0) or not np.any(f.values > 0):
        raise ValueError("initial datum must be non-negative and non-zero")
    N, avr = model.N, model.avr
    lam = lambda_of_t(t_target, pair, N)
    times = np.linspace(0.0, t_target, steps + 1)
    samples = []
    for s in times:
        ps = float(p_of_t(s, lam, p, N))
        if ps > EXPONENT_CAP:
            warnings.warn(f"exponent {ps:.3g} capped at {EXPONENT_CAP:g}")
            ps = EXPONENT_CAP
        ms = float(m_of_t(s, lam, p, N, avr))
        vals = f.values if s == 0 else model.apply(f.values, s)
        logV = -ms + log_lp_norm(model, vals, ps)
        samples.append((float(s), ps, ms, math.exp(logV)))
    V = np.array([x[3] for x in samples])
    worst_rise = float(np.max(np.diff(V))) if V.size > 1 else 0.0
    monotone = worst_rise <= slack * V[0]

    # ODE identities: m' = p'/p^2 (Phi(v(p)) - N/2) and N/(8 v(p)) = (p-1)/p'
    h = 1e-5 * t_target
    ode_err = 0.0
    for s in times[1:-1]:
        dp = (p_of_t(s + h, lam, p, N) - p_of_t(s - h, lam, p, N)) / (2 * h)
        dm = (m_of_t(s + h, lam, p, N, avr) - m_of_t(s - h, lam, p, N, avr)) / (2 * h)
        ps = p_of_t(s, lam, p, N)
        vs = v_opt(ps, lam)
        e1 = abs(dm - dp / ps ** 2 * (phi(vs, N, avr) - 0.5 * N)) / max(1.0, abs(dm))
        e2 = abs(N / (8.0 * vs) - (ps - 1.0) / dp) / max(1.0, abs(N / (8.0 * vs)))
        ode_err = max(ode_err, e1, e2)

    trace = FlowTrace(lam, N, avr, p, T_lambda(lam, p, N), samples)
    trace.checks = {
        "monotone": bool(monotone),
        "max_rise": worst_rise,
        "slack": float(slack * V[0]),
        "ratio_end": float(V[-1] / V[0]),
        "ode_residual": float(ode_err),
        "ode_tolerance": fd_tol,
        "ode_ok": bool(ode_err <= fd_tol),
        "V0_rel_error": float(abs(V[0] / lp_norm(model, f, p) - 1.0)),
    }
    if strict and not monotone:
        raise MonotonicityError(f"V rose by {worst_rise:.3e} (> {slack:.0e} V(0))")
    return trace


def _ls_terms(model, u: RadialFunction):
    vals = u.values
    u2 = vals * vals
    norm2 = float(np.dot(model.mu, u2))
    if norm2 <= 0:
        raise ValueError("u must be non-zero")
    ent = entropy(model, u2)
    energy = dirichlet_energy(model, vals)
    return norm2, ent, energy


def logsobolev_check(model: ConeModel, u: RadialFunction, tol: float = 1e-8) -> dict:
    """Deficit RHS - LHS of the sharp L^2 log-Sobolev inequality (normalised form)."""
    N, avr = model.N, model.avr
    norm2, ent, energy = _ls_terms(model, u)
    lhs = ent / norm2
    rhs = float(phi(energy / norm2, N, avr))
    deficit = rhs - lhs
    return {"space": model.descriptor(), "entropy": ent, "energy": energy, "norm2": norm2,
            "lhs": lhs, "rhs": rhs, "deficit": deficit, "tolerance": tol,
            "holds": deficit >= -tol}


def linearized_logsobolev_check(model: ConeModel, u: RadialFunction, v: float,
                                tol: float = 1e-8) -> dict:
    """Ent(u^2) <= ||u||^2 (Phi(v) - N/2) + N/(2v) int |grad u|^2 at one v > 0."""
    if v <= 0:
        raise ValueError("v must be positive")
    N, avr = model.N, model.avr
    norm2, ent, energy = _ls_terms(model, u)
    rhs = norm2 * (float(phi(v, N, avr)) - 0.5 * N) + 0.5 * N / v * energy
    gap = rhs - ent
    return {"v": v, "v_matched": energy / norm2, "lhs": ent, "rhs": rhs,
            "gap": gap, "relative_gap": gap / norm2, "tolerance": tol,
            "holds": gap >= -tol * norm2}
