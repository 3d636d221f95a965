"""The acceptance suite: thirteen numbered checks, each at its stated tolerance.

Shared by ``hypercone verify`` and ``tests/test_acceptance.py``.  Every check
returns a :class:`CriterionResult`; none of them raises on a failed comparison.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bakry import (integrate_flow, lambda_of_t, logsobolev_check, m_of_t,
                    t_of_lambda)
from .bessel import bessel_i
from .constants import INF, ExponentPair, log_sharp_bound
from .hyper import (estimate_operator_norm, extremizer, extremizer_ratio,
                    li_limit_trace, rescaling_identity_check, scaled_norm_trace,
                    sharp_constant_cone, two_sided_bound_check)
from .kernels import carslaw_kernel, euclidean_kernel
from .rigidity import munn_perelman_table, topology_report
from .semigroup import (ConeModel, SurfaceModel, energy_log_convexity_trace,
                        fourier_gaussian_check)
from .spaces import ConePoint, ConeSpace, SurfaceSpace, cone_distance, make_grid

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        key = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        return f"[{verdict}] criterion {self.number:2d}: {self.title} ({key}; {self.seconds:.1f}s)"

    def to_json(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "measured": self.measured, "tolerance": self.tolerance}


def _short(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _pi_cone() -> ConeSpace:
    return ConeSpace.planar(math.pi)


def c01_sharp_saturation(seed: int = 0) -> CriterionResult:
    grid = make_grid(2.0, 6.0, 2048, t_min=0.5)
    worst_ext = worst_iter = 0.0
    over = 0.0
    for theta in (math.pi / 2, math.pi, 1.5 * math.pi):
        model = ConeModel(ConeSpace.planar(theta), grid)
        for pq in ((1.5, 3.0), (2.0, 4.0)):
            pair = ExponentPair(*pq)
            for t in (0.5, 1.0, 2.0):
                sharp = sharp_constant_cone(model.cone, pair, t)
                worst_ext = max(worst_ext, abs(extremizer_ratio(model, pair, t) / sharp - 1.0))
                # deliberately started away from the extremizer
                est = estimate_operator_norm(model, pair, t, start=np.exp(-model.nodes ** 2))
                worst_iter = max(worst_iter, abs(est.value / sharp - 1.0))
                over = max(over, est.value / sharp - 1.0)
    ok = worst_ext <= 5e-3 and worst_iter <= 1e-2 and over <= 5e-3
    return CriterionResult(1, "sharp constant saturated on 2-D cones", ok,
                           {"extremizer_rel_err": worst_ext, "iteration_rel_err": worst_iter,
                            "max_excess": over},
                           {"extremizer": 5e-3, "iteration": 1e-2})


def c02_boundary(seed: int = 0) -> CriterionResult:
    model = ConeModel(_pi_cone(), make_grid(2.0, 2.0, 512, t_min=0.5))
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        est = estimate_operator_norm(model, ExponentPair(1.0, INF), t)
        worst = max(worst, abs(est.value / (2.0 / (4.0 * math.pi * t)) - 1.0))
    return CriterionResult(2, "||H_t||_{1,inf} = 2/(4 pi t) on the pi-cone", worst <= 1e-8,
                           {"rel_err": worst}, {"rel": 1e-8})


def c03_flow_identity(seed: int = 0) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(1000):
        p = float(rng.uniform(1.05, 10.0))
        q = p * float(np.exp(rng.uniform(0.01, 4.0)))
        N = float(rng.uniform(1.1, 10.0))
        avr = float(rng.uniform(0.01, 1.0))
        lam = float(np.exp(rng.uniform(-5.0, 5.0)))
        pair = ExponentPair(p, q)
        t = t_of_lambda(lam, pair, N)
        m = float(m_of_t(t, lam, p, N, avr))
        worst = max(worst, abs(math.expm1(m - log_sharp_bound(pair, N, avr, t))))
    return CriterionResult(3, "e^{m(t(lambda))} equals the sharp bound", worst <= 1e-10,
                           {"rel_err": worst, "draws": 1000}, {"rel": 1e-10})


def _random_bumps(rng, r, count=None):
    count = count or int(rng.integers(1, 5))
    out = np.zeros_like(r)
    for _ in range(count):
        a = rng.uniform(0.1, 1.0)
        b = rng.uniform(0.2, 4.0)
        c = rng.uniform(0.0, 3.0)
        out += a * np.exp(-b * (r - c) ** 2)
    return out


def c04_flow_monotone(seed: int = 0) -> CriterionResult:
    rng = np.random.default_rng(seed)
    model = ConeModel(_pi_cone(), make_grid(2.0, 4.0, 512, t_min=0.05))
    pair = ExponentPair(2.0, 4.0)
    worst_rise = -math.inf
    all_ok = True
    for _ in range(20):
        f = model.function(_random_bumps(rng, model.nodes), nonnegative=True)
        tr = integrate_flow(model, f, pair, 1.0, strict=False)
        worst_rise = max(worst_rise, tr.checks["max_rise"] / tr.samples[0][3])
        all_ok &= tr.checks["monotone"] and tr.checks["ode_ok"]
    f = extremizer(model, pair, 1.0)
    tr = integrate_flow(model, f, pair, 1.0, strict=False)
    V = np.array([s[3] for s in tr.samples])
    eq_dev = float(np.max(np.abs(V / V[0] - 1.0)))
    ok = all_ok and eq_dev <= 5e-3
    return CriterionResult(4, "V(t) non-increasing; constant for the extremizer", ok,
                           {"max_rise_over_V0": worst_rise, "equality_dev": eq_dev},
                           {"rise": 1e-8, "equality": 5e-3})


def c05_logsobolev(seed: int = 0) -> CriterionResult:
    rng = np.random.default_rng(seed)
    model = ConeModel(_pi_cone(), make_grid(2.0, 3.0, 512, t_min=0.05))
    r = model.nodes
    worst = math.inf
    for _ in range(1000):
        u = np.zeros_like(r)
        for _ in range(int(rng.integers(1, 5))):
            u += rng.uniform(-1.0, 1.0) * np.exp(-rng.uniform(0.2, 4.0) * (r - rng.uniform(0, 3)) ** 2)
        if not np.any(u != 0):
            continue
        worst = min(worst, logsobolev_check(model, model.function(u))["deficit"])
    gauss = max(abs(logsobolev_check(model, model.sample(lambda x: np.exp(-c0 * x * x)))["deficit"])
                for c0 in (0.25, 0.5, 2.0))
    ok = worst >= -1e-8 and gauss <= 1e-6
    return CriterionResult(5, "log-Sobolev deficit >= 0, zero for Gaussians", ok,
                           {"min_deficit": worst, "gaussian_abs_deficit": gauss},
                           {"deficit": -1e-8, "gaussian": 1e-6})


def c06_li_limit(seed: int = 0) -> CriterionResult:
    cone = _pi_cone()
    t = 1e4
    h = carslaw_kernel(cone, ConePoint(1.0, 0.0), ConePoint(2.0, 1.0), t).value
    rel = abs(t * h / (1.0 / (2.0 * math.pi)) - 1.0)
    return CriterionResult(6, "t h(x,y,t) -> 1/(2 pi) on the pi-cone", rel <= 1e-2,
                           {"rel_err": rel}, {"rel": 1e-2})


def c07_log_convexity(seed: int = 0) -> CriterionResult:
    times = np.geomspace(0.1, 10.0, 25)
    worst = math.inf
    for theta in (math.pi, 2.0 * math.pi):
        model = ConeModel(ConeSpace.planar(theta), make_grid(2.0, 12.0, 512, t_min=0.1))
        for data in (np.exp(-model.nodes ** 2), (model.nodes <= 1.0).astype(float)):
            tr = energy_log_convexity_trace(model, model.function(data, True), times)
            worst = min(worst, tr["min_slack"])
    return CriterionResult(7, "log E(s) midpoint convex", worst >= -1e-9,
                           {"min_slack": worst}, {"slack": -1e-9})


def c08_rescaling(seed: int = 0) -> CriterionResult:
    rng = np.random.default_rng(seed)
    cone = _pi_cone()
    worst = 0.0
    for _ in range(100):
        r, tau = np.exp(rng.uniform(math.log(0.1), math.log(10.0), 2))
        pair = ExponentPair(*[(1.5, 3.0), (2.0, 4.0), (1.0, INF), (1.2, 7.0)][int(rng.integers(4))])
        t = float(np.exp(rng.uniform(-2, 2)))
        worst = max(worst, rescaling_identity_check(cone, pair, t, float(r), float(tau))["rel_deviation"])
    return CriterionResult(8, "rescaling identity", worst <= 1e-12, {"max_dev": worst}, {"rel": 1e-12})


def _surface_model(t_max: float = 100.0, points: int = 1200) -> SurfaceModel:
    return SurfaceModel(SurfaceSpace(0.5), points=points, t_max=t_max)


def c09_monotone_trace(seed: int = 0) -> CriterionResult:
    times = np.geomspace(0.1, 100.0, 20)
    pair = ExponentPair(1.0, INF)
    cone_model = ConeModel(_pi_cone(), make_grid(2.0, 100.0, 2048, t_min=0.1))
    cone_tr = scaled_norm_trace(cone_model, pair, times)
    surf_tr = scaled_norm_trace(_surface_model(), pair, times)
    eq_dev = 0.0
    for t in (0.1, 1.0, 10.0):
        rep = two_sided_bound_check(cone_model, t)
        eq_dev = max(eq_dev, abs(rep["middle"] / rep["upper"] - 1.0), abs(rep["lower"] / rep["upper"] - 1.0))
    surf_two = two_sided_bound_check(_surface_model(), 1.0)
    ok = (cone_tr["non_decreasing"] and surf_tr["non_decreasing"] and eq_dev <= 1e-8
          and surf_two["holds"])
    return CriterionResult(9, "t^{N/2} C(1,inf,t) non-decreasing; two-sided bound", ok,
                           {"cone_nd": cone_tr["non_decreasing"], "surface_nd": surf_tr["non_decreasing"],
                            "cone_equality_dev": eq_dev, "surface_middle": surf_two["middle"]},
                           {"equality": 1e-8})


def c10_strict_off_cones(seed: int = 0) -> CriterionResult:
    pair = ExponentPair(2.0, 4.0)
    t = 0.5
    fine = _surface_model(t_max=2.0, points=1200)
    coarse = _surface_model(t_max=2.0, points=600)
    est = estimate_operator_norm(fine, pair, t).value
    grid_tol = abs(est - estimate_operator_norm(coarse, pair, t).value)
    sharp = math.exp(log_sharp_bound(pair, 2.0, 0.5, t))
    gap = sharp - est
    long_model = _surface_model()
    tr = scaled_norm_trace(long_model, ExponentPair(1.0, INF), [100.0])
    rel = tr["final_rel_gap"]
    ok = gap > 10.0 * grid_tol and rel <= 0.1
    return CriterionResult(10, "strict gap on the surface; trace approaches the cone value", ok,
                           {"gap": gap, "grid_tol": grid_tol, "trace_rel_gap_t100": rel},
                           {"gap_factor": 10.0, "trace": 0.1})


def c11_fourier(seed: int = 0) -> CriterionResult:
    one = fourier_gaussian_check(1 / 8, 1.0, 1)
    two = fourier_gaussian_check(1 / 8, 1.0, 2)
    ok = one["beta_error"] <= 1e-8 and two["amplitude_error"] <= 1e-6 and one["ok"] and two["ok"]
    return CriterionResult(11, "Gaussian convolution by direct quadrature", ok,
                           {"beta_err_n1": one["beta_error"], "amp_err_n2": two["amplitude_error"]},
                           {"beta": 1e-8, "amplitude": 1e-6})


def c12_munn_perelman(seed: int = 0) -> CriterionResult:
    ok = True
    worst_resid = 0.0
    for n in (2, 3, 4):
        table = munn_perelman_table(n)
        worst_resid = max(worst_resid, max(r["residual"] for r in table.rows))
        ok &= table.monotone() and all(r["in_unit_interval"] for r in table.rows)
        prev = None
        for K in np.linspace(0.05, 1.0, 20):
            rep = topology_report(n, float(K), table)
            ok &= rep["fundamental_group_order_bound"] <= 1.0 / K
            ok &= rep["simply_connected"] == (K > 0.5)
            if prev is not None:
                ok &= rep["k0"] >= prev["k0"]
                ok &= rep["fundamental_group_order_bound"] <= prev["fundamental_group_order_bound"]
            prev = rep
    ok &= worst_resid < 1e-12
    return CriterionResult(12, "Munn-Perelman table and topology thresholds", bool(ok),
                           {"max_residual": worst_resid}, {"residual": 1e-12})


def c13_bessel_carslaw(seed: int = 0) -> CriterionResult:
    x = np.geomspace(1e-3, 50.0, 2000)
    exact = np.sqrt(2.0 / (math.pi * x)) * np.sinh(x)
    bes = float(np.max(np.abs(bessel_i(0.5, x) / exact - 1.0)))
    rng = np.random.default_rng(seed)
    cone = ConeSpace.planar(2.0 * math.pi)
    worst = 0.0
    for _ in range(1000):
        p = ConePoint(float(rng.uniform(0, 5)), float(rng.uniform(0, 2 * math.pi)))
        q = ConePoint(float(rng.uniform(0, 5)), float(rng.uniform(0, 2 * math.pi)))
        t = float(rng.uniform(0.05, 20.0))
        h = carslaw_kernel(cone, p, q, t).value
        e = float(euclidean_kernel(2, cone_distance(cone, p, q), t))
        worst = max(worst, abs(h / e - 1.0))
    ok = bes <= 1e-10 and worst <= 1e-10
    return CriterionResult(13, "Bessel I_{1/2} and flat Carslaw kernel", ok,
                           {"bessel_rel_err": bes, "carslaw_rel_err": worst}, {"rel": 1e-10})


CRITERIA = {
    1: c01_sharp_saturation,
    2: c02_boundary,
    3: c03_flow_identity,
    4: c04_flow_monotone,
    5: c05_logsobolev,
    6: c06_li_limit,
    7: c07_log_convexity,
    8: c08_rescaling,
    9: c09_monotone_trace,
    10: c10_strict_off_cones,
    11: c11_fourier,
    12: c12_munn_perelman,
    13: c13_bessel_carslaw,
}


def run_criterion(number: int, seed: int = 0) -> CriterionResult:
    start = time.perf_counter()
    res = CRITERIA[number](seed)
    res.seconds = time.perf_counter() - start
    return res


def run_all(seed: int = 0, only=None) -> list[CriterionResult]:
    numbers = sorted(CRITERIA) if not only else sorted(only)
    return [run_criterion(n, seed) for n in numbers]
