"""Command line front end.

Every subcommand takes its options either as flags or from a JSON config file
(``--config``); flags win.  Unknown config keys are rejected before anything is
computed.  Exit status: 0 success, 1 invalid input or a failed verification,
2 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import ast
import json
import math
import operator
import sys
from pathlib import Path

import numpy as np

from . import report
from .bakry import (MonotonicityError, integrate_flow, linearized_logsobolev_check,
                    logsobolev_check)
from .bessel import BesselConvergenceError
from .constants import (INF, ExponentPair, extremizer_alpha, extremizer_beta,
                        gaussian_time_shift, log_m_constant, log_sharp_bound,
                        optimal_a, parse_extended)
from .hyper import (ConvergenceError, estimate_operator_norm, extremizer,
                    li_limit_trace)
from .kernels import SeriesConvergenceError
from .rigidity import BisectionError, munn_perelman_table, topology_report
from .semigroup import ConeModel, GridMismatchError, StepSizeError, SurfaceModel
from .spaces import (ConePoint, ConeSpace, GridCalibrationError, SurfaceSpace,
                     make_grid)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2
NUMERIC_ERRORS = (ConvergenceError, SeriesConvergenceError, BisectionError, MonotonicityError,
                  GridCalibrationError, StepSizeError, BesselConvergenceError)


class ConfigError(ValueError):
    pass


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_angle(text) -> float:
    """Numbers and arithmetic with ``pi``: '3.0', 'pi', 'pi/2', '3*pi/2'."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"cannot parse angle {text!r}")

    try:
        return ev(ast.parse(str(text).strip(), mode="eval"))
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse angle {text!r}") from exc


def _point(text) -> ConePoint:
    if isinstance(text, (list, tuple)):
        r, phi = text
    else:
        parts = str(text).split(",")
        if len(parts) != 2:
            raise ConfigError(f"points are 'r,phi', got {text!r}")
        r, phi = parts
    return ConePoint(float(r), parse_angle(phi))


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


# option name -> (converter, default, help); names double as config keys
_CONE = {
    "theta": (parse_angle, None, "2-D cone angle, e.g. pi/2"),
    "N": (float, 2.0, "dimension"),
    "avr": (float, None, "asymptotic volume ratio (alternative to theta)"),
    "sigma": (float, None, "cross-section measure (alternative to theta)"),
}
COMMANDS = {
    "constants": {
        "p": (parse_extended, None, "source exponent"),
        "q": (parse_extended, None, "target exponent ('inf' allowed)"),
        "N": (float, 2.0, "dimension"),
        "avr": (float, 1.0, "asymptotic volume ratio"),
        "t": (float, 1.0, "time"),
    },
    "norm": {
        "space": (str, "cone", "cone | surface | euclidean"),
        **_CONE,
        "c": (float, 0.5, "surface slope"),
        "p": (parse_extended, None, "source exponent"),
        "q": (parse_extended, None, "target exponent"),
        "t": (float, 1.0, "time"),
        "points": (int, 1024, "grid nodes"),
    },
    "flow": {
        **_CONE,
        "p": (float, 2.0, "start exponent (>= 2)"),
        "q": (float, 4.0, "final exponent"),
        "t": (float, 1.0, "final time"),
        "points": (int, 512, "grid nodes"),
        "steps": (int, 32, "time samples"),
        "data": (str, "extremizer", "extremizer | gaussian | plateau | bumps"),
    },
    "logsob": {
        **_CONE,
        "c0": (_float_list, [0.25, 0.5, 2.0], "Gaussian rates, comma separated"),
        "v": (_float_list, [1.0, 100.0], "linearisation points, comma separated"),
        "points": (int, 512, "grid nodes"),
    },
    "li-limit": {
        "space": (str, "cone", "cone | surface"),
        "theta": (parse_angle, math.pi, "2-D cone angle"),
        "c": (float, 0.5, "surface slope"),
        "x": (_point, "1,0", "point 'r,phi'"),
        "y": (_point, "2,1", "point 'r,phi'"),
        "z": (_point, "0,0", "ball centre 'r,phi'"),
        "t_min": (float, 1.0, "first time"),
        "t_max": (float, 1e4, "last time"),
        "count": (int, 9, "number of log-spaced times"),
        "points": (int, 1200, "surface grid nodes"),
    },
    "rigidity": {
        "n": (int, 2, "manifold dimension"),
        "K": (_float_list, None, "comma separated K values for topology reports"),
    },
    "verify": {
        "only": (_int_list, None, "comma separated criterion numbers"),
    },
}
COMMON = {"seed": (int, 0, "seed for randomised sweeps"),
          "out": (str, None, "write JSON here instead of stdout"),
          "trace_dir": (str, None, "directory for CSV traces")}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypercone", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with option values")
        for key, (_, default, text) in {**opts, **COMMON}.items():
            flag = "--" + key.replace("_", "-")
            # defaults are applied after merging with the config file
            sp.add_argument(flag, dest=key, default=None, help=f"{text} (default: {default})")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge config file and flags, convert and validate every value."""
    spec = {**COMMANDS[args.command], **COMMON}
    raw = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        cmd = doc.pop("command", args.command)
        if cmd != args.command:
            raise ConfigError(f"config is for {cmd!r}, not {args.command!r}")
        unknown = sorted(set(doc) - set(spec))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        raw.update(doc)
    for key in spec:
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    cfg = {}
    for key, (conv, default, _) in spec.items():
        if key in raw and raw[key] is not None:
            try:
                cfg[key] = conv(raw[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw[key]!r}") from exc
        else:
            cfg[key] = conv(default) if isinstance(default, str) and conv is not str else default
    return cfg


def _cone_from(cfg) -> ConeSpace:
    given = [k for k in ("theta", "avr", "sigma") if cfg.get(k) is not None]
    if len(given) > 1:
        raise ConfigError("give only one of theta, avr, sigma")
    N = cfg.get("N", 2.0)
    if cfg.get("theta") is not None:
        if N != 2.0:
            raise ConfigError("theta needs N = 2")
        return ConeSpace.planar(cfg["theta"])
    if cfg.get("avr") is not None:
        return ConeSpace.with_avr(N, cfg["avr"])
    if cfg.get("sigma") is not None:
        return ConeSpace(N, cfg["sigma"])
    return ConeSpace.planar(math.pi) if N == 2.0 else ConeSpace.with_avr(N, 1.0)


def _pair(cfg) -> ExponentPair:
    if cfg.get("p") is None or cfg.get("q") is None:
        raise ConfigError("p and q are required")
    return ExponentPair(cfg["p"], cfg["q"])


def cmd_constants(cfg) -> dict:
    pair = _pair(cfg)
    N, avr, t = cfg["N"], cfg["avr"], cfg["t"]
    if not N > 1 or not 0 < avr <= 1 or not t > 0:
        raise ConfigError("need N > 1, 0 < avr <= 1, t > 0")
    out = {**pair.to_json(), "N": N, "avr": avr, "t": t,
           "M": math.exp(log_m_constant(pair)),
           "sharp_bound": math.exp(log_sharp_bound(pair, N, avr, t))}
    interior = pair.p not in (1.0, INF) and pair.q is not INF and not pair.diagonal
    if interior:
        out.update(alpha0=extremizer_alpha(pair, t), beta0=extremizer_beta(pair, t),
                   a=optimal_a(pair), heat_time_shift=gaussian_time_shift(pair, t))
    elif pair.q is INF and pair.p not in (1.0, INF):
        out["a"] = optimal_a(pair)
    return out


def _surface_model(c, t, pair, points) -> SurfaceModel:
    try:
        a = optimal_a(pair)
    except ValueError:
        a = 3.0
    return SurfaceModel(SurfaceSpace(c), points=points, t_max=(1.0 + a) * t)


def cmd_norm(cfg) -> dict:
    pair = _pair(cfg)
    t, n = cfg["t"], cfg["points"]
    kind = cfg["space"]
    if kind not in {"cone", "surface", "euclidean"}:
        raise ConfigError("space must be cone, surface or euclidean")
    if kind == "surface":
        space = SurfaceSpace(cfg["c"])
        models = [_surface_model(cfg["c"], t, pair, n), _surface_model(cfg["c"], t, pair, n // 2)]
    else:
        space = ConeSpace.with_avr(cfg["N"], 1.0) if kind == "euclidean" else _cone_from(cfg)
        try:
            a = optimal_a(pair)
        except ValueError:
            a = 1.0
        t_max = (1.0 + (a if math.isfinite(a) else 1.0)) * t
        models = [ConeModel(space, make_grid(space.N, t_max, m, t_min=t)) for m in (n, n // 2)]
    est = estimate_operator_norm(models[0], pair, t)
    coarse = estimate_operator_norm(models[1], pair, t)
    sharp = math.exp(log_sharp_bound(pair, space.N, space.avr, t))
    grid_tol = abs(est.value - coarse.value)
    out = {"space": space.to_json(), **pair.to_json(), "t": t, "points": n,
           "estimate": est.value, "sharp": sharp, "gap": sharp - est.value,
           "relative_gap": 1.0 - est.value / sharp, "iterations": est.iterations,
           "residual": est.residual, "method": est.method, "grid_tolerance": grid_tol,
           "tolerance": 1e-10}
    if kind == "surface" and est.method == "power-iteration":
        # global optimality is not guaranteed off cones: report multi-start agreement
        r = models[0].nodes
        starts = [np.exp(-r * r / 4.0), np.exp(-r * r / (16.0 * t)), 1.0 / (1.0 + r * r) ** 2]
        values = [est.value] + [estimate_operator_norm(models[0], pair, t, start=s).value for s in starts]
        spread = (max(values) - min(values)) / max(values)
        out["multi_start"] = {"values": values, "relative_spread": spread,
                              "tolerance": 1e-6, "agree": spread <= 1e-6}
    return out


def _flow_data(model, kind, pair, t, rng):
    r = model.nodes
    if kind == "extremizer":
        return extremizer(model, pair, t)
    if kind == "gaussian":
        return model.function(np.exp(-r * r), True)
    if kind == "plateau":
        return model.function((r <= 1.0).astype(float), True)
    if kind == "bumps":
        vals = sum(rng.uniform(0.1, 1) * np.exp(-rng.uniform(0.2, 4) * (r - rng.uniform(0, 3)) ** 2)
                   for _ in range(3))
        return model.function(vals, True)
    raise ConfigError("data must be extremizer, gaussian, plateau or bumps")


def cmd_flow(cfg, traces: dict) -> dict:
    cone = _cone_from(cfg)
    pair = ExponentPair(cfg["p"], cfg["q"])
    t = cfg["t"]
    a = optimal_a(pair)
    model = ConeModel(cone, make_grid(cone.N, (1.0 + a) * t, cfg["points"], t_min=t / cfg["steps"]))
    f = _flow_data(model, cfg["data"], pair, t, np.random.default_rng(cfg["seed"]))
    trace = integrate_flow(model, f, pair, t, steps=cfg["steps"], strict=False)
    traces["flow.csv"] = report.csv_text(["t", "p", "m", "V"], trace.samples)
    return {"space": cone.to_json(), **pair.to_json(), "data": cfg["data"], **trace.to_json()}


def cmd_logsob(cfg) -> dict:
    cone = _cone_from(cfg)
    model = ConeModel(cone, make_grid(cone.N, 4.0, cfg["points"], t_min=0.05))
    rows = []
    for c0 in cfg["c0"]:
        u = model.sample(lambda r: np.exp(-c0 * r * r))
        rep = logsobolev_check(model, u)
        lin = [linearized_logsobolev_check(model, u, v) for v in cfg["v"] + [rep["energy"] / rep["norm2"]]]
        rows.append({"c0": c0, "deficit": rep["deficit"], "holds": rep["holds"],
                     "equality_tolerance": 1e-6, "equality": abs(rep["deficit"]) <= 1e-6,
                     "linearized": [{"v": x["v"], "relative_gap": x["relative_gap"], "holds": x["holds"]}
                                    for x in lin]})
    return {"space": cone.to_json(), "rows": rows, "tolerance": 1e-8}


def cmd_li_limit(cfg, traces: dict) -> dict:
    times = np.geomspace(cfg["t_min"], cfg["t_max"], cfg["count"])
    if cfg["space"] == "cone":
        space = ConeSpace.planar(cfg["theta"])
        rep = li_limit_trace(space, cfg["x"], cfg["y"], cfg["z"], times)
    elif cfg["space"] == "surface":
        space = SurfaceSpace(cfg["c"])
        model = SurfaceModel(space, points=cfg["points"], t_max=float(times[-1]))
        pole = ConePoint(0.0, 0.0)
        rep = li_limit_trace(space, pole, pole, pole, times, model=model)
    else:
        raise ConfigError("space must be cone or surface")
    traces["li_limit.csv"] = report.csv_text(["t", "h", "volume", "trace", "t_scaled_h"], rep["rows"])
    return rep


def cmd_rigidity(cfg) -> dict:
    n = cfg["n"]
    if n < 2:
        raise ConfigError("n must be >= 2")
    table = munn_perelman_table(n)
    out = {**table.to_json(), "text": table.to_text(), "monotone": table.monotone()}
    if cfg["K"]:
        out["topology"] = [topology_report(n, K, table) for K in cfg["K"]]
    return out


def cmd_verify(cfg) -> tuple[dict, bool]:
    from .verify import CRITERIA, run_criterion

    only = cfg["only"] or sorted(CRITERIA)
    bad = [k for k in only if k not in CRITERIA]
    if bad:
        raise ConfigError(f"no criteria {bad}")
    results = []
    for k in only:
        res = run_criterion(k, cfg["seed"])
        print(res.line(), file=sys.stderr, flush=True)
        results.append(res)
    passed = all(r.passed for r in results)
    return {"seed": cfg["seed"], "passed": passed, "criteria": [r.to_json() for r in results]}, passed


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    traces: dict = {}
    ok = True
    try:
        cfg = resolve(args)
        cmd = args.command
        if cmd == "constants":
            doc = cmd_constants(cfg)
        elif cmd == "norm":
            doc = cmd_norm(cfg)
        elif cmd == "flow":
            doc = cmd_flow(cfg, traces)
        elif cmd == "logsob":
            doc = cmd_logsob(cfg)
        elif cmd == "li-limit":
            doc = cmd_li_limit(cfg, traces)
        elif cmd == "rigidity":
            doc = cmd_rigidity(cfg)
        else:
            doc, ok = cmd_verify(cfg)
        doc["seed"] = cfg["seed"]
        text = report.dumps(doc, cmd)
    except NUMERIC_ERRORS as exc:
        print(f"hypercone: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, GridMismatchError, ValueError) as exc:
        print(f"hypercone: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if cfg["out"]:
        report.write_text(cfg["out"], text)
    else:
        sys.stdout.write(text)
    if traces:
        trace_dir = Path(cfg["trace_dir"] or ".")
        for name, body in traces.items():
            report.write_text(trace_dir / name, body)
    return EXIT_OK if ok else EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
