"""Experiment orchestration: registry runs, reports, and persistence.

Each subcommand produces a single self-contained report dict (schema
"report_v1") that embeds the resolved configuration, the seed, per-test
results, and summary statistics. Re-running with the embedded seed and
--no-timestamp reproduces the serialized report byte for byte.

Exit codes: 0 pass, 2 inequality violation (an empirical contradiction
of a certified bound), 3 configuration or gate violation, 4 resolution
failure (spectral solve or quadrature could not certify anything at the
requested resolution). The NPI_THREADS environment variable caps worker
threads for per-trial evaluation; unset means one worker per CPU.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

import npi
from . import _backend
from . import constants as cst
from . import discrete as disc
from . import dynamics as dyn
from . import geometry as geo
from . import registry
from . import weights as wts
from .errors import ConfigError, GateError, InequalityViolation, ResolutionError

REPORT_SCHEMA = "report_v1"

DEFAULT_TRIALS = {"verify": 20, "sweep": 5, "absorption": 200}

SUBCOMMANDS = ("verify", "sharp", "absorption", "jensen", "constants", "sweep")

EXIT_PASS = 0
EXIT_VIOLATION = 2
EXIT_GATE = 3
EXIT_RESOLUTION = 4


def thread_cap() -> int:
    """Worker-thread budget from NPI_THREADS (fallback: CPU count)."""
    raw = os.environ.get("NPI_THREADS", "")
    try:
        v = int(raw)
    except ValueError:
        v = 0
    if v > 0:
        return v
    return os.cpu_count() or 1


def load_example(token: str) -> registry.ExampleConfig:
    """Resolve a registry name or a JSON config file path."""
    pth = Path(token)
    if token.endswith(".json") or pth.is_file():
        if not pth.is_file():
            raise ConfigError(f"config file {token!r} not found")
        with open(pth) as fh:
            return registry.config_from_dict(json.load(fh))
    return registry.get(token)


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


def _clean(obj):
    """Recursively coerce numpy scalars/arrays so json.dumps succeeds."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _versions() -> dict:
    return {"package": npi.__version__, "numpy": np.__version__,
            "backend": _backend.backend_name()}


def build_report(subcommand: str, example: str, flags: dict, config: dict,
                 results: list, summary: dict, exit_code: int,
                 seed=None, wall_time: float = None,
                 no_timestamp: bool = False) -> dict:
    report = {
        "schema": REPORT_SCHEMA,
        "subcommand": subcommand,
        "example": example,
        "flags": _clean(flags),
        "config": _clean(config),
        "seed": seed,
        "results": _clean(results),
        "summary": _clean(summary),
        "exit_code": int(exit_code),
        "versions": _versions(),
    }
    if not no_timestamp:
        report["timestamp"] = datetime.now(timezone.utc).isoformat()
        if wall_time is not None:
            report["wall_time_s"] = round(float(wall_time), 3)
    return report


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def to_csv(report: dict) -> str:
    """Plot-ready flat rendering; shape depends on the subcommand."""
    sub = report.get("subcommand")
    lines = []
    if "error" in report:
        lines.append("key,value")
        lines.append(f"error_type,{report['error']['type']}")
        lines.append(f"exit_code,{report['exit_code']}")
    elif sub == "verify":
        lines.append("trial,lhs,functional,ratio,passed")
        for r in report["results"]:
            lines.append(f"{r['trial']},{r['lhs']:.17g},{r['functional']:.17g},"
                         f"{r['ratio']:.17g},{int(r['pass'])}")
    elif sub == "sweep":
        lines.append("grid,cells0,trials,max_ratio,mean_ratio,passes,failures")
        for r in report["results"]:
            if r.get("skipped"):
                continue
            lines.append(f"{r['grid']},{r['cells0']},{r['trials']},"
                         f"{r['max_ratio']:.17g},{r['mean_ratio']:.17g},"
                         f"{r['passes']},{r['failures']}")
    elif sub == "absorption":
        lines.append("alpha,measure,count")
        for r in report["results"]:
            lines.append(f"{r['alpha']},{r['measure']:.17g},{r['count']}")
    else:
        lines.append("key,value")
        for k in sorted(report["summary"]):
            lines.append(f"{k},{report['summary'][k]}")
    return "\n".join(lines) + "\n"


def write_report(report: dict, out=None, fmt: str = "json") -> str:
    """Serialize once; write to the path or return for stdout."""
    text = to_json(report) if fmt == "json" else to_csv(report)
    if out is not None:
        Path(out).write_text(text)
    return text


# ---------------------------------------------------------------------------
# subcommand cores
# ---------------------------------------------------------------------------


def _functional_values(functional, fields) -> list:
    if hasattr(functional, "value_many"):
        return [float(v) for v in functional.value_many(fields)]
    return [float(functional.value(f)) for f in fields]


def _map_trials(fn, count: int) -> list:
    cap = thread_cap()
    if cap > 1 and count > 1:
        with ThreadPoolExecutor(max_workers=min(cap, count)) as ex:
            return list(ex.map(fn, range(count)))
    return [fn(i) for i in range(count)]


def _verify_trials(cfg, grid, trials: int, seed: int, functional=None) -> tuple:
    """Per-field inequality (or raw-ratio) results on one grid."""
    if functional is None:
        functional = cfg.assemble(grid)
    fields = cfg.fields(grid, trials, seed)
    vals = _functional_values(functional, fields)
    if cfg.constant is not None:
        c = cfg.constant.evaluate()["constant"]

        def one(i):
            rep = disc.verify_inequality(fields[i], functional, c, cfg.domain,
                                         cfg.tol, fval=vals[i])
            rep["trial"] = i
            return rep

        results = _map_trials(one, trials)
    else:
        # no pinned constant: report the raw ratio, pass when it is finite
        c = None

        def one(i):
            bad = disc.off_domain_max(fields[i], cfg.domain)
            if bad > 0.0:
                raise ConfigError(f"inadmissible test function: |u| = {bad:g}")
            lhs = disc.lhs_norm(fields[i], cfg.p, cfg.domain.omega,
                                subsample=cfg.subsample)
            fv = vals[i]
            ratio = lhs / fv if fv > 0.0 else math.inf if lhs > 0.0 else 0.0
            return {"trial": i, "lhs": lhs, "functional": fv, "ratio": ratio,
                    "pass": bool(math.isfinite(ratio))}

        results = _map_trials(one, trials)
    passes = sum(1 for r in results if r["pass"])
    ratios = [r["ratio"] for r in results]
    summary = {
        "trials": trials,
        "passes": passes,
        "failures": trials - passes,
        "constant": c,
        "max_ratio": max(ratios) if ratios else 0.0,
        "mean_ratio": sum(ratios) / len(ratios) if ratios else 0.0,
        "grid_cells": list(grid.dims),
    }
    return results, summary


def run_verify(cfg, grid=None, trials=None, seed=0, p=None, tol=None) -> tuple:
    cfg = registry.with_overrides(cfg, grid=grid, p=p, tol=tol)
    trials = DEFAULT_TRIALS["verify"] if trials is None else int(trials)
    g = cfg.build_grid()
    results, summary = _verify_trials(cfg, g, trials, seed)
    if cfg.constant is not None:
        code = EXIT_PASS if summary["failures"] == 0 else EXIT_VIOLATION
    else:
        code = EXIT_PASS if summary["failures"] == 0 else EXIT_RESOLUTION
    return cfg, results, summary, code


def run_sharp(cfg, grid=None, p=None) -> tuple:
    cfg = registry.with_overrides(cfg, grid=grid, p=p)
    g = cfg.build_grid()
    functional = cfg.assemble(g)
    res = disc.sharp_constant_p2(functional)
    summary = dict(res)
    if cfg.constant is not None:
        bound = cfg.constant.evaluate()["constant"]
        summary["bound"] = bound
        summary["ratio"] = res["c_sharp"] / bound
        summary["pass"] = bool(res["c_sharp"] <= bound)
    else:
        summary["bound"] = None
        summary["pass"] = True
    code = EXIT_PASS if summary["pass"] else EXIT_VIOLATION
    return cfg, [summary], summary, code


def _sample_omega(domain, count: int, seed: int) -> np.ndarray:
    """Rejection-sample interior points from the enclosing box."""
    rng = np.random.default_rng(seed)
    lo, hi = (np.asarray(v, dtype=float) for v in domain.box())
    out = []
    have = 0
    for _ in range(200):
        X = lo + (hi - lo) * rng.random((max(4 * count, 64), len(lo)))
        X = X[geo.contains(domain.omega, X)]
        if len(X):
            out.append(X)
            have += len(X)
        if have >= count:
            break
    if have < count:
        raise ConfigError("omega sampling starved; region nearly empty in its box")
    return np.concatenate(out)[:count]


def run_absorption(cfg, grid=None, trials=None, seed=0) -> tuple:
    if cfg.flow is None or cfg.phi_region is None or cfg.absorbing is None:
        raise ConfigError(f"example {cfg.name!r} has no flow/parameter-set setup")
    trials = DEFAULT_TRIALS["absorption"] if trials is None else int(trials)
    resolution = 64 if grid is None else int(grid)
    X = _sample_omega(cfg.domain, trials, seed)
    rep = dyn.absorption_partition(cfg.flow, X, cfg.phi_region, cfg.absorbing,
                                   cfg.domain, phi_resolution=resolution)
    d = rep.to_dict()
    results = d["histogram"]
    summary = {
        "max_alpha": d["max_alpha"],
        "not_absorbed_measure": d["not_absorbed"]["measure"],
        "not_absorbed_count": d["not_absorbed"]["count"],
        "phi_cell_volume": d["phi_cell_volume"],
        "omega_samples": trials,
        "phi_resolution": resolution,
        "pass": d["not_absorbed"]["count"] == 0,
    }
    code = EXIT_PASS if summary["pass"] else EXIT_VIOLATION
    return cfg, results, summary, code


def r_field_from_spec(spec: dict, corr):
    """Holder-norm field R(x) from its declarative description."""
    kind = spec.get("kind")
    if kind == "const":
        v = float(spec["value"])

        def r_const(X):
            X = np.atleast_2d(np.asarray(X, dtype=float))
            return np.full(len(X), v)

        return r_const
    if kind == "cone-sector":
        c = float(spec["c_sector"])

        def r_sector(X):
            X = np.atleast_2d(np.asarray(X, dtype=float))
            d = corr.gamma.distance_batch(X)
            return 1.0 / (c * (corr.b * d) ** 2)

        return r_sector
    raise ConfigError(f"unknown R-field kind {kind!r}")


def run_jensen(cfg) -> tuple:
    if cfg.jensen is None:
        raise ConfigError(f"example {cfg.name!r} declares no reverse-Jensen block")
    blk = cfg.jensen
    weight = wts.weight_from_dict(blk["weight"])
    corr = wts.corr_from_dict(blk["corr"])
    r_field = r_field_from_spec(blk["r"], corr)
    target = cfg.domain.gamma if cfg.domain.gamma_is_target() else None
    res = wts.reverse_jensen_check(
        weight, corr, r_field, cfg.domain, float(blk["nu"]),
        y_samples=int(blk.get("y_samples", 64)),
        quad_resolution=int(blk.get("quad_resolution", 64)),
        tol=float(blk.get("tol", 0.02)),
        gamma_target=target,
    )
    summary = {"nu": float(blk["nu"]), "nu_emp": res["nu_emp"],
               "worst_y": res["worst_y"], "samples": res["samples"],
               "resolution": res["resolution"], "pass": res["pass"]}
    code = EXIT_PASS if res["pass"] else EXIT_VIOLATION
    return cfg, [summary], summary, code


def run_constants(example: str, nu=None, p=None) -> tuple:
    """Bound evaluation: the control pseudo-example or a registry entry."""
    if example == "control":
        if nu is None or p is None:
            raise ConfigError("constants control needs --nu and --p")
        value = cst.control_constant(float(nu), float(p))
        config = {"name": "control", "nu": float(nu), "p": float(p)}
        summary = {"constant": value, "nu": float(nu), "p": float(p)}
        return config, [summary], summary, EXIT_PASS
    cfg = load_example(example)
    if cfg.constant is None:
        raise ConfigError(f"example {cfg.name!r} has no pinned constant")
    breakdown = cfg.constant.evaluate()
    return cfg, [breakdown], dict(breakdown), EXIT_PASS


def run_sweep(cfg, grid=None, trials=None, seed=0, p=None) -> tuple:
    """Resolution ladder around the base grid; one verify block per rung."""
    cfg = registry.with_overrides(cfg, p=p)
    trials = DEFAULT_TRIALS["sweep"] if trials is None else int(trials)
    base = cfg.omega_cells if grid is None else int(grid)
    rungs = []
    for n in (base // 2, base, 2 * base):
        if n < 4 or n in rungs:
            continue
        try:
            cfg.grid_cells0(n)
        except ConfigError:
            continue
        rungs.append(n)
    results = []
    failures = 0
    for n in rungs:
        g = cfg.build_grid(n)
        functional = cfg.assemble(g)
        if getattr(functional, "mode", None) == "stream":
            results.append({"grid": n, "cells0": cfg.grid_cells0(n),
                            "skipped": True,
                            "reason": "streaming quadrature exceeds the sweep budget"})
            continue
        trial_results, summary = _verify_trials(cfg, g, trials, seed,
                                                functional=functional)
        failures += summary["failures"]
        results.append({"grid": n, "cells0": cfg.grid_cells0(n),
                        "trials": trials, "max_ratio": summary["max_ratio"],
                        "mean_ratio": summary["mean_ratio"],
                        "passes": summary["passes"],
                        "failures": summary["failures"]})
    ran = [r for r in results if not r.get("skipped")]
    summary = {
        "rungs": len(results),
        "ran": len(ran),
        "failures": failures,
        "constant": (None if cfg.constant is None
                     else cfg.constant.evaluate()["constant"]),
        "max_ratio": max((r["max_ratio"] for r in ran), default=0.0),
    }
    if failures == 0:
        code = EXIT_PASS
    else:
        code = EXIT_VIOLATION if cfg.constant is not None else EXIT_RESOLUTION
    return cfg, results, summary, code


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


def _error_type(exc) -> tuple:
    if isinstance(exc, InequalityViolation):
        return "inequality-violation", EXIT_VIOLATION
    if isinstance(exc, GateError):
        return "gate-violation", EXIT_GATE
    if isinstance(exc, ResolutionError):
        return "resolution-failure", EXIT_RESOLUTION
    if isinstance(exc, ConfigError):
        return "config-error", EXIT_GATE
    raise exc


def execute(subcommand: str, example: str, grid=None, trials=None, seed=0,
            p=None, tol=None, nu=None, no_timestamp: bool = False) -> dict:
    """Run one subcommand and build its report; never raises NPI errors."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    flags = {"grid": grid, "trials": trials, "seed": seed, "p": p, "tol": tol,
             "nu": nu}
    t0 = time.perf_counter()
    seed_used = None
    try:
        if subcommand == "constants":
            config, results, summary, code = run_constants(example, nu=nu, p=p)
        else:
            cfg = load_example(example)
            if subcommand == "verify":
                cfg, results, summary, code = run_verify(
                    cfg, grid=grid, trials=trials, seed=seed, p=p, tol=tol)
                seed_used = seed
            elif subcommand == "sharp":
                cfg, results, summary, code = run_sharp(cfg, grid=grid, p=p)
            elif subcommand == "absorption":
                cfg, results, summary, code = run_absorption(
                    cfg, grid=grid, trials=trials, seed=seed)
                seed_used = seed
            elif subcommand == "jensen":
                cfg, results, summary, code = run_jensen(cfg)
            else:
                cfg, results, summary, code = run_sweep(
                    cfg, grid=grid, trials=trials, seed=seed, p=p)
                seed_used = seed
            config = cfg
    except (ConfigError, GateError, InequalityViolation, ResolutionError) as exc:
        kind, code = _error_type(exc)
        report = build_report(subcommand, example, flags, {}, [], {}, code,
                              seed=seed_used, wall_time=time.perf_counter() - t0,
                              no_timestamp=no_timestamp)
        report["error"] = {"type": kind, "message": str(exc)}
        return report
    echo = config.to_dict() if hasattr(config, "to_dict") else config
    return build_report(subcommand, example, flags, echo, results, summary,
                        code, seed=seed_used,
                        wall_time=time.perf_counter() - t0,
                        no_timestamp=no_timestamp)


def run(subcommand: str, example: str, out=None, fmt: str = "json",
        **kwargs) -> tuple:
    """Execute, serialize, and persist; returns (exit_code, text)."""
    report = execute(subcommand, example, **kwargs)
    text = write_report(report, out=out, fmt=fmt)
    return report["exit_code"], text
