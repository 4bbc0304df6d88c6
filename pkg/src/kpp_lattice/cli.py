"""Command-line runner: ``kpp <task> --config PATH [--out DIR] [--seed N ...]``.

Exit status is 0 on success, 1 when the sandwich check fails, 2 for a bad
configuration and 3 for a numerical abort.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .coefficients import Nonlinearity, build_field, validate_field
from .config import TASKS, RunConfig, load
from .dynamics import IntegrationPolicy, LatticeState, empirical_speed, integrate
from .eigen import lyapunov_curve
from .errors import ConfigError, NumericalAbort
from .io import ArtifactWriter
from .speed import (convex_conjugate, hamiltonian_curve, sandwich_report,
                    spreading_speeds)


def workers_from_env(n_jobs: int) -> int:
    raw = os.environ.get("KPP_WORKERS")
    if raw is None or raw == "":
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"KPP_WORKERS must be a positive integer, got {raw!r}",
                              "KPP_WORKERS") from None
        if cap < 1:
            raise ConfigError("KPP_WORKERS must be at least 1", "KPP_WORKERS")
    return max(1, min(cap, n_jobs))


def _field(cfg: RunConfig, seed=None):
    spec = cfg.field_spec
    if seed is not None:
        spec["seed"] = seed
    elif cfg.seeds:
        if len(cfg.seeds) > 1:
            raise ConfigError(f"task {cfg.task} takes a single seed", "seeds")
        spec["seed"] = cfg.seeds[0]
    return build_field(spec)


def _nonlinearity(cfg: RunConfig) -> Nonlinearity:
    return Nonlinearity(cfg.get("nl.kind"), holder_exponent=cfg.get("nl.holder_exponent"))


def _validated(cfg: RunConfig, field):
    report = validate_field(field, _nonlinearity(cfg), cfg.get("validate.window"))
    if not report.passed:
        failed = [k for k, ok in report.checks.items() if not ok]
        raise ConfigError(f"field fails the standing hypotheses ({', '.join(failed)}); "
                          f"worst site {report.worst_index}, margin {report.margin_tails}",
                          "field")
    return report


def _eigen_options(cfg: RunConfig) -> dict:
    return {"eps_schedule": tuple(cfg.get("eigen.eps_schedule")),
            "window": cfg.get("eigen.window"),
            "lyapunov_range": cfg.get("eigen.lyapunov_range")}


# --------------------------------------------------------------------------
# tasks


def task_simulate(cfg, out):
    field = _field(cfg)
    horizon = cfg.get("simulate.horizon")
    half = cfg.get("simulate.window")
    every = cfg.get("simulate.snapshot_every")
    dump = cfg.get("simulate.dump_every")
    if dump and abs(dump / every - round(dump / every)) > 1e-9:
        raise ConfigError("simulate.dump_every must be a multiple of snapshot_every",
                          "simulate.dump_every")
    if abs(horizon / every - round(horizon / every)) > 1e-9:
        raise ConfigError("simulate.horizon must be a multiple of snapshot_every",
                          "simulate.horizon")
    policy = IntegrationPolicy(snapshot_every=every, levels=tuple(cfg.get("simulate.levels")),
                               keep_states=bool(dump))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        traj = integrate(field, _nonlinearity(cfg), LatticeState.single_seed((-half, half)),
                         horizon, policy)
    if dump:
        stride = int(round(dump / every))
        keep = set(range(0, len(traj), stride))
        idx = traj.window.indices
        rows = ((float(traj.times[k]), int(i), float(x))
                for k in sorted(keep) for i, x in zip(idx, traj.values[k]))
        out.table("trajectory", ("t", "i", "u"), rows)
    out.table("fronts", ("t", "level", "direction", "position"), traj.front_rows())
    fits = []
    for level in policy.levels:
        for direction in ("+", "-"):
            try:
                f = empirical_speed(traj, level, direction=direction)
                fits.append((f.level, f.direction, f.speed, f.stderr, f.fit_window[0],
                             f.fit_window[1], f.points))
            except ValueError:
                fits.append((float(level), direction, math.nan, math.nan, math.nan,
                             math.nan, 0))
    out.table("fits", ("level", "direction", "speed", "stderr", "t_start", "t_end",
                       "points"), fits)
    return {"warnings": [str(w.message) for w in caught], "dt": traj.bounds["dt"]}, 0


def task_speed(cfg, out):
    field = _field(cfg)
    _validated(cfg, field)
    report = spreading_speeds(field, cfg.get("eigen.method"),
                              bounds_window=cfg.get("speed.window"), **_eigen_options(cfg))
    out.document("speed", report.to_json())
    return {"omega": report.omega, "p_star": report.p_star_right,
            "method": report.method, "bounds_only": report.bounds_only}, 0


def task_eigen_curve(cfg, out):
    field = _field(cfg)
    p = np.linspace(cfg.get("curve.p_min"), cfg.get("curve.p_max"), cfg.get("curve.p_count"))
    curve = hamiltonian_curve(field, p, cfg.get("eigen.method"), **_eigen_options(cfg))
    out.table("hamiltonian", ("p", "lambda", "method", "residual", "window", "eps"),
              curve.rows())
    h = curve.lower
    q_lo = (h[2] - h[0]) / (p[2] - p[0])
    q_hi = (h[-1] - h[-3]) / (p[-1] - p[-3])
    pad = 0.1 * (q_hi - q_lo)
    conj = convex_conjugate(curve, np.linspace(q_lo + pad, q_hi - pad, 41))
    out.table("conjugate", ("q", "value", "argmax"),
              zip(map(float, conj.q), map(float, conj.values), map(float, conj.argmax)))
    return {"method": curve.meta["method"], "bounds_only": curve.bounds_only,
            "media_class": curve.media_class}, 0


def task_lyapunov(cfg, out):
    field = _field(cfg)
    if not field.coupled:
        raise ConfigError("lyapunov task needs a field with dprime[i] == d[i+1]",
                          "field.coupled")
    curve = lyapunov_curve(field, range=cfg.get("eigen.lyapunov_range"),
                           count=cfg.get("lyapunov.count"), span=cfg.get("lyapunov.span"))
    out.table("lyapunov", ("gamma", "mu", "nu", "slope_check"),
              zip(map(float, curve.gammas), map(float, curve.mu), map(float, curve.nu),
                  map(float, curve.slope_check)))
    return {"gamma_inf": curve.gamma_inf, "p_right": curve.p_right,
            "p_left": curve.p_left}, 0


def task_sandwich(cfg, out):
    field = _field(cfg)
    _validated(cfg, field)
    speeds = spreading_speeds(field, cfg.get("eigen.method"),
                              bounds_window=cfg.get("speed.window"), **_eigen_options(cfg))
    rep = sandwich_report(field, _nonlinearity(cfg), horizon=cfg.get("sandwich.horizon"),
                          window=cfg.get("sandwich.window") or None,
                          tolerance=cfg.get("sandwich.tolerance"),
                          margin=cfg.get("sandwich.margin"), speeds=speeds)
    cols = ("level", "direction", "speed", "stderr", "omega_lower", "omega_upper", "inside")
    out.table("sandwich", cols, ([r[c] for c in cols] for r in rep.rows))
    out.document("speed", speeds.to_json())
    return {"passed": rep.passed, "tails": dict(rep.tails)}, 0 if rep.passed else 1


def ensemble_member(values: dict, seed: int) -> dict:
    """One realization: predicted speeds and, optionally, simulated ones."""
    cfg = RunConfig("ensemble", values, (), "csv")
    field = _field(cfg, seed)
    _validated(cfg, field)
    speeds = spreading_speeds(field, cfg.get("eigen.method"),
                              bounds_window=cfg.get("speed.window"), **_eigen_options(cfg))
    row = {"seed": seed, "omega_right": speeds.omega_right_upper,
           "omega_left": speeds.omega_left_upper, "p_star_right": speeds.p_star_right,
           "sim_right": math.nan, "sim_left": math.nan}
    if cfg.get("ensemble.simulate"):
        half = cfg.get("ensemble.window")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            traj = integrate(field, _nonlinearity(cfg), LatticeState.single_seed((-half, half)),
                             cfg.get("ensemble.horizon"),
                             IntegrationPolicy(levels=(0.5,), keep_states=False))
        row["sim_right"] = empirical_speed(traj, 0.5, direction="+").speed
        row["sim_left"] = empirical_speed(traj, 0.5, direction="-").speed
    return row


def task_ensemble(cfg, out):
    seeds = list(cfg.seeds)
    if len(seeds) < 2:
        raise ConfigError("ensemble needs at least two seeds", "seeds")
    n = workers_from_env(len(seeds))
    values = dict(cfg.values)
    if n == 1:
        rows = [ensemble_member(values, s) for s in seeds]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(ensemble_member, [values] * len(seeds), seeds))
    cols = ("seed", "omega_right", "omega_left", "p_star_right", "sim_right", "sim_left")
    out.table("ensemble", cols, ([r[c] for c in cols] for r in rows))
    om = np.array([r["omega_right"] for r in rows])
    mean = float(om.mean())
    summary = {"seeds": seeds, "mean": mean, "spread": float((om.max() - om.min()) / mean)}
    if cfg.get("ensemble.simulate"):
        err = [abs(r["sim_right"] - r["omega_right"]) / r["omega_right"] for r in rows]
        summary["max_sim_relative_error"] = float(max(err))
    out.document("ensemble_summary", summary)
    return summary, 0


TASK_FUNCS = {"simulate": task_simulate, "speed": task_speed,
              "eigen-curve": task_eigen_curve, "lyapunov": task_lyapunov,
              "sandwich": task_sandwich, "ensemble": task_ensemble}


def run(cfg: RunConfig, out_dir) -> int:
    out = ArtifactWriter(out_dir, cfg.format)
    results, status = TASK_FUNCS[cfg.task](cfg, out)
    out.manifest(toolkit="kpp_lattice", version=__version__, task=cfg.task,
                 created=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                 parameters=cfg.resolved(), results=results)
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kpp", description=__doc__.splitlines()[0])
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", required=True, help="flat key=value config file")
    ap.add_argument("--out", default=".", help="output directory (default: current)")
    ap.add_argument("--seed", type=int, nargs="+", dest="seeds",
                    help="realization seeds; replaces the config's seed list")
    ap.add_argument("--format", choices=("csv", "json"), default=None)
    ap.add_argument("--version", action="version", version=f"kpp_lattice {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config, args.task, seeds=args.seeds, fmt=args.format)
        return run(cfg, args.out)
    except NumericalAbort as exc:
        diag = ", ".join(f"{k}={v!r}" for k, v in exc.diagnostics.items())
        print(f"kpp: numerical abort in {exc.module}: {exc}" + (f" ({diag})" if diag else ""),
              file=sys.stderr)
        return 3
    except ConfigError as exc:
        where = f" [{exc.key}]" if exc.key else ""
        print(f"kpp: config error{where}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"kpp: config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
