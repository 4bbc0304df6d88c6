"""Hamiltonians, their conjugates, spreading speeds and simulation checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .coefficients import CoefficientField, Nonlinearity, Window, reflect_field
from .curves import ConjugateCurve, HamiltonianCurve
from .dynamics import (DEFAULT_LEVELS, IntegrationPolicy, LatticeState,
                       empirical_speed, integrate)
from .eigen import (LyapunovHamiltonian, envelope, lambda_closed_form, lambda_limit,
                    lambda_periodic)
from .eigen._types import EigenEstimate
from .errors import InvariantViolation

METHODS = ("auto", "closed", "periodic", "cell", "random", "windowed")


# --------------------------------------------------------------------------
# evaluators: p -> (lower, upper, estimate)


@dataclass
class Evaluator:
    """Cached evaluation of the Hamiltonian at single momenta.

    ``__call__`` returns the pair ``(lower, upper)``; the two agree unless
    the evaluator only produces windowed bounds.
    """

    field: CoefficientField
    method: str
    fn: Callable
    bounds_only: bool = False
    cache: dict = dc_field(default_factory=dict)

    def estimate(self, p: float):
        p = float(p)
        if p not in self.cache:
            self.cache[p] = self.fn(p)
        return self.cache[p]

    def __call__(self, p: float) -> tuple[float, float]:
        lo, hi, _ = self.estimate(p)
        return lo, hi


def resolve_method(field: CoefficientField, method: str = "auto") -> str:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if method != "auto":
        return method
    return {"homogeneous": "closed", "periodic": "periodic", "almost_periodic": "cell",
            "random": "random", "arbitrary": "windowed"}[field.media_class]


def make_evaluator(field: CoefficientField, method: str = "auto", *,
                   eps_schedule=(0.1, 0.05, 0.025), window=1 << 14,
                   lyapunov_range: int = 10_000,
                   nested_windows=(1 << 10, 1 << 12, 1 << 14)) -> Evaluator:
    method = resolve_method(field, method)

    if method == "closed":
        if field.kind != "homogeneous":
            raise ValueError("closed form needs a homogeneous field")
        dp, d, c = (float(x[0]) for x in field.triple([0]))

        def fn(p):
            v = lambda_closed_form(dp, d, c, p)
            return v, v, EigenEstimate(p, v, "closed-form", 0.0)
    elif method == "periodic":
        def fn(p):
            e = lambda_periodic(field, p)
            return e.value, e.value, e
    elif method == "cell":
        def fn(p):
            e = lambda_limit(field, p, eps_schedule, window)
            return e.value, e.value, e
    elif method == "random":
        if not field.coupled:
            raise ValueError("the Lyapunov pipeline needs dprime[i] == d[i+1]")
        ham = LyapunovHamiltonian(field, lyapunov_range)

        def fn(p):
            e = ham(p)
            return e.value, e.value, e
    else:
        wins = [Window.centered(n) for n in nested_windows]

        def fn(p):
            vals = [lambda_limit(field, p, eps_schedule, w) for w in wins]
            lo = min(v.value for v in vals)
            hi = max(v.value for v in vals)
            return lo, hi, vals[-1]
        return Evaluator(field, method, fn, bounds_only=True)
    return Evaluator(field, method, fn)


# --------------------------------------------------------------------------
# curves


def _upper_bound(b: Mapping, p):
    return b["D"] * (np.exp(p) + np.exp(-p)) - 2.0 * b["D_low"] + b["C"]


def _midpoint_excess(p, v) -> np.ndarray:
    """Excess of each interior value over the chord of its neighbours."""
    p, v = np.asarray(p, float), np.asarray(v, float)
    if p.size < 3:
        return np.zeros(0)
    w = (p[2:] - p[1:-1]) / (p[2:] - p[:-2])
    return v[1:-1] - (w * v[:-2] + (1 - w) * v[2:])


def check_curve(curve: HamiltonianCurve, field: CoefficientField, *,
                convex_tol: float = 1e-6, envelope_tol: float = 1e-9) -> None:
    """Raise ``InvariantViolation`` at the first point breaking an invariant."""
    for k, p in enumerate(curve.p):
        lo, hi = curve.lower[k], curve.upper[k]
        win = curve.windows[k] or Window.centered(4096)
        b = field.bounds(win)
        env_lo, env_hi = envelope(field, p, win)
        slack = envelope_tol * max(1.0, abs(hi))
        if lo > hi + slack:
            raise InvariantViolation("lower Hamiltonian exceeds upper", p=p, lower=lo, upper=hi)
        if not lo > 0:
            raise InvariantViolation("Hamiltonian not positive", p=p, value=lo)
        if hi > _upper_bound(b, p) + slack:
            raise InvariantViolation("Hamiltonian above its exponential bound", p=p, value=hi)
        if lo < env_lo - slack or hi > env_hi + slack:
            raise InvariantViolation("Hamiltonian outside the site-symbol envelope",
                                     p=p, value=(lo, hi), envelope=(env_lo, env_hi))
    excess = _midpoint_excess(curve.p, curve.upper)
    if excess.size and excess.max() > convex_tol:
        k = int(np.argmax(excess)) + 1
        raise InvariantViolation("Hamiltonian fails midpoint convexity", p=float(curve.p[k]),
                                 excess=float(excess.max()))


def hamiltonian_curve(field: CoefficientField, p_grid, method: str = "auto", *,
                      evaluator: Evaluator | None = None, check: bool = True,
                      **options) -> HamiltonianCurve:
    """Sample the Hamiltonian on ``p_grid`` and verify its invariants."""
    ev = evaluator or make_evaluator(field, method, **options)
    p = np.sort(np.asarray(p_grid, float))
    if p.size == 0:
        raise ValueError("empty momentum grid")
    rows = [ev.estimate(x) for x in p]
    curve = HamiltonianCurve(
        p=p,
        upper=np.array([r[1] for r in rows]),
        lower=np.array([r[0] for r in rows]),
        methods=tuple(r[2].method for r in rows),
        residuals=np.array([r[2].residual for r in rows]),
        windows=tuple(r[2].window for r in rows),
        eps=tuple(r[2].eps for r in rows),
        media_class=field.media_class,
        bounds_only=ev.bounds_only,
        meta={"method": ev.method})
    if check:
        check_curve(curve, field)
    return curve


def convex_conjugate(curve: HamiltonianCurve, q_grid, *, lower: bool = True) -> ConjugateCurve:
    """``sup_p (p q - H(p))`` over the curve samples, refined by a parabola
    through the discrete maximizer and its neighbours."""
    p = curve.p
    h = curve.lower if lower else curve.upper
    q = np.asarray(q_grid, float)
    vals = np.empty(q.size)
    arg = np.empty(q.size)
    for k, x in enumerate(q):
        g = p * x - h
        j = int(np.argmax(g))
        if j == 0 or j == p.size - 1:
            side = p[j]
            raise ValueError(f"conjugate maximizer at the grid edge p={side} for q={x}; "
                             f"widen the grid beyond |p| = {abs(side) * 1.5:.3g}")
        y0, y1, y2 = g[j - 1], g[j], g[j + 1]
        x0, x1, x2 = p[j - 1], p[j], p[j + 1]
        den = (x0 - x1) * (x0 - x2) * (x1 - x2)
        a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
        b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
        if a < 0:
            xs = -b / (2 * a)
            if x0 <= xs <= x2:
                vals[k] = max(y1, a * xs * xs + b * xs + (y1 - a * x1 * x1 - b * x1))
                arg[k] = xs
                continue
        vals[k], arg[k] = y1, x1
    return ConjugateCurve(q=q, values=vals, argmax=arg)


# --------------------------------------------------------------------------
# speeds


def bracket_p_max(b: Mapping) -> float:
    """Where ``(D (e^p + e^-p) - 2 D_low + C) / p`` reaches twice its minimum."""
    U = lambda p: _upper_bound(b, p) / p
    res = minimize_scalar(U, bounds=(1e-3, 50.0), method="bounded",
                          options={"xatol": 1e-10})
    target = 2.0 * res.fun
    hi = max(2.0 * res.x, 1.0)
    while U(hi) < target:
        hi *= 2.0
    return float(brentq(lambda p: U(p) - target, res.x, hi))


@dataclass(frozen=True)
class DirectionalSpeed:
    omega: float
    p_star: float
    edge_hit: bool
    fallback: bool


def minimize_speed(H: Callable[[float], float], p_max: float, *, grid: int = 48,
                   tol: float = 1e-8) -> DirectionalSpeed:
    """``min_{p>0} H(-p)/p`` by a log-spaced scan on ``[1e-3, p_max]`` and a
    golden-section refinement around the best grid point."""
    ps = np.geomspace(1e-3, p_max, grid)
    obj = lambda p: H(-p) / p
    vals = np.array([obj(p) for p in ps])
    interior = (vals[1:-1] < vals[:-2]) & (vals[1:-1] < vals[2:])
    k = int(np.argmin(vals))
    if interior.sum() > 1:
        warnings.warn("speed objective has several local minima on the scan; "
                      "using an exhaustive fine grid", RuntimeWarning, stacklevel=3)
        fine = np.geomspace(ps[max(k - 2, 0)], ps[min(k + 2, grid - 1)], 400)
        fv = np.array([obj(p) for p in fine])
        j = int(np.argmin(fv))
        return DirectionalSpeed(float(fv[j]), float(fine[j]), k in (0, grid - 1), True)
    if k in (0, grid - 1):
        return DirectionalSpeed(float(vals[k]), float(ps[k]), True, False)
    res = minimize_scalar(obj, bracket=(ps[k - 1], ps[k], ps[k + 1]), method="golden",
                          tol=tol)
    return DirectionalSpeed(float(res.fun), float(res.x), False, False)


@dataclass(frozen=True)
class SpeedReport:
    omega_right_upper: float
    omega_right_lower: float
    omega_left_upper: float
    omega_left_lower: float
    p_star_right: float
    p_star_left: float
    media_class: str
    gap_diag: Mapping
    method: str = ""
    bounds_only: bool = False
    p_max: tuple = ()

    KEYS = ("omega_right_upper", "omega_right_lower", "omega_left_upper",
            "omega_left_lower", "p_star_right", "p_star_left", "media_class", "gap_diag")

    @property
    def omega(self) -> float:
        return self.omega_right_upper

    def to_json(self) -> dict:
        return {k: getattr(self, k) if k != "gap_diag" else dict(self.gap_diag)
                for k in self.KEYS}


def spreading_speeds(field: CoefficientField, method: str = "auto", *,
                     bounds_window=4096, **options) -> SpeedReport:
    """Upper and lower speeds in both directions.

    The left speeds are those of the reflected field. Classes where the two
    Hamiltonians coincide get one computation per direction.
    """
    win = Window.coerce(bounds_window)
    out = {}
    methods = {}
    for side, fld in (("right", field), ("left", reflect_field(field))):
        b = fld.bounds(win)
        p_max = bracket_p_max(b)
        ev = make_evaluator(fld, method, **options)
        methods[side] = ev.method
        hi = minimize_speed(lambda p: ev(p)[1], p_max)
        lo = minimize_speed(lambda p: ev(p)[0], p_max) if ev.bounds_only else hi
        out[side] = (lo, hi, p_max, ev.bounds_only)
    (rl, ru, rp, rb), (ll, lu, lp, lb) = out["right"], out["left"]
    gap = {
        "right_relative_gap": (ru.omega - rl.omega) / ru.omega,
        "left_relative_gap": (lu.omega - ll.omega) / lu.omega,
        "direction_asymmetry": abs(ru.omega - lu.omega) / ru.omega,
        "edge_hit": bool(ru.edge_hit or lu.edge_hit or rl.edge_hit or ll.edge_hit),
        "fallback": bool(ru.fallback or lu.fallback),
    }
    report = SpeedReport(
        omega_right_upper=ru.omega, omega_right_lower=rl.omega,
        omega_left_upper=lu.omega, omega_left_lower=ll.omega,
        p_star_right=ru.p_star, p_star_left=lu.p_star,
        media_class=field.media_class, gap_diag=gap, method=methods["right"],
        bounds_only=rb or lb, p_max=(rp, lp))
    for name, lo, hi in (("right", rl, ru), ("left", ll, lu)):
        if not 0 < lo.omega <= hi.omega * (1 + 1e-12):
            raise InvariantViolation("speed ordering violated", direction=name,
                                     lower=lo.omega, upper=hi.omega)
    return report


# --------------------------------------------------------------------------
# simulation against prediction


@dataclass(frozen=True)
class SandwichReport:
    rows: list
    tails: Mapping
    speeds: SpeedReport
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(r["inside"] for r in self.rows) and all(self.tails.values())


def default_window(omega: float, horizon: float) -> int:
    return math.ceil(1.25 * omega * horizon) + 100


def sandwich_report(field: CoefficientField, nl: Nonlinearity | None = None, *,
                    horizon: float = 200.0, window: int | None = None,
                    levels=DEFAULT_LEVELS, tolerance: float = 0.03,
                    margin: float = 0.05, method: str = "auto",
                    speeds: SpeedReport | None = None, policy=None,
                    **options) -> SandwichReport:
    """Front speeds of a single-seed run against the predicted interval.

    Besides the per-level fits, the two limits are checked at the final
    time: ``max u`` ahead of ``(omega_upper + m) t`` is below 0.01 and
    ``min u`` behind ``(omega_lower - m) t`` is above 0.99, ``m`` being
    ``margin * omega_upper``.
    """
    if horizon < 100:
        raise ValueError("sandwich runs need a horizon of at least 100")
    speeds = speeds or spreading_speeds(field, method, **options)
    half = window or default_window(max(speeds.omega_right_upper,
                                        speeds.omega_left_upper), horizon)
    win = Window(-half, half)
    policy = policy or IntegrationPolicy(levels=tuple(levels), keep_states=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        traj = integrate(field, nl, LatticeState.single_seed(win), horizon, policy)
    intervals = {"+": (speeds.omega_right_lower, speeds.omega_right_upper),
                 "-": (speeds.omega_left_lower, speeds.omega_left_upper)}
    rows = []
    for level in levels:
        for direction, (lo, hi) in intervals.items():
            fit = empirical_speed(traj, level, direction=direction)
            inside = lo * (1 - tolerance) <= fit.speed <= hi * (1 + tolerance)
            rows.append({"level": float(level), "direction": direction,
                         "speed": fit.speed, "stderr": fit.stderr,
                         "omega_lower": lo, "omega_upper": hi, "inside": bool(inside)})
    u, t = traj.final.values, traj.times[-1]
    idx = traj.window.indices
    tails = {}
    for direction, (lo, hi) in intervals.items():
        m = margin * hi
        x = idx if direction == "+" else -idx
        ahead = u[x >= (hi + m) * t]
        behind = u[(x >= 0) & (x <= (lo - m) * t)]
        tails[f"ahead_{direction}"] = bool(ahead.size == 0 or ahead.max() < 0.01)
        tails[f"behind_{direction}"] = bool(behind.size > 0 and behind.min() > 0.99)
    return SandwichReport(rows, tails, speeds, tolerance)
