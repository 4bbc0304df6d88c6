"""Time integration of the lattice KPP system, front tracking and diagnostics.

The system is

    du_i/dt = dprime_i (u_{i+1} - u_i) + d_i (u_{i-1} - u_i) + f(i, u_i)

on a finite window. Outside the window the state is continued by copying
the edge cell, which keeps both equilibria ``u = 0`` and ``u = 1`` exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Mapping

import numpy as np
from scipy.stats import linregress

from .coefficients import CoefficientField, Nonlinearity, Window
from .errors import IntegrationError

DEFAULT_LEVELS = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class LatticeState:
    t: float
    lo: int
    values: np.ndarray

    @property
    def window(self) -> Window:
        return Window(self.lo, self.lo + self.values.size - 1)

    @classmethod
    def single_seed(cls, window, site: int = 0, value: float = 1.0) -> "LatticeState":
        """``u_site = value`` and zero elsewhere, at time 0."""
        window = Window.coerce(window)
        if site not in window:
            raise ValueError(f"seed site {site} outside window {window}")
        u = np.zeros(window.size)
        u[site - window.lo] = value
        return cls(0.0, window.lo, u)

    @classmethod
    def constant(cls, window, value: float) -> "LatticeState":
        window = Window.coerce(window)
        return cls(0.0, window.lo, np.full(window.size, float(value)))


@dataclass(frozen=True)
class IntegrationPolicy:
    """Fixed-step RK4 settings.

    The step is the largest divisor of ``snapshot_every`` not exceeding
    ``step_factor / (2 D + C)``, so snapshot times are hit exactly.
    """

    snapshot_every: float = 0.5
    step_factor: float = 0.2
    clamp_tol: float = 1e-14
    sentinel: float = 1e-10
    levels: tuple = DEFAULT_LEVELS
    keep_states: bool = True

    def step(self, D: float, C: float) -> float:
        cap = self.step_factor / (2.0 * D + C)
        return self.snapshot_every / math.ceil(self.snapshot_every / cap - 1e-12)


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of a run plus front tracks.

    ``values[k]`` is the state at ``times[k]`` (empty when states were not
    kept); ``fronts[(level, direction)]`` is the front position per snapshot.
    """

    times: np.ndarray
    lo: int
    values: np.ndarray
    fronts: Mapping
    final: LatticeState
    bounds: Mapping = dc_field(default_factory=dict)

    @property
    def window(self) -> Window:
        return self.final.window

    def __len__(self) -> int:
        return self.times.size

    def index_of(self, t: float, tol: float = 1e-9) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol:
            raise ValueError(f"no snapshot at t={t}")
        return k

    def state(self, k: int) -> LatticeState:
        if self.values.size == 0:
            raise ValueError("trajectory was run without keeping states")
        return LatticeState(float(self.times[k]), self.lo, self.values[k])

    def front(self, level: float, direction: str = "+") -> np.ndarray:
        key = (float(level), direction)
        if key not in self.fronts:
            if self.values.size == 0:
                raise ValueError(f"level {level} was not tracked")
            return np.array([front_position(self.state(k), level, direction)
                             for k in range(len(self))])
        return self.fronts[key]

    def rows(self):
        """``(t, i, u)`` rows for every kept snapshot."""
        idx = self.window.indices
        for t, u in zip(self.times, self.values):
            for i, x in zip(idx, u):
                yield float(t), int(i), float(x)

    def front_rows(self):
        """``(t, level, direction, position)`` rows."""
        for (level, direction), pos in sorted(self.fronts.items()):
            for t, x in zip(self.times, pos):
                yield float(t), level, direction, float(x)


def _rhs(dp, d, c, nl):
    def f(u):
        right = np.empty_like(u)
        left = np.empty_like(u)
        right[:-1], right[-1] = u[1:], u[-1]
        left[1:], left[0] = u[:-1], u[0]
        return dp * (right - u) + d * (left - u) + nl(c, u)
    return f


def buffer_cells(D: float, C: float, horizon: float) -> int:
    """Cells needed between the initial support and the window edge."""
    return math.ceil((2.0 * D + C + 1.0) * horizon)


def integrate(field: CoefficientField, nl: Nonlinearity | None, initial: LatticeState,
              horizon: float, policy: IntegrationPolicy | None = None) -> Trajectory:
    """Run RK4 from ``initial`` for ``horizon`` time units."""
    nl = nl or Nonlinearity()
    policy = policy or IntegrationPolicy()
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    n_snap = horizon / policy.snapshot_every
    if abs(n_snap - round(n_snap)) > 1e-9:
        raise ValueError("horizon must be a multiple of the snapshot interval")
    n_snap = int(round(n_snap))
    u = np.asarray(initial.values, float).copy()
    if u.min() < 0 or u.max() > 1 or not np.all(np.isfinite(u)):
        raise ValueError("initial data must lie in [0, 1]")
    for level in policy.levels:
        if not 0 < level < 1:
            raise ValueError("front levels must lie in (0, 1)")

    window = initial.window
    dp, d, c = field.sample(window)
    b = field.bounds(window)
    D, C = b["D"], b["C"]
    dt = policy.step(D, C)
    steps = int(round(policy.snapshot_every / dt))

    support = np.flatnonzero(u > 0)
    if support.size:
        margin = min(support[0], u.size - 1 - support[-1])
        need = buffer_cells(D, C, horizon)
        if margin < need:
            warnings.warn(f"initial support is {margin} cells from the window edge; "
                          f"the propagation buffer asks for {need}", RuntimeWarning,
                          stacklevel=2)
    watch = u[0] < policy.sentinel and u[-1] < policy.sentinel

    f = _rhs(dp, d, c, nl)
    times = [0.0]
    states = [u.copy()] if policy.keep_states else []
    tracks = {(float(lv), s): [front_position(initial, lv, s)]
              for lv in policy.levels for s in ("+", "-")}
    h = dt
    for k in range(1, n_snap + 1):
        for _ in range(steps):
            k1 = f(u)
            k2 = f(u + 0.5 * h * k1)
            k3 = f(u + 0.5 * h * k2)
            k4 = f(u + h * k3)
            u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            lo_v, hi_v = u.min(), u.max()
            if not (np.isfinite(lo_v) and np.isfinite(hi_v)):
                raise IntegrationError("non-finite value in the state", step=k)
            if lo_v < -policy.clamp_tol or hi_v > 1 + policy.clamp_tol:
                raise IntegrationError("state left [0, 1] beyond the clamp tolerance",
                                       min=float(lo_v), max=float(hi_v))
            np.clip(u, 0.0, 1.0, out=u)
        t = k * policy.snapshot_every
        if watch and (u[0] >= policy.sentinel or u[-1] >= policy.sentinel):
            raise IntegrationError("front reached the window edge: enlarge the window",
                                   t=t, left=float(u[0]), right=float(u[-1]))
        state = LatticeState(t, window.lo, u)
        times.append(t)
        if policy.keep_states:
            states.append(u.copy())
        for (lv, s), track in tracks.items():
            track.append(front_position(state, lv, s))

    values = np.array(states) if policy.keep_states else np.empty((0, u.size))
    return Trajectory(
        times=np.array(times), lo=window.lo, values=values,
        fronts={key: np.array(v) for key, v in tracks.items()},
        final=LatticeState(times[-1], window.lo, u.copy()),
        bounds={**b, "dt": dt})


def front_position(state: LatticeState, level: float, direction: str = "+") -> float:
    """Interpolated outermost crossing of ``level``.

    Returns ``nan`` when no value reaches the level and the window edge when
    the state is at or above the level right up to the edge.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if direction not in ("+", "-"):
        raise ValueError("direction must be '+' or '-'")
    u = state.values
    above = np.flatnonzero(u >= level)
    if above.size == 0:
        return math.nan
    if direction == "+":
        k = above[-1]
        if k == u.size - 1:
            return float(state.lo + k)
        return float(state.lo + k + (u[k] - level) / (u[k] - u[k + 1]))
    k = above[0]
    if k == 0:
        return float(state.lo)
    return float(state.lo + k - (u[k] - level) / (u[k] - u[k - 1]))


@dataclass(frozen=True)
class SpeedFit:
    level: float
    direction: str
    speed: float
    stderr: float
    fit_window: tuple
    points: int


def empirical_speed(traj: Trajectory, level: float = 0.5, fit_window=None,
                    direction: str = "+") -> SpeedFit:
    """Least-squares speed of the front over ``fit_window``.

    The default window is the last third of the run. Leftward fronts are
    reported with a positive outward speed.
    """
    t = traj.times
    if fit_window is None:
        fit_window = (t[-1] * 2.0 / 3.0, t[-1])
    a, b = fit_window
    pos = traj.front(level, direction)
    mask = (t >= a - 1e-12) & (t <= b + 1e-12) & np.isfinite(pos)
    count = int(mask.sum())
    if count < 10:
        raise ValueError(f"only {count} snapshots with a front in the fit window; need 10")
    sign = 1.0 if direction == "+" else -1.0
    x, y = t[mask], sign * pos[mask]
    if np.ptp(y) == 0.0:
        slope, err = 0.0, 0.0
    else:
        fit = linregress(x, y)
        slope, err = float(fit.slope), float(fit.stderr)
    return SpeedFit(float(level), direction, slope, err, (float(a), float(b)), count)


def harnack_theta(D: float, D_low: float, T: float) -> float:
    """``exp(2 D T) / min(1, D_low T)``."""
    if not T > 0:
        raise ValueError("lag T must be positive")
    return math.exp(2.0 * D * T) / min(1.0, D_low * T)


@dataclass(frozen=True)
class HarnackReport:
    T: float
    theta: float
    max_ratio: float
    samples: int
    violations: int

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.theta * (1 + 1e-9)


def harnack_check(traj: Trajectory, T: float, samples: int = 1000, *,
                  seed: int = 0, floor: float = 1e-250) -> HarnackReport:
    """Sample ``u_i(t) / u_j(t + T)`` with ``j`` a neighbour of ``i`` or ``i``.

    Only sites whose value is at least ``floor`` at time ``t`` are drawn, so
    ratios are not dominated by floating-point underflow.
    """
    if traj.values.size == 0:
        raise ValueError("trajectory was run without keeping states")
    t = traj.times
    pairs = [(k, traj.index_of(t[k] + T)) for k in range(len(t))
             if np.min(np.abs(t - (t[k] + T))) <= 1e-9]
    if not pairs:
        raise ValueError(f"no snapshot pair at lag {T}")
    theta = harnack_theta(traj.bounds["D"], traj.bounds["D_low"], T)
    rng = np.random.default_rng(seed)
    n = traj.values.shape[1]
    worst, bad, drawn = 0.0, 0, 0
    for _ in range(samples * 20):
        if drawn == samples:
            break
        k, k2 = pairs[rng.integers(len(pairs))]
        i = int(rng.integers(1, n - 1))
        ui = traj.values[k, i]
        if ui < floor:
            continue
        j = i + int(rng.integers(-1, 2))
        ratio = ui / traj.values[k2, j]
        drawn += 1
        worst = max(worst, ratio)
        bad += ratio > theta * (1 + 1e-9)
    if drawn < samples:
        raise ValueError(f"only {drawn} usable triples found")
    return HarnackReport(float(T), theta, float(worst), drawn, int(bad))


@dataclass(frozen=True)
class HomogenizationTable:
    eps: float
    rows: list
    min_slack: float
    tolerance: float

    @property
    def flagged(self) -> list:
        return [r for r in self.rows if r[4] < -self.tolerance]


def homogenization_diag(traj: Trajectory, eps: float, hstar, times=(0.5, 1.0),
                        speeds=None, *, tolerance: float = 0.05) -> HomogenizationTable:
    """Compare ``z = eps ln u(t/eps, floor(x/eps))`` with ``min(-t H*(-x/t), 0)``.

    ``speeds`` are the ratios ``x/t`` sampled at each macroscopic time; the
    default spans ``hstar``'s range. Rows are ``(t, x, z, bound, slack)``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if speeds is None:
        speeds = np.linspace(-hstar.q[-1], -hstar.q[0], 41)
    rows = []
    for tm in times:
        if not tm > 0:
            raise ValueError("macroscopic times must be positive")
        k = traj.index_of(tm / eps)
        u = traj.values[k]
        for s in speeds:
            x = s * tm
            i = math.floor(x / eps + 1e-9)
            if i not in traj.window:
                raise ValueError(f"site {i} outside the trajectory window")
            val = u[i - traj.lo]
            if not val > 0:
                raise IntegrationError("zero value at positive time", t=tm / eps, i=i)
            z = eps * math.log(val)
            bound = min(-tm * float(hstar(-s)), 0.0)
            rows.append((float(tm), float(x), z, bound, z - bound))
    return HomogenizationTable(float(eps), rows, min(r[4] for r in rows), tolerance)
