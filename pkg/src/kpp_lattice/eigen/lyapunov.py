"""Decaying solutions, Lyapunov exponents and the inverse-exponent Hamiltonian.

For a symmetric field and ``gamma`` above the top of the spectrum, the
equation ``(A u)_i + (c_i - gamma) u_i = 0`` has a unique positive solution
with ``u_0 = 1`` that vanishes at ``+infinity``. Its ratios
``rho_i = u_i / u_{i-1}`` obey the backward continued fraction

    rho_i = d_i / (gamma - Gamma_i - d_{i+1} rho_{i+1}),

which is contractive, so truncating far to the right and running leftwards
gives the right tail and the leftward extension in one stable pass.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .._kernels import decay_ratios, largest_eigenvalue
from ..coefficients import CoefficientField, Window, reflect_field
from ..errors import ConvergenceError
from ._types import (CertificateFunction, DecaySolution, EigenEstimate,
                     LyapunovCurve, LyapunovPoint)
from .basic import admissibility_check


class DecayChain:
    """Samples of a field on ``[window.lo, window.hi + max_extension + 1]``
    prepared for repeated decaying-solution solves."""

    def __init__(self, field: CoefficientField, window, max_extension: int = 4096):
        window = Window.coerce(window)
        if 0 not in window:
            raise ValueError("window must contain the normalization site 0")
        self.field = field
        self.window = window
        self.max_extension = int(max_extension)
        idx = np.arange(window.lo, window.hi + self.max_extension + 2, dtype=np.int64)
        dp, d, c = field.triple(idx)
        if not np.array_equal(dp[:-1], d[1:]):
            bad = int(idx[np.argmax(dp[:-1] != d[1:])])
            raise ValueError(f"field violates dprime[i] == d[i+1] at i={bad}")
        self.Gamma = c[:-1] - d[:-1] - dp[:-1]
        self.d = d
        self.D = float(d.max())
        self.D_low = float(d.min())
        self.c_inf = float(c[:-1].min())
        self.C = float(np.abs(c[:-1]).max())

    @cached_property
    def gamma_floor(self) -> float:
        """Top of the Dirichlet spectrum over every site the chain can touch."""
        return float(largest_eigenvalue(self.Gamma, self.d[1:-1].copy(), 1e-12))

    def _ratios(self, gamma: float, ext: int) -> np.ndarray:
        n = self.window.size + ext
        out = np.empty(n)
        bad = decay_ratios(gamma - self.Gamma[:n], self.d[:n + 1], out)
        if bad >= 0:
            raise ConvergenceError(
                "decaying-solution ratio turned non-positive: gamma too close to the "
                "top of the spectrum for this window", gamma=gamma,
                site=int(self.window.lo + bad))
        return out[:self.window.size]

    def solve(self, gamma: float, *, tol: float = 1e-12, strict: bool = True):
        """Log-ratios on the window, doubling the truncation until the change
        summed over the window is below ``tol``."""
        ext = min(64, self.max_extension)
        prev = np.log(self._ratios(gamma, ext))
        monotone = True
        while True:
            nxt_ext = min(2 * ext, self.max_extension)
            if nxt_ext == ext:
                if strict:
                    raise ConvergenceError("decaying solution not converged within the "
                                           "maximal extension", gamma=gamma, extension=ext)
                return prev, ext, False, monotone
            cur = np.log(self._ratios(gamma, nxt_ext))
            monotone &= bool(np.all(cur >= prev - 1e-13))
            ext = nxt_ext
            if np.abs(cur - prev).sum() <= tol:
                return cur, ext, True, monotone
            prev = cur


def lemma_rate(chain: DecayChain, gamma: float) -> float:
    """Ratio bound ``D_low / (gamma - inf c + 2 D)``."""
    return chain.D_low / (gamma - chain.c_inf + 2.0 * chain.D)


def exponential_envelope(gamma: float, gamma_inf: float, D: float, D_low: float,
                         C: float) -> tuple[float, float]:
    """Constants ``(K, rate)`` with ``u_i <= K exp(-rate i)`` for ``i >= 1``.

    ``delta`` is chosen so the coercivity margin ``beta`` is half of
    ``gamma - gamma_inf``; the square-root growth of the energy bound is
    absorbed by giving up ``min(delta/2, 1/2)`` of the rate.
    """
    gap = gamma - gamma_inf
    if gap <= 0:
        raise ValueError("gamma must exceed gamma_inf")

    def beta(delta):
        ep, em = math.exp(delta), math.exp(-delta)
        c_delta = math.sqrt(3.0) * D * math.sqrt((ep - 1) ** 2 + (1 - em) ** 2 + (ep - em) ** 2)
        return gap - c_delta - D * (ep - 1) - D_low * (em - 1)

    hi = 1.0
    while beta(hi) > 0.5 * gap and hi < 50:
        hi *= 2
    delta = brentq(lambda t: beta(t) - 0.5 * gap, 0.0, hi) if beta(hi) < 0.5 * gap else hi
    b = beta(delta)
    k0 = (D * (math.exp(delta) + math.exp(-delta) + 2) + C + gamma) ** 2 / (b * b * (math.e ** 2 - 1))
    shrink = min(0.5 * delta, 0.5)
    K = math.sqrt(k0) / math.sqrt(2 * math.e * shrink) + 1.0
    return K, delta - shrink


def decaying_solution(field: CoefficientField, gamma: float, window=(-1000, 1000), *,
                      margin: float = 1e-3, gamma_floor: float | None = None,
                      max_extension: int = 4096, tol: float = 1e-12, strict: bool = True,
                      chain: DecayChain | None = None) -> DecaySolution:
    """Positive solution vanishing at ``+infinity`` with ``u_0 = 1``.

    ``gamma_floor`` defaults to the top of the spectrum over every site the
    computation touches; ``gamma`` must clear it by ``margin``. Both
    lemma-type bounds are verified before returning.
    """
    chain = chain or DecayChain(field, window, max_extension)
    floor = chain.gamma_floor if gamma_floor is None else float(gamma_floor)
    if not gamma > floor + margin:
        raise ValueError(f"gamma={gamma} not above the spectrum top {floor} + {margin}: "
                         "no positive decaying solution")
    lr, ext, converged, monotone = chain.solve(gamma, tol=tol, strict=strict)
    r = lemma_rate(chain, gamma)
    K, rate = exponential_envelope(gamma, max(floor, chain.gamma_floor), chain.D,
                                   chain.D_low, chain.C)
    sol = DecaySolution(gamma=float(gamma), window=chain.window, log_ratios=lr,
                        gamma_floor=floor, lemma_rate=r, decay_constant=K,
                        decay_rate=rate, extension=ext, converged=converged)
    _check_bounds(sol)
    if converged and not monotone:
        raise ConvergenceError("truncated solutions not monotone in the truncation",
                               gamma=gamma)
    return sol


def _check_bounds(sol: DecaySolution) -> None:
    idx = sol.window.indices
    lu = sol.log_values
    ref = idx * math.log(sol.lemma_rate)
    slack = 1e-10 * (1.0 + np.abs(ref))
    right, left = idx >= 0, idx < 0
    if np.any(lu[right] < ref[right] - slack[right]) or np.any(lu[left] > ref[left] + slack[left]):
        raise ConvergenceError("decaying solution violates the geometric ratio bounds",
                               gamma=sol.gamma)
    pos = idx >= 1
    env = math.log(sol.decay_constant) - sol.decay_rate * idx[pos]
    if np.any(lu[pos] > env + 1e-10 * (1.0 + np.abs(env))):
        raise ConvergenceError("decaying solution violates its exponential envelope",
                               gamma=sol.gamma)


def _point(chain: DecayChain, gamma: float, R: int, strict: bool) -> LyapunovPoint:
    lr, _, converged, _ = chain.solve(gamma, strict=strict)
    zero = -chain.window.lo
    mu = -float(lr[zero + 1:zero + R + 1].mean())
    nu = -float(lr[zero - R + 1:zero + 1].mean())
    slope = -float(lr[zero + 1:zero + R + 1].sum()) / R
    return LyapunovPoint(float(gamma), mu, nu, slope, converged)


def lyapunov_mu(field: CoefficientField, gamma: float, range: int = 10_000, *,
                margin: float = 1e-3, gamma_floor: float | None = None,
                max_extension: int = 4096, chain: DecayChain | None = None) -> LyapunovPoint:
    """Exponential decay rates of the decaying solution to the right (``mu``)
    and its growth rate to the left (``nu``) over ``range`` sites each.

    ``mu`` is the shift average of ``-ln u_1``; ``slope_check`` is the
    single-slope estimate ``-ln u_range / range`` of the same quantity.
    """
    R = int(range)
    if R < 1000:
        raise ValueError("range must be at least 1000")
    chain = chain or DecayChain(field, (-R, R), max_extension)
    floor = chain.gamma_floor if gamma_floor is None else float(gamma_floor)
    if not gamma > floor + margin:
        raise ValueError(f"gamma={gamma} not above the spectrum top {floor} + {margin}")
    return _point(chain, gamma, R, strict=True)


def _plateau_end(mu_at, gamma_inf: float, offsets=(1e-1, 1e-2, 1e-3)) -> tuple[float, str]:
    """Extrapolate ``mu`` to the spectrum top with the better of a
    square-root and a linear fit in the offset."""
    x = np.asarray(offsets, float)
    y = np.array([mu_at(gamma_inf + t) for t in x])
    best = None
    for name, basis in (("sqrt", np.sqrt(x)), ("linear", x)):
        a = np.c_[np.ones_like(x), basis]
        coef, *_ = np.linalg.lstsq(a, y, rcond=None)
        res = float(np.linalg.norm(a @ coef - y))
        if best is None or res < best[0]:
            best = (res, float(coef[0]), name)
    return max(best[1], 0.0), best[2]


class LyapunovHamiltonian:
    """Principal eigenvalue of a symmetric random field from Lyapunov exponents.

    Right-decaying solutions give the branch ``p < 0`` and those of the
    reflected field the branch ``p > 0``; between the two plateau ends the
    value is the spectrum top.
    """

    def __init__(self, field: CoefficientField, range: int = 10_000, *,
                 max_extension: int = 4096, offsets=(1e-1, 1e-2, 1e-3)):
        self.field = field
        self.range = int(range)
        win = (-self.range, self.range)
        self.chains = {+1: DecayChain(field, win, max_extension),
                       -1: DecayChain(reflect_field(field), win, max_extension)}
        self.gamma_inf = max(ch.gamma_floor for ch in self.chains.values())
        ends = {s: _plateau_end(lambda g, s=s: self.mu(g, s), self.gamma_inf, offsets)
                for s in (+1, -1)}
        self.p_right, self.fit_right = ends[+1]
        self.p_left, self.fit_left = -ends[-1][0], ends[-1][1]
        ch = self.chains[+1]
        self._upper = lambda q: ch.D * (math.exp(q) + math.exp(-q)) - 2 * ch.D_low + ch.C

    def mu(self, gamma: float, side: int = +1) -> float:
        return _point(self.chains[side], gamma, self.range, strict=False).mu

    def point(self, gamma: float, side: int = +1) -> LyapunovPoint:
        return _point(self.chains[side], gamma, self.range, strict=False)

    def inverse(self, q: float, side: int = +1) -> float:
        """``gamma`` with ``mu(gamma) = q`` on the given side."""
        f = lambda g: self.mu(g, side) - q
        lo_off = 1e-3
        while f(self.gamma_inf + lo_off) > 0:
            lo_off *= 0.1
            if lo_off < 1e-10:
                raise ConvergenceError("mu inversion bracket failure at the lower end",
                                       q=q, side=side)
        hi = max(self._upper(q), self.gamma_inf) + 1.0
        while f(hi) < 0:
            hi = self.gamma_inf + 2 * (hi - self.gamma_inf)
            if hi > 1e8:
                raise ConvergenceError("mu inversion bracket failure at the upper end",
                                       q=q, side=side)
        return brentq(f, self.gamma_inf + lo_off, hi, xtol=1e-13, rtol=1e-15, maxiter=200)

    def __call__(self, p: float) -> EigenEstimate:
        p = float(p)
        side = +1 if p < 0 else -1
        q = abs(p)
        end = self.p_right if side > 0 else -self.p_left
        win = Window(-self.range, self.range)
        if q <= end or q == 0.0:
            return EigenEstimate(p=p, value=self.gamma_inf, method="plateau",
                                 residual=math.nan, window=win,
                                 meta={"plateau": (self.p_left, self.p_right)})
        gamma = self.inverse(q, side)
        chain = self.chains[side]
        lr, _, converged, _ = chain.solve(gamma, strict=False)
        rho = np.exp(lr)
        n = chain.window.size
        # L_p phi / phi for phi = exp(q i) u reduces to the decaying-solution equation
        lhs = chain.d[1:n] * rho[1:n] + chain.d[:n - 1] / rho[:n - 1] + chain.Gamma[:n - 1]
        residual = float(np.abs(lhs - gamma).max())
        zero = -chain.window.lo
        logu = np.empty_like(lr)
        logu[zero] = 0.0
        logu[zero + 1:] = np.cumsum(lr[zero + 1:])
        logu[:zero] = -np.cumsum(lr[1:zero + 1][::-1])[::-1]
        logphi = q * chain.window.indices + logu
        if side < 0:
            logphi = logphi[::-1]
        cert = CertificateFunction(win, np.exp(logphi - logphi[zero]))
        return EigenEstimate(p=p, value=float(gamma), method="lyapunov-inverse",
                             residual=residual, window=win, certificate=cert,
                             meta={"converged": converged,
                                   "admissible": admissibility_check(cert).passed})


def lyapunov_curve(field: CoefficientField, gammas=None, *, range: int = 10_000,
                   count: int = 20, span: float = 2.0,
                   hamiltonian: LyapunovHamiltonian | None = None) -> LyapunovCurve:
    """Tabulate ``mu`` and ``nu`` on a grid above the spectrum top.

    The default grid has ``count`` points spread geometrically over
    ``(gamma_inf + 1e-2, gamma_inf + span]``.
    """
    ham = hamiltonian or LyapunovHamiltonian(field, range)
    if gammas is None:
        gammas = ham.gamma_inf + np.geomspace(1e-2, span, count)
    gammas = np.asarray(gammas, float)
    if np.any(gammas <= ham.gamma_inf + 1e-3):
        raise ValueError("every gamma must exceed the spectrum top by 1e-3")
    pts = [ham.point(g, +1) for g in gammas]
    return LyapunovCurve(
        gammas=gammas,
        mu=np.array([pt.mu for pt in pts]),
        nu=np.array([pt.nu for pt in pts]),
        slope_check=np.array([pt.slope_check for pt in pts]),
        gamma_inf=ham.gamma_inf,
        p_right=ham.p_right,
        p_left=ham.p_left,
    )
