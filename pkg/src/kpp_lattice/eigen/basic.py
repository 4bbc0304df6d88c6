"""Closed-form and periodic principal eigenvalues of the twisted operator.

``L_p phi = exp(-p i) L(exp(p i) phi)`` acts as

    (L_p phi)_i = dprime_i e^p phi_{i+1} + d_i e^-p phi_{i-1}
                  + (c_i - dprime_i - d_i) phi_i
"""

from __future__ import annotations

import math

import numpy as np

from ..coefficients import CoefficientField, Window
from ..errors import ConvergenceError
from ._types import AdmissibilityReport, CertificateFunction, EigenEstimate


def lambda_closed_form(dprime: float, d: float, c: float, p: float) -> float:
    """Eigenvalue of a constant-coefficient field, ``dprime e^p + d e^-p - dprime - d + c``."""
    if not (dprime > 0 and d > 0):
        raise ValueError("diffusion rates must be positive")
    return dprime * math.exp(p) + d * math.exp(-p) - dprime - d + c


def site_symbols(dprime, d, c, p):
    """Per-site values of the closed form; their inf and sup bracket every eigenvalue."""
    return dprime * np.exp(p) + d * np.exp(-p) - dprime - d + c


def envelope(field: CoefficientField, p: float, window) -> tuple[float, float]:
    h = site_symbols(*field.sample(window), p)
    return float(h.min()), float(h.max())


def apply_twisted(dprime, d, c, p, phi, *, ring=True):
    """``L_p phi`` on a window; the ends wrap around when ``ring`` is set,
    otherwise values outside the window are zero."""
    if ring:
        right, left = np.roll(phi, -1), np.roll(phi, 1)
    else:
        right = np.r_[phi[1:], 0.0]
        left = np.r_[0.0, phi[:-1]]
    return dprime * math.exp(p) * right + d * math.exp(-p) * left + (c - dprime - d) * phi


def relative_residual(dprime, d, c, p, phi, lam, *, ring=True) -> float:
    """``max |L_p phi - lam phi| / phi`` over the window."""
    r = apply_twisted(dprime, d, c, p, phi, ring=ring) - lam * phi
    return float((np.abs(r) / phi).max())


def periodic_matrix(dprime, d, c, p) -> np.ndarray:
    """Cyclic matrix of ``L_p`` on one period; wrapped entries accumulate."""
    n = len(c)
    m = np.zeros((n, n))
    for i in range(n):
        m[i, (i + 1) % n] += dprime[i] * math.exp(p)
        m[i, (i - 1) % n] += d[i] * math.exp(-p)
        m[i, i] += c[i] - dprime[i] - d[i]
    return m


def _perron(m: np.ndarray, max_steps: int, tol: float):
    """Perron root by power iteration on ``m + s I`` with a nonnegative shift.

    The Collatz-Wielandt quotients bracket the root at every step, so the
    bracket width is a certified error bar.
    """
    n = m.shape[0]
    shift = max(0.0, -float(np.diag(m).min())) + 1.0
    a = m + shift * np.eye(n)
    x = np.ones(n)
    lo = hi = None
    for step in range(1, max_steps + 1):
        y = a @ x
        q = y / x
        lo, hi = float(q.min()), float(q.max())
        x = y / y.max()
        if hi - lo <= tol * max(1.0, abs(hi)):
            return 0.5 * (lo + hi) - shift, x, step, hi - lo
    raise ConvergenceError(
        "power iteration did not converge",
        steps=max_steps, bracket=(lo - shift, hi - shift), width=hi - lo)


def lambda_periodic(field: CoefficientField, p: float, N: int | None = None,
                    *, max_steps: int = 100_000, tol: float = 1e-14) -> EigenEstimate:
    """Perron eigenvalue of the ``N``-periodic problem.

    ``N`` defaults to the field period and must be a multiple of it. The
    positive eigenvector, repeated over at least 512 sites, is the certificate.
    """
    period = field.period
    if period is None:
        raise ValueError("field is not periodic")
    n = period if N is None else int(N)
    if n < 1 or n % period:
        raise ValueError(f"N={n} is not a multiple of the field period {period}")
    window = Window(0, n - 1)
    dp, d, c = field.sample(window)
    lam, vec, steps, width = _perron(periodic_matrix(dp, d, c, p), max_steps, tol)
    if not np.all(vec > 0):
        raise ConvergenceError("Perron vector not positive", vector=vec)
    reps = max(2, -(-512 // n))
    cert_window = Window(0, reps * n - 1)
    phi = np.tile(vec, reps)
    residual = relative_residual(*field.sample(cert_window), p, phi, lam)
    return EigenEstimate(p=float(p), value=lam, method="periodic-perron",
                         residual=residual, window=window,
                         certificate=CertificateFunction(cert_window, phi),
                         meta={"steps": steps, "bracket_width": width})


def admissibility_check(cand: CertificateFunction, *, ratio_bound: float = 1e3,
                        slope_tol: float = 1e-2) -> AdmissibilityReport:
    """Finite-window version of the admissible-test-function conditions."""
    v = np.asarray(cand.values, float)
    positive = bool(np.all(v > 0) and np.all(np.isfinite(v)))
    if not positive:
        return AdmissibilityReport(False, False, False, math.inf, math.inf, math.inf)
    ratio = cand.ratio_constant
    slope = cand.log_slope
    return AdmissibilityReport(
        positive=True,
        ratio_ok=ratio <= ratio_bound,
        slope_ok=slope <= slope_tol,
        ratio_constant=ratio,
        log_increment_bound=cand.log_increment_bound,
        log_slope=slope,
    )
