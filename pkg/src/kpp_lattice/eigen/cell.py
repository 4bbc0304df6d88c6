"""Regularized cell problem and the small-eps limit of ``eps * w``.

For eps > 0 the ring equation

    eps w_i - dplus_i exp(w_{i+1} - w_i) - dminus_i exp(w_{i-1} - w_i) - ct_i = 0

with ``dplus = dprime e^p``, ``dminus = d e^-p`` and ``ct = c - dprime - d``
has a unique solution, and ``eps * w`` tends to the principal eigenvalue.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from ..coefficients import CoefficientField, Window
from ..errors import ConvergenceError
from ._types import CellSolution, CertificateFunction, EigenEstimate
from .basic import admissibility_check, envelope


def _ring_residual(w, dplus, dminus, ct, eps):
    ep = np.exp(np.roll(w, -1) - w)
    em = np.exp(np.roll(w, 1) - w)
    return eps * w - dplus * ep - dminus * em - ct, ep, em


def _ring_jacobian(dplus_e, dminus_e, eps):
    n = dplus_e.size
    main = eps + dplus_e + dminus_e
    upper = -dplus_e[:-1]
    lower = -dminus_e[1:]
    jac = sp.diags([main, upper, lower, [-dminus_e[0]], [-dplus_e[-1]]],
                   [0, 1, -1, n - 1, -(n - 1)], format="csc")
    return jac


def solve_cell_problem(field: CoefficientField, p: float, eps: float, window=4096, *,
                       initial: np.ndarray | None = None, tol: float = 1e-10,
                       max_iter: int = 200) -> CellSolution:
    """Solve the ring cell problem by Newton's method.

    Each component of the residual is concave in ``w`` and the Jacobian is a
    strictly diagonally dominant M-matrix, so after the first step the
    iterates increase monotonically to the solution.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    window = Window.coerce(window)
    if window.size < 64:
        raise ValueError("cell-problem window needs at least 64 sites")
    dp, d, c = field.sample(window)
    dplus = dp * math.exp(p)
    dminus = d * math.exp(-p)
    ct = c - dp - d
    sup_ct = float(np.abs(ct).max())
    dbar = float(max(dplus.max(), dminus.max()))
    w_lo = -sup_ct / eps
    w_hi = (2 * dbar + sup_ct) / eps

    if initial is None:
        w = np.full(window.size, float((dplus + dminus + ct).mean()) / eps)
    else:
        w = np.clip(np.asarray(initial, float).copy(), w_lo, w_hi)

    res, ep, em = _ring_residual(w, dplus, dminus, ct, eps)
    err = float(np.abs(res).max())
    it = 0
    while err > tol * max(1.0, sup_ct):
        if it >= max_iter:
            raise ConvergenceError("cell problem did not converge", residual=err,
                                   iterations=it, eps=eps, p=p)
        step = spsolve(_ring_jacobian(dplus * ep, dminus * em, eps), res)
        w = w - step
        res, ep, em = _ring_residual(w, dplus, dminus, ct, eps)
        err = float(np.abs(res).max())
        if not np.isfinite(err):
            raise ConvergenceError("cell problem diverged", iterations=it, eps=eps, p=p)
        it += 1

    slack = 1e-9 * max(1.0, abs(w_hi))
    if w.min() < w_lo - slack or w.max() > w_hi + slack:
        raise ConvergenceError("cell solution outside its a-priori bounds",
                               bounds=(w_lo, w_hi), range=(w.min(), w.max()))

    inner = np.abs(np.diff(w))
    seam = abs(w[0] - w[-1])
    seam_ratio = float(seam / inner.max()) if inner.max() > 0 else (0.0 if seam == 0 else math.inf)
    origin = 0 if 0 in window else (window.lo + window.hi) // 2
    return CellSolution(p=float(p), eps=float(eps), window=window, values=w,
                        origin=origin, residual=err, iterations=it,
                        seam_ratio=seam_ratio)


def lambda_limit(field: CoefficientField, p: float, eps_schedule=(0.1, 0.05, 0.025),
                 window=4096, **solver) -> EigenEstimate:
    """Extrapolate ``eps * w_0`` to eps = 0 from the last two schedule entries.

    The last solution, exponentiated and normalized to 1 at its origin, is
    the certificate; its residual is ``max_i |eps w_i - lambda|``.
    """
    eps_schedule = [float(e) for e in eps_schedule]
    if len(eps_schedule) < 3:
        raise ValueError("eps schedule needs at least three entries")
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])):
        raise ValueError("eps schedule must be strictly decreasing")
    window = Window.coerce(window)

    sols = []
    guess = None
    for eps in eps_schedule:
        if sols:
            # w ~ lambda/eps + O(1): move the leading term to the new eps
            prev = sols[-1]
            guess = prev.values + prev.lambda_estimate * (1 / eps - 1 / prev.eps)
        sols.append(solve_cell_problem(field, p, eps, window, initial=guess, **solver))

    raw = [s.lambda_estimate for s in sols]
    osc = [s.oscillation for s in sols]
    (ea, la), (eb, lb) = (eps_schedule[-2], raw[-2]), (eps_schedule[-1], raw[-1])
    value = (ea * lb - eb * la) / (ea - eb)

    last = sols[-1]
    logphi = last.values - last.values[last.origin - window.lo]
    cert = CertificateFunction(window, np.exp(logphi))
    residual = float(np.abs(last.eps * last.values - value).max())
    growing = all(b > a * (1 + 1e-6) + 1e-12 for a, b in zip(osc, osc[1:]))
    if growing:
        warnings.warn("cell-problem oscillation grows as eps shrinks: field not "
                      "almost periodic or window too small", RuntimeWarning, stacklevel=2)
    lo, hi = envelope(field, p, window)
    return EigenEstimate(
        p=float(p), value=float(value), method="cell-problem", residual=residual,
        window=window, eps=eps_schedule[-1], certificate=cert,
        meta={
            "eps_schedule": tuple(eps_schedule),
            "raw": tuple(raw),
            "oscillation": tuple(osc),
            "oscillation_growing": growing,
            "seam_warning": any(s.seam_warning for s in sols),
            "admissible": admissibility_check(cert).passed,
            "envelope": (lo, hi),
        })
