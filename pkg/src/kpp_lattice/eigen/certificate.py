"""Positive solution of ``L_p u = u^2`` as a lower-bound certificate.

Writing ``L_p = A_p + ct`` with ``A_p`` the pure-difference part, the
equation becomes ``(M - A_p) u = (M + ct - u) u``. For ``M`` large the
right side is increasing in ``u`` on ``[0, sup ct]`` and ``M - A_p`` is an
M-matrix, so iterating linear solves from a sub- and a supersolution
gives two monotone sequences squeezed together.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..coefficients import CoefficientField, Window
from ..errors import ConvergenceError
from ._types import CertificateFunction, NonlinearCertificate
from .basic import admissibility_check
from .tridiag import block_top, require_coupled, tridiag_principal


def _local_subsolution(field, window, p, shift, target, cap):
    """``t exp(-p i) chi_i`` from the principal pair of a centred block,
    grown until its eigenvalue reaches ``target``."""
    mid = (window.lo + window.hi) // 2
    k = 8
    while True:
        l = mid - k // 2 - 1
        pair = tridiag_principal(field, l, k)
        lam = pair.value + shift
        if lam >= target or k >= window.size // 2:
            break
        k *= 2
    if lam <= 0:
        raise ConvergenceError("local block eigenvalue not positive after the shift",
                               value=lam, block=k)
    idx = np.arange(l + 1, l + k + 1)
    logpsi = np.log(pair.vector) - p * (idx - idx[0])
    psi = np.exp(logpsi - logpsi.max())
    sub = np.zeros(window.size)
    sub[idx - window.lo] = min(lam, cap) * psi
    return sub, lam, k


def nonlinear_cell_certificate(field: CoefficientField, p: float, window=2048, *,
                               gamma_inf: float | None = None, tol: float = 1e-10,
                               max_iter: int = 20_000) -> NonlinearCertificate:
    """Solve ``L_p u = u^2`` on ``window`` with zero outside.

    The growth rate is raised by ``max(0, 1 - gamma_inf)`` first so the
    spectrum top is positive; ``lower_bound`` is the interior minimum of
    ``u`` with that shift removed, which bounds the eigenvalue from below.
    ``gamma_inf`` defaults to the top eigenvalue of the window block.
    """
    window = Window.coerce(window)
    if window.size < 64:
        raise ValueError("certificate window needs at least 64 sites")
    require_coupled(field, window)
    p = float(p)
    g_inf = block_top(field, window) if gamma_inf is None else float(gamma_inf)
    shift = max(0.0, 1.0 - g_inf)

    dp, d, c = field.sample(window)
    up, down = dp * math.exp(p), d * math.exp(-p)
    ct = up - dp + down - d + c + shift
    sup_ct = float(ct.max())
    if not sup_ct > 0:
        raise ConvergenceError("shifted growth has no positive part", sup=sup_ct)
    M = 2.0 * sup_ct + 1.0 + max(0.0, -float(ct.min()))

    n = window.size
    K = sp.diags([M + up + down, -up[:-1], -down[1:]], [0, 1, -1], format="csc")
    lu = splu(K)

    def step(u):
        return lu.solve((M + ct - u) * u)

    def residual(u):
        right = np.r_[u[1:], 0.0]
        left = np.r_[0.0, u[:-1]]
        return float(np.abs(up * right + down * left + (c + shift - dp - d) * u - u * u).max())

    upper = np.full(n, sup_ct)
    lower, lam, block = _local_subsolution(field, window, p, shift, 0.5 * (g_inf + shift), sup_ct)
    if np.any(lower > upper):
        raise ConvergenceError("subsolution exceeds supersolution")

    slack = 1e-12 * max(1.0, sup_ct)
    it = 0
    while True:
        nu, nl = step(upper), step(lower)
        if (np.any(nu > upper + slack) or np.any(nl < lower - slack)
                or np.any(nl > nu + slack)):
            raise ConvergenceError("monotone iteration lost its sandwich",
                                   iteration=it, gap=float((nl - nu).max()))
        upper, lower = np.minimum(nu, upper), np.maximum(nl, lower)
        it += 1
        res = residual(upper)
        if res < tol and float((upper - lower).max()) < 1e2 * tol:
            break
        if it >= max_iter:
            raise ConvergenceError("certificate iteration did not converge",
                                   iterations=it, residual=res,
                                   gap=float((upper - lower).max()))

    u = upper
    q = n // 4
    interior = Window(window.lo + q, window.hi - q)
    core = u[q:n - q]
    origin = (interior.lo + interior.hi) // 2 - interior.lo
    cert = CertificateFunction(interior, core / core[origin])
    return NonlinearCertificate(
        p=p, window=window, values=u, shift=shift, gamma_inf=g_inf, sup_ctilde=sup_ct,
        residual=res, iterations=it, interior=interior,
        lower_bound=float(core.min()) - shift, block_bound=float(u.min()) - shift,
        certificate=cert, admissible=admissibility_check(cert).passed)
