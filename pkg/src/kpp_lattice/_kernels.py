"""Compiled scalar recurrences.

These loops are inherently sequential in the lattice index, so they are
JIT-compiled instead of vectorised.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def sturm_count(diag, off, x):
    """Number of eigenvalues of the symmetric tridiagonal matrix below ``x``."""
    n = diag.shape[0]
    pivmin = 1e-300
    count = 0
    q = diag[0] - x
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0.0:
        count += 1
    for i in range(1, n):
        q = diag[i] - x - off[i - 1] * off[i - 1] / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0.0:
            count += 1
    return count


@njit(cache=True)
def largest_eigenvalue(diag, off, tol):
    """Largest eigenvalue by Sturm-count bisection on a Gershgorin bracket."""
    n = diag.shape[0]
    lo = np.inf
    hi = -np.inf
    for i in range(n):
        r = 0.0
        if i > 0:
            r += abs(off[i - 1])
        if i < n - 1:
            r += abs(off[i])
        lo = min(lo, diag[i] - r)
        hi = max(hi, diag[i] + r)
    lo -= 1.0
    hi += 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sturm_count(diag, off, mid) == n:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def decay_ratios(gap, d, out):
    """Ratios rho_i = u_i / u_{i-1} of the solution vanishing past the end.

    ``gap[m]`` is gamma - Gamma at site m and ``d[m]`` the backward
    coefficient there, with ``d`` one entry longer than ``gap``. The
    recursion runs from the right end (where u is set to zero) to the left.
    Returns the position of the first non-positive pivot, or -1.
    """
    n = gap.shape[0]
    nxt = 0.0
    for m in range(n - 1, -1, -1):
        piv = gap[m] - d[m + 1] * nxt
        if not piv > 0.0:
            return m
        nxt = d[m] / piv
        out[m] = nxt
    return -1
