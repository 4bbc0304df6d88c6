"""Dirichlet blocks of the symmetric operator and their top of spectrum.

For fields with ``dprime[i] == d[i+1]`` the operator ``A + c`` restricted to
``{l+1, ..., l+k}`` with zero outside is the symmetric tridiagonal matrix
with diagonal ``c_i - d_i - d_{i+1}`` and off-diagonal ``d_{i+1}``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solveh_banded

from .._kernels import largest_eigenvalue
from ..coefficients import CoefficientField, Window
from ..errors import ConvergenceError
from ._types import GammaEstimate, TridiagEigenpair


def require_coupled(field: CoefficientField, window: Window) -> None:
    dp = field.dprime(window.indices)
    d_next = field.d(window.indices + 1)
    if not np.array_equal(dp, d_next):
        bad = int(window.indices[np.argmax(dp != d_next)])
        raise ValueError(f"field violates dprime[i] == d[i+1] at i={bad}")


def block_matrix(field: CoefficientField, l: int, k: int):
    """Diagonal and off-diagonal of the block ``{l+1, ..., l+k}``."""
    block = Window(l + 1, l + k)
    require_coupled(field, block)
    dp, d, c = field.sample(block)
    return c - d - dp, dp[:-1].copy()


def _principal_vector(diag, off, value):
    """Positive eigenvector by inverse iteration just above the eigenvalue.

    ``sigma I - T`` is then a positive definite M-matrix, so every iterate
    stays strictly positive.
    """
    n = diag.size
    if n == 1:
        return np.ones(1)
    sigma = value + 1e-10 * max(1.0, abs(value))
    ab = np.zeros((2, n))
    ab[0, 1:] = -off
    ab[1] = sigma - diag
    x = np.ones(n)
    for _ in range(50):
        y = solveh_banded(ab, x)
        y /= y.max()
        if np.abs(y - x).max() < 1e-13:
            return y
        x = y
    return x


def tridiag_principal(field: CoefficientField, l: int, k: int, *,
                      tol: float = 1e-12, vector: bool = True) -> TridiagEigenpair:
    """Largest eigenvalue of the Dirichlet block ``{l+1, ..., l+k}`` by
    Sturm bisection, with its positive eigenvector scaled to max 1."""
    if k < 1:
        raise ValueError("block size k must be at least 1")
    diag, off = block_matrix(field, int(l), int(k))
    value = float(largest_eigenvalue(diag, off, tol))
    vec = _principal_vector(diag, off, value) if vector else np.empty(0)
    if vector and not np.all(vec > 0):
        raise ConvergenceError("principal vector lost positivity", l=l, k=k)
    return TridiagEigenpair(int(l), int(k), value, vec)


def block_top(field: CoefficientField, window) -> float:
    """Top eigenvalue of the Dirichlet block covering ``window``."""
    w = Window.coerce(window)
    return tridiag_principal(field, w.lo - 1, w.size, vector=False).value


def gamma_infinity(field: CoefficientField, k_schedule=(64, 128, 256, 512)) -> GammaEstimate:
    """Limit of the block eigenvalues over growing windows.

    The one-sided sequence over ``{1..k}`` must increase; the last value is
    the estimate. Windows ``{-k+1..0}`` and ``{-k+1..k}`` at the final ``k``
    are reported for comparison.
    """
    ks = [int(k) for k in k_schedule]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k schedule must be strictly increasing")
    if ks[-1] < 512:
        raise ValueError("largest k must be at least 512")
    seq = [tridiag_principal(field, 0, k, vector=False).value for k in ks]
    for a, b in zip(seq, seq[1:]):
        if b < a - 1e-12:
            raise ConvergenceError("block eigenvalues not monotone in the window",
                                   sequence=seq)
    kmax = ks[-1]
    sym = tridiag_principal(field, -kmax, kmax, vector=False).value
    wide = tridiag_principal(field, -kmax, 2 * kmax, vector=False).value
    return GammaEstimate(value=seq[-1], schedule=tuple(ks), sequence=tuple(seq),
                         symmetric=sym, wide=wide)
