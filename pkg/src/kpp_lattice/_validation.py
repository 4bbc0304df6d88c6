"""Argument checks shared by the estimator wrappers."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_scalar

from .coefficients import CoefficientField


def check_field(field) -> CoefficientField:
    if not isinstance(field, CoefficientField):
        raise TypeError(f"expected a CoefficientField, got {type(field).__name__}")
    return field


def check_momenta(p) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ValueError("momenta must be a finite 1-D array")
    return arr


def check_positive(value, name: str, *, integer: bool = False, min_val=None):
    kind = numbers.Integral if integer else numbers.Real
    lo = min_val if min_val is not None else (1 if integer else 0.0)
    return check_scalar(value, name, kind, min_val=lo,
                        include_boundaries="left" if integer or min_val is not None else "neither")


def check_schedule(eps) -> tuple:
    eps = tuple(float(e) for e in eps)
    if len(eps) < 3 or any(b >= a for a, b in zip(eps, eps[1:])) or eps[-1] <= 0:
        raise ValueError("eps schedule needs three or more strictly decreasing positive entries")
    return eps
