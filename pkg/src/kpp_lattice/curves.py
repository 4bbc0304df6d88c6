"""Sampled Hamiltonians and their convex conjugates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


def _window_label(w) -> str:
    return "" if w is None else f"{w.lo}:{w.hi}"


@dataclass(frozen=True)
class HamiltonianCurve:
    """Values of the upper and lower Hamiltonians on a momentum grid.

    ``upper`` and ``lower`` coincide for every media class whose limits are
    proven equal; ``bounds_only`` marks curves where they are windowed
    surrogates rather than values.
    """

    p: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    methods: tuple
    residuals: np.ndarray
    windows: tuple
    eps: tuple
    media_class: str
    bounds_only: bool = False
    meta: Mapping = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.upper

    def rows(self) -> list[tuple]:
        """CSV rows ``(p, lambda, method, residual, window, eps)``."""
        out = []
        for k, p in enumerate(self.p):
            eps = "" if self.eps[k] is None else float(self.eps[k])
            win = _window_label(self.windows[k])
            res = float(self.residuals[k])
            if self.bounds_only:
                out.append((float(p), float(self.lower[k]), "windowed-lower", res, win, eps))
                out.append((float(p), float(self.upper[k]), "windowed-upper", res, win, eps))
            else:
                out.append((float(p), float(self.upper[k]), self.methods[k], res, win, eps))
        return out


@dataclass(frozen=True)
class ConjugateCurve:
    """Samples of ``H*(q) = sup_p (p q - H(p))`` with the maximizing momenta."""

    q: np.ndarray
    values: np.ndarray
    argmax: np.ndarray

    def __call__(self, q):
        q = np.asarray(q, float)
        if np.any(q < self.q[0] - 1e-12) or np.any(q > self.q[-1] + 1e-12):
            raise ValueError("q outside the sampled conjugate range "
                             f"[{self.q[0]}, {self.q[-1]}]")
        return np.interp(q, self.q, self.values)
