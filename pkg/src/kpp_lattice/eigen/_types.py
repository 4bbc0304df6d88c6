from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..coefficients import Window


@dataclass(frozen=True)
class AdmissibilityReport:
    positive: bool
    ratio_ok: bool
    slope_ok: bool
    ratio_constant: float
    log_increment_bound: float
    log_slope: float

    @property
    def passed(self) -> bool:
        return self.positive and self.ratio_ok and self.slope_ok


@dataclass(frozen=True)
class CertificateFunction:
    """Positive test function sampled on a window.

    ``log_increment_bound`` is ``max |ln phi[i+1] - ln phi[i]|``;
    ``log_slope`` is the worse of the two window ends of
    ``|ln phi[end] - ln phi[ref]| / |end - ref|``, with ``ref`` the site 0
    when it lies strictly inside the window and the midpoint otherwise.
    """

    window: Window
    values: np.ndarray

    @property
    def log_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.values)

    @property
    def log_increment_bound(self) -> float:
        if self.values.size < 2:
            return 0.0
        return float(np.abs(np.diff(self.log_values)).max())

    @property
    def ratio_constant(self) -> float:
        v = self.values
        if v.size < 2:
            return 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            up = np.abs(v[1:] / v[:-1] - 1.0)
            down = np.abs(v[:-1] / v[1:] - 1.0)
        return float(max(up.max(), down.max()))

    @property
    def log_slope(self) -> float:
        w = self.window
        if w.size < 2:
            return 0.0
        ref = 0 if w.lo < 0 < w.hi else (w.lo + w.hi) // 2
        lv = self.log_values
        r = lv[ref - w.lo]
        slopes = [abs(lv[end - w.lo] - r) / abs(end - ref)
                  for end in (w.lo, w.hi) if end != ref]
        return float(max(slopes))


@dataclass(frozen=True)
class EigenEstimate:
    """A value of the principal eigenvalue at momentum ``p``.

    ``residual`` is ``max |L_p phi - lambda phi| / phi`` over the window for
    the stored certificate ``phi``.
    """

    p: float
    value: float
    method: str
    residual: float
    window: Window | None = None
    eps: float | None = None
    certificate: CertificateFunction | None = None
    meta: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class CellSolution:
    p: float
    eps: float
    window: Window
    values: np.ndarray
    origin: int
    residual: float
    iterations: int
    seam_ratio: float

    @property
    def lambda_estimate(self) -> float:
        return self.eps * float(self.values[self.origin - self.window.lo])

    @property
    def oscillation(self) -> float:
        return self.eps * float(self.values.max() - self.values.min())

    @property
    def seam_warning(self) -> bool:
        return self.seam_ratio > 10.0


@dataclass(frozen=True)
class TridiagEigenpair:
    """Principal Dirichlet eigenpair of the block ``{l+1, ..., l+k}``."""

    l: int
    k: int
    value: float
    vector: np.ndarray


@dataclass(frozen=True)
class GammaEstimate:
    value: float
    schedule: tuple
    sequence: tuple
    symmetric: float
    wide: float

    @property
    def gap(self) -> float:
        return abs(self.sequence[-1] - self.symmetric)


@dataclass(frozen=True)
class DecaySolution:
    """Positive solution of ``(A + c - gamma) u = 0`` with ``u_0 = 1`` that
    vanishes at ``+infinity``.

    ``log_ratios[i - lo]`` holds ``ln(u_i / u_{i-1})``; ``log_values`` is its
    cumulative sum anchored at ``u_0 = 1``.
    """

    gamma: float
    window: Window
    log_ratios: np.ndarray
    gamma_floor: float
    lemma_rate: float
    decay_constant: float
    decay_rate: float
    extension: int
    converged: bool

    @property
    def log_values(self) -> np.ndarray:
        lr = self.log_ratios
        lo = self.window.lo
        out = np.empty_like(lr)
        zero = -lo
        out[zero] = 0.0
        if zero + 1 < lr.size:
            out[zero + 1:] = np.cumsum(lr[zero + 1:])
        if zero > 0:
            out[:zero] = -np.cumsum(lr[1:zero + 1][::-1])[::-1]
        return out

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    def u(self, i: int) -> float:
        return float(np.exp(self.log_values[i - self.window.lo]))


@dataclass(frozen=True)
class LyapunovPoint:
    gamma: float
    mu: float
    nu: float
    slope_check: float
    converged: bool = True


@dataclass(frozen=True)
class LyapunovCurve:
    gammas: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    slope_check: np.ndarray
    gamma_inf: float
    p_right: float
    p_left: float

    def inverse(self, p: float) -> float:
        """Interpolated ``k(p)`` with ``mu(k(p)) = p`` inside the tabulated range."""
        if not self.mu[0] <= p <= self.mu[-1]:
            raise ValueError(f"p={p} outside the tabulated range "
                             f"[{self.mu[0]}, {self.mu[-1]}]")
        return float(np.interp(p, self.mu, self.gammas))


@dataclass(frozen=True)
class NonlinearCertificate:
    """Solution ``u`` of ``L_p u = u^2`` for the shifted growth ``c + shift``."""

    p: float
    window: Window
    values: np.ndarray
    shift: float
    gamma_inf: float
    sup_ctilde: float
    residual: float
    iterations: int
    interior: Window
    lower_bound: float
    block_bound: float
    certificate: CertificateFunction
    admissible: bool
