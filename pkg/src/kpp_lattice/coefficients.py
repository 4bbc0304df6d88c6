"""Coefficient fields of the lattice system and their KPP nonlinearities.

A field is a triple of sequences indexed by the integers: the forward
diffusion rate ``dprime[i]`` (towards ``i+1``), the backward rate ``d[i]``
(towards ``i-1``) and the linear growth rate ``c[i]``. Fields are lazy: a
value is computed from the generating law whenever an index is asked for,
so shifts and reflections are pure index arithmetic and stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import FieldSpecError

__all__ = [
    "Window",
    "Harmonic",
    "Marginal",
    "HomogeneousLaw",
    "PeriodicLaw",
    "QuasiperiodicLaw",
    "RandomShiftLaw",
    "CoefficientField",
    "Nonlinearity",
    "ValidationReport",
    "build_field",
    "validate_field",
    "reflect_field",
    "shift_field",
    "field_rows",
]


@dataclass(frozen=True)
class Window:
    """Inclusive integer interval ``[lo, hi]``."""

    lo: int
    hi: int

    def __post_init__(self):
        if int(self.lo) != self.lo or int(self.hi) != self.hi:
            raise ValueError("window bounds must be integers")
        if self.hi < self.lo:
            raise ValueError(f"empty window [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", int(self.lo))
        object.__setattr__(self, "hi", int(self.hi))

    @classmethod
    def centered(cls, size: int) -> "Window":
        """Window of ``size`` sites with index 0 at (or just right of) the middle."""
        if size < 1:
            raise ValueError("window size must be positive")
        lo = -(size // 2)
        return cls(lo, lo + size - 1)

    @classmethod
    def coerce(cls, value) -> "Window":
        if isinstance(value, Window):
            return value
        if isinstance(value, (int, np.integer)):
            return cls.centered(int(value))
        lo, hi = value
        return cls(int(lo), int(hi))

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    def __contains__(self, i) -> bool:
        return self.lo <= i <= self.hi


# --------------------------------------------------------------------------
# generating laws


def _as_index(idx) -> np.ndarray:
    return np.asarray(idx, dtype=np.int64)


@dataclass(frozen=True)
class HomogeneousLaw:
    dprime: float = 1.0
    d: float = 1.0
    c: float = 1.0

    def raw(self, k):
        k = _as_index(k)
        full = np.ones(k.shape)
        return self.dprime * full, self.d * full, self.c * full

    @property
    def period(self):
        return 1


@dataclass(frozen=True)
class PeriodicLaw:
    """Tables of one period; site ``k`` reads entry ``k mod N``."""

    dprime: tuple
    d: tuple
    c: tuple

    @property
    def period(self):
        return len(self.c)

    def raw(self, k):
        r = _as_index(k) % self.period
        return (np.asarray(self.dprime)[r], np.asarray(self.d)[r],
                np.asarray(self.c)[r])


@dataclass(frozen=True)
class Harmonic:
    amplitude: float
    frequency: float
    phase: float = 0.0

    def __call__(self, k):
        return self.amplitude * np.cos(2.0 * math.pi * self.frequency * k + self.phase)


@dataclass(frozen=True)
class QuasiperiodicLaw:
    """Mean plus a finite cosine sum for each coefficient."""

    dprime_mean: float = 1.0
    d_mean: float = 1.0
    c_mean: float = 1.0
    dprime_harmonics: tuple = ()
    d_harmonics: tuple = ()
    c_harmonics: tuple = ()

    period = None

    @staticmethod
    def _eval(mean, harmonics, k):
        out = np.full(k.shape, float(mean))
        for h in harmonics:
            out = out + h(k)
        return out

    def raw(self, k):
        k = _as_index(k).astype(float)
        return (self._eval(self.dprime_mean, self.dprime_harmonics, k),
                self._eval(self.d_mean, self.d_harmonics, k),
                self._eval(self.c_mean, self.c_harmonics, k))

    def bounds(self):
        """Exact inf/sup envelopes implied by the amplitudes."""
        def span(mean, hs):
            a = sum(abs(h.amplitude) for h in hs)
            return mean - a, mean + a
        return {
            "dprime": span(self.dprime_mean, self.dprime_harmonics),
            "d": span(self.d_mean, self.d_harmonics),
            "c": span(self.c_mean, self.c_harmonics),
        }


def _splitmix64(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = x + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def counter_uniform(seed: int, stream: int, k) -> np.ndarray:
    """Uniform deviates in [0, 1) addressed by (seed, stream, index).

    Counter-based: the value at index ``k`` does not depend on which other
    indices are requested, which is what makes shifted realizations exact.
    """
    k = _as_index(k)
    key = _splitmix64(np.array([((int(seed) << 8) ^ int(stream)) & 0xFFFFFFFFFFFFFFFF],
                               dtype=np.uint64))
    z = _splitmix64(_splitmix64(k.astype(np.uint64) ^ key))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class Marginal:
    """One-site law: ``constant(low)``, ``uniform(low, high)`` or
    ``two_state`` (``high`` with probability ``p``, else ``low``)."""

    kind: str = "constant"
    low: float = 1.0
    high: float = 1.0
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in ("constant", "uniform", "two_state"):
            raise FieldSpecError(f"unknown marginal law {self.kind!r}")
        if self.kind != "constant" and self.high < self.low:
            raise FieldSpecError("marginal law needs low <= high")
        if not 0.0 <= self.p <= 1.0:
            raise FieldSpecError("two-state probability must lie in [0, 1]")

    @property
    def support(self):
        if self.kind == "constant":
            return self.low, self.low
        return self.low, self.high

    def transform(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full(u.shape, float(self.low))
        if self.kind == "uniform":
            return self.low + (self.high - self.low) * u
        return np.where(u < self.p, float(self.high), float(self.low))


@dataclass(frozen=True)
class RandomShiftLaw:
    """Stationary iid realization, one deviate stream per coefficient.

    With ``coupled`` the forward rate is the next site's backward rate,
    ``dprime[k] = d[k+1]``, which makes the operator symmetric.
    """

    seed: int
    c: Marginal
    d: Marginal = Marginal()
    dprime: Marginal | None = None
    coupled: bool = True

    period = None

    def raw(self, k):
        k = _as_index(k)
        d = self.d.transform(counter_uniform(self.seed, 1, k))
        c = self.c.transform(counter_uniform(self.seed, 2, k))
        if self.coupled:
            dp = self.d.transform(counter_uniform(self.seed, 1, k + 1))
        else:
            law = self.dprime if self.dprime is not None else self.d
            dp = law.transform(counter_uniform(self.seed, 3, k))
        return dp, d, c


_LAW_TYPES = (HomogeneousLaw, PeriodicLaw, QuasiperiodicLaw, RandomShiftLaw)


# --------------------------------------------------------------------------
# the field


@dataclass(frozen=True)
class CoefficientField:
    """A generating law viewed through the index map ``i -> sign*i + offset``.

    ``sign = -1`` is a reflection, under which the forward and backward
    rates trade places. ``c_shift`` adds a constant to every ``c[i]``.
    """

    law: object
    sign: int = 1
    offset: int = 0
    c_shift: float = 0.0

    def __post_init__(self):
        if not isinstance(self.law, _LAW_TYPES):
            raise FieldSpecError(f"unsupported law {type(self.law).__name__}")
        if self.sign not in (1, -1):
            raise FieldSpecError("sign must be +1 or -1")

    # values ---------------------------------------------------------------
    def triple(self, idx):
        """``(dprime, d, c)`` arrays at the integer indices ``idx``."""
        k = self.sign * _as_index(idx) + self.offset
        dp, d, c = self.law.raw(k)
        if self.sign < 0:
            dp, d = d, dp
        if self.c_shift:
            c = c + self.c_shift
        return np.asarray(dp, float), np.asarray(d, float), np.asarray(c, float)

    def dprime(self, idx):
        return self.triple(idx)[0]

    def d(self, idx):
        return self.triple(idx)[1]

    def c(self, idx):
        return self.triple(idx)[2]

    def sample(self, window) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.triple(Window.coerce(window).indices)

    # structure ------------------------------------------------------------
    @property
    def kind(self) -> str:
        return {
            HomogeneousLaw: "homogeneous",
            PeriodicLaw: "periodic",
            QuasiperiodicLaw: "quasiperiodic",
            RandomShiftLaw: "random",
        }[type(self.law)]

    @property
    def period(self) -> int | None:
        return self.law.period

    @property
    def coupled(self) -> bool:
        """Whether ``dprime[i] == d[i+1]`` holds by construction."""
        law = self.law
        if isinstance(law, HomogeneousLaw):
            return law.dprime == law.d
        if isinstance(law, PeriodicLaw):
            return tuple(law.dprime) == tuple(np.roll(law.d, -1))
        if isinstance(law, QuasiperiodicLaw):
            return (law.dprime_mean == law.d_mean and not law.dprime_harmonics
                    and not law.d_harmonics)
        return law.coupled

    @property
    def media_class(self) -> str:
        """Class for which equal upper and lower speeds are guaranteed.

        ``arbitrary`` marks random fields outside the symmetric class, where
        only windowed bounds are reported.
        """
        if self.kind == "random" and not self.coupled:
            return "arbitrary"
        return {"homogeneous": "homogeneous", "periodic": "periodic",
                "quasiperiodic": "almost_periodic", "random": "random"}[self.kind]

    def with_c_shift(self, m: float) -> "CoefficientField":
        return replace(self, c_shift=self.c_shift + float(m))

    def bounds(self, window) -> dict:
        """Sup/inf of each coefficient on ``window`` plus the speed constants.

        ``D`` is the largest and ``D_low`` the smallest diffusion rate of
        either direction; ``C`` is ``sup |c|``.
        """
        dp, d, c = self.sample(window)
        return {
            "D": float(max(dp.max(), d.max())),
            "D_low": float(min(dp.min(), d.min())),
            "C": float(np.abs(c).max()),
            "c_inf": float(c.min()),
            "c_sup": float(c.max()),
        }


def reflect_field(field: CoefficientField) -> CoefficientField:
    """Field seen from the mirror: forward rate ``d[-i]``, backward
    ``dprime[-i]``, growth ``c[-i]``."""
    return replace(field, sign=-field.sign)


def shift_field(field: CoefficientField, j: int) -> CoefficientField:
    """Field whose values at ``i`` are those of ``field`` at ``i + j``."""
    return replace(field, offset=field.offset + field.sign * int(j))


# --------------------------------------------------------------------------
# construction from a specification


def _scalar(spec, key, default):
    value = spec.get(key, default)
    if isinstance(value, (list, tuple)):
        if len(value) != 1:
            raise FieldSpecError(f"{key} must be a single number", )
        value = value[0]
    try:
        return float(value)
    except (TypeError, ValueError):
        raise FieldSpecError(f"{key} must be numeric, got {value!r}") from None


def _table(spec, key, default):
    value = spec.get(key, default)
    if np.isscalar(value):
        value = [value]
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise FieldSpecError(f"{key} must be a list of numbers") from None


def _positive(name, values):
    for v in np.atleast_1d(values):
        if not (v > 0 and math.isfinite(v)):
            raise FieldSpecError(f"diffusion coefficient {name} must be positive and "
                                 f"finite, got {v}")


def _harmonics(spec, prefix):
    amps = _table(spec, f"{prefix}_amp", ())
    freqs = _table(spec, f"{prefix}_freq", ())
    phases = _table(spec, f"{prefix}_phase", (0.0,) * len(amps))
    if not (len(amps) == len(freqs) == len(phases)):
        raise FieldSpecError(f"{prefix}_amp, {prefix}_freq and {prefix}_phase "
                             "must have equal lengths")
    return tuple(Harmonic(a, f, ph) for a, f, ph in zip(amps, freqs, phases))


def _marginal(spec, prefix, default_value):
    kind = spec.get(f"{prefix}_law", "constant")
    if kind == "constant":
        v = _scalar(spec, prefix, default_value)
        return Marginal("constant", v, v)
    low = _scalar(spec, f"{prefix}_low", None)
    high = _scalar(spec, f"{prefix}_high", None)
    p = _scalar(spec, f"{prefix}_p", 0.5)
    return Marginal(kind, low, high, p)


def build_field(spec: Mapping) -> CoefficientField:
    """Instantiate a field from a plain mapping.

    Recognised kinds and keys::

        homogeneous    dprime, d, c
        periodic       dprime, d, c (lists; scalars broadcast to the period)
        quasiperiodic  dprime, d, c (means) and {x}_amp, {x}_freq, {x}_phase
        random         seed, coupled, {x}_law in constant|uniform|two_state,
                       {x}_low, {x}_high, {x}_p (or {x} for constant)

    For random fields with ``coupled`` true (the default) no forward-rate
    law is read: the forward rate is the neighbour's backward rate.
    """
    kind = spec.get("kind", "homogeneous")
    if kind == "homogeneous":
        dp, d, c = (_scalar(spec, k, 1.0) for k in ("dprime", "d", "c"))
        _positive("dprime", dp)
        _positive("d", d)
        return CoefficientField(HomogeneousLaw(dp, d, c))

    if kind == "periodic":
        tables = {k: _table(spec, k, (1.0,)) for k in ("dprime", "d", "c")}
        n = int(spec.get("period", max(len(t) for t in tables.values())))
        if n < 1:
            raise FieldSpecError("period must be at least 1")
        for k, t in tables.items():
            if len(t) == 1:
                tables[k] = t * n
            elif len(t) != n:
                raise FieldSpecError(f"table {k} has length {len(t)}, period is {n}")
        _positive("dprime", tables["dprime"])
        _positive("d", tables["d"])
        return CoefficientField(PeriodicLaw(**tables))

    if kind == "quasiperiodic":
        law = QuasiperiodicLaw(
            dprime_mean=_scalar(spec, "dprime", 1.0),
            d_mean=_scalar(spec, "d", 1.0),
            c_mean=_scalar(spec, "c", 1.0),
            dprime_harmonics=_harmonics(spec, "dprime"),
            d_harmonics=_harmonics(spec, "d"),
            c_harmonics=_harmonics(spec, "c"),
        )
        b = law.bounds()
        _positive("dprime (lower envelope)", b["dprime"][0])
        _positive("d (lower envelope)", b["d"][0])
        return CoefficientField(law)

    if kind == "random":
        if "seed" not in spec:
            raise FieldSpecError("random field needs a seed")
        seed = int(spec["seed"])
        if seed < 0:
            raise FieldSpecError("seed must be non-negative")
        coupled = spec.get("coupled", True)
        if isinstance(coupled, str):
            coupled = coupled.lower() in ("1", "true", "yes")
        d = _marginal(spec, "d", 1.0)
        c = _marginal(spec, "c", 1.0)
        dprime = None if coupled else _marginal(spec, "dprime", 1.0)
        _positive("d (law support)", d.support)
        if dprime is not None:
            _positive("dprime (law support)", dprime.support)
        return CoefficientField(RandomShiftLaw(seed, c, d, dprime, bool(coupled)))

    raise FieldSpecError(f"unknown field kind {kind!r}")


# --------------------------------------------------------------------------
# nonlinearity and validation


@dataclass(frozen=True)
class Nonlinearity:
    """Reaction term ``f(i, s) = c_i * g(s)`` with a KPP shape ``g``.

    The default shape ``g(s) = s(1-s)`` is the logistic law; a custom
    vectorised ``shape`` must satisfy ``g(0) = g(1) = 0``, ``0 < g(s) <= s``
    and ``g'(0) = 1`` so that ``c`` remains the linearization at zero.
    """

    kind: str = "logistic"
    shape: Callable | None = dc_field(default=None, compare=False)
    holder_exponent: float = 1.0

    def __post_init__(self):
        if self.kind not in ("logistic", "custom"):
            raise FieldSpecError(f"unknown nonlinearity {self.kind!r}")
        if self.kind == "custom" and self.shape is None:
            raise FieldSpecError("custom nonlinearity needs a shape function")
        if not 0.0 < self.holder_exponent <= 1.0:
            raise FieldSpecError("Hoelder exponent must lie in (0, 1]")

    @classmethod
    def custom(cls, shape: Callable, holder_exponent: float = 1.0) -> "Nonlinearity":
        return cls("custom", shape, holder_exponent)

    def g(self, s):
        if self.kind == "logistic":
            return s * (1.0 - s)
        return self.shape(s)

    def __call__(self, c, s):
        return c * self.g(s)


@dataclass(frozen=True)
class ValidationReport:
    window: Window
    dprime_range: tuple
    d_range: tuple
    c_range: tuple
    margin: float
    margin_tails: float
    worst_index: int
    checks: Mapping

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def validate_field(field: CoefficientField, nl: Nonlinearity | None = None,
                   window=4096) -> ValidationReport:
    """Check the standing hypotheses on a finite window.

    The lim-inf condition ``c_i - (sqrt(dprime_i) - sqrt(d_i))^2 > 0`` is
    judged on the two outer quarters of the window.
    """
    nl = nl or Nonlinearity()
    window = Window.coerce(window)
    idx = window.indices
    dp, d, c = field.triple(idx)
    margin_site = c - (np.sqrt(dp) - np.sqrt(d)) ** 2

    q = max(1, window.size // 4)
    tails = np.r_[margin_site[:q], margin_site[-q:]]
    tail_idx = np.r_[idx[:q], idx[-q:]]
    worst = int(tail_idx[np.argmin(tails)])

    s = np.linspace(0.0, 1.0, 41)[1:-1]
    with np.errstate(all="ignore"):
        fvals = nl(c[:, None], s[None, :])
        ends = np.abs(nl(c, np.zeros_like(c))).max() + np.abs(nl(c, np.ones_like(c))).max()
    cs = c[:, None] * s[None, :]
    checks = {
        "diffusion_positive": bool(dp.min() > 0 and d.min() > 0),
        "coefficients_finite": bool(np.all(np.isfinite(np.r_[dp, d, c]))),
        "reaction_vanishes_at_0_and_1": bool(ends == 0.0),
        "reaction_below_linearization": bool(np.all(fvals > 0)
                                             and np.all(fvals <= cs * (1 + 1e-12))),
        "reaction_uniformly_positive": bool(fvals.min(axis=0).min() > 0),
        "margin_positive": bool(tails.min() > 0),
    }
    return ValidationReport(
        window=window,
        dprime_range=(float(dp.min()), float(dp.max())),
        d_range=(float(d.min()), float(d.max())),
        c_range=(float(c.min()), float(c.max())),
        margin=float(margin_site.min()),
        margin_tails=float(tails.min()),
        worst_index=worst,
        checks=checks,
    )


def field_rows(field: CoefficientField, window) -> list[tuple]:
    """Rows ``(i, dprime, d, c)`` for dumping to CSV."""
    idx = Window.coerce(window).indices
    dp, d, c = field.triple(idx)
    return [(int(i), float(a), float(b), float(x)) for i, a, b, x in zip(idx, dp, d, c)]
