"""Estimator-style wrappers around the eigenvalue and speed pipelines.

``fit`` takes a coefficient field in place of a design matrix and stores
fitted state in trailing-underscore attributes; ``predict`` evaluates at
new momenta. Hyperparameters are plain constructor arguments, so
``get_params``/``set_params`` and ``clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_field, check_momenta, check_positive, check_schedule
from .coefficients import Nonlinearity, Window
from .dynamics import IntegrationPolicy, LatticeState, empirical_speed, integrate
from .eigen import lyapunov_curve
from .speed import make_evaluator, spreading_speeds


class HamiltonianEstimator(BaseEstimator):
    """Principal eigenvalue ``p -> H(p)`` of a field."""

    def __init__(self, method="auto", eps_schedule=(0.1, 0.05, 0.025), window=1 << 14,
                 lyapunov_range=10_000):
        self.method = method
        self.eps_schedule = eps_schedule
        self.window = window
        self.lyapunov_range = lyapunov_range

    def fit(self, field, y=None):
        check_field(field)
        check_positive(self.window, "window", integer=True, min_val=64)
        check_positive(self.lyapunov_range, "lyapunov_range", integer=True, min_val=1000)
        self.evaluator_ = make_evaluator(field, self.method,
                                         eps_schedule=check_schedule(self.eps_schedule),
                                         window=self.window,
                                         lyapunov_range=self.lyapunov_range)
        self.method_ = self.evaluator_.method
        self.bounds_only_ = self.evaluator_.bounds_only
        return self

    def predict(self, p):
        check_is_fitted(self, "evaluator_")
        return np.array([self.evaluator_(x)[1] for x in check_momenta(p)])

    def predict_bounds(self, p):
        """``(lower, upper)`` columns; equal unless only windowed bounds exist."""
        check_is_fitted(self, "evaluator_")
        return np.array([self.evaluator_(x) for x in check_momenta(p)])


class SpreadingSpeedEstimator(BaseEstimator):
    """Predicted spreading speeds in both directions."""

    def __init__(self, method="auto", eps_schedule=(0.1, 0.05, 0.025), window=1 << 14,
                 lyapunov_range=10_000, bounds_window=4096):
        self.method = method
        self.eps_schedule = eps_schedule
        self.window = window
        self.lyapunov_range = lyapunov_range
        self.bounds_window = bounds_window

    def fit(self, field, y=None):
        check_field(field)
        self.report_ = spreading_speeds(field, self.method, bounds_window=self.bounds_window,
                                        eps_schedule=check_schedule(self.eps_schedule),
                                        window=self.window,
                                        lyapunov_range=self.lyapunov_range)
        self.speed_right_ = self.report_.omega_right_upper
        self.speed_left_ = self.report_.omega_left_upper
        self.p_star_ = self.report_.p_star_right
        return self

    def predict(self, direction="+"):
        check_is_fitted(self, "report_")
        return self.speed_right_ if direction == "+" else self.speed_left_


class FrontSpeedEstimator(BaseEstimator):
    """Empirical front speed of a single-seed simulation."""

    def __init__(self, horizon=200.0, half_width=600, level=0.5, snapshot_every=0.5):
        self.horizon = horizon
        self.half_width = half_width
        self.level = level
        self.snapshot_every = snapshot_every

    def fit(self, field, y=None, nonlinearity=None):
        check_field(field)
        check_positive(self.horizon, "horizon")
        check_positive(self.half_width, "half_width", integer=True)
        win = Window(-self.half_width, self.half_width)
        policy = IntegrationPolicy(snapshot_every=self.snapshot_every,
                                   levels=(float(self.level),), keep_states=False)
        self.trajectory_ = integrate(field, nonlinearity or Nonlinearity(),
                                     LatticeState.single_seed(win), self.horizon, policy)
        self.fit_right_ = empirical_speed(self.trajectory_, self.level, direction="+")
        self.fit_left_ = empirical_speed(self.trajectory_, self.level, direction="-")
        self.speed_right_ = self.fit_right_.speed
        self.speed_left_ = self.fit_left_.speed
        return self

    def predict(self, direction="+"):
        check_is_fitted(self, "trajectory_")
        return self.speed_right_ if direction == "+" else self.speed_left_


class LyapunovEstimator(BaseEstimator):
    """Tabulated ``gamma -> mu`` with its inverse ``p -> gamma``."""

    def __init__(self, range=10_000, count=20, span=2.0):
        self.range = range
        self.count = count
        self.span = span

    def fit(self, field, y=None):
        check_field(field)
        check_positive(self.count, "count", integer=True, min_val=3)
        self.curve_ = lyapunov_curve(field, range=self.range, count=self.count, span=self.span)
        self.gamma_inf_ = self.curve_.gamma_inf
        return self

    def predict(self, gamma):
        """Interpolated ``mu`` at ``gamma``."""
        check_is_fitted(self, "curve_")
        g = check_momenta(gamma)
        return np.interp(g, self.curve_.gammas, self.curve_.mu)

    def inverse(self, p):
        check_is_fitted(self, "curve_")
        return np.array([self.curve_.inverse(x) for x in check_momenta(p)])
