import math
import warnings

import numpy as np
import pytest

from kpp_lattice.coefficients import Window, build_field
from kpp_lattice.dynamics import (IntegrationPolicy, LatticeState, Trajectory, empirical_speed,
                                  front_position, harnack_check, harnack_theta,
                                  homogenization_diag, integrate)
from kpp_lattice.errors import IntegrationError

pytestmark = pytest.mark.filterwarnings("ignore:initial support:RuntimeWarning")


def run(field, horizon, half=150, initial=None, **kw):
    init = initial or LatticeState.single_seed((-half, half))
    return integrate(field, None, init, horizon, IntegrationPolicy(**kw))


@pytest.mark.parametrize("value", [0.0, 1.0])
def test_equilibria_preserved(homogeneous, random_field, value):
    for f in (homogeneous, random_field):
        traj = run(f, 5.0, initial=LatticeState.constant((-40, 40), value))
        assert np.all(traj.values == value)


def test_single_site_lower_bound(homogeneous):
    traj = run(homogeneous, 2.0, half=40, snapshot_every=0.1)
    u0 = traj.values[:, 40]
    assert np.all(u0 >= np.exp(-2 * traj.times) - 1e-12)


def test_positivity(random_field):
    traj = run(random_field, 5.0, half=30)
    assert np.all(traj.values[1:] > 0)


def test_comparison_principle(random_field):
    w = Window(-100, 100)
    lo = LatticeState(0.0, w.lo, np.where(np.abs(w.indices) <= 2, 0.4, 0.0))
    hi = LatticeState(0.0, w.lo, np.where(np.abs(w.indices) <= 5, 0.7, 0.0))
    a, b = run(random_field, 10.0, initial=lo), run(random_field, 10.0, initial=hi)
    assert np.all(a.values <= b.values + 1e-10)


def test_monotone_in_growth(random_field):
    a = run(random_field, 10.0, half=80)
    b = run(random_field.with_c_shift(0.2), 10.0, half=80)
    assert np.all(b.values >= a.values - 1e-12)


def test_snapshot_times_exact(homogeneous):
    traj = run(homogeneous, 3.0, half=30, snapshot_every=0.25)
    np.testing.assert_array_equal(traj.times, np.arange(13) * 0.25)
    assert np.all(np.diff(traj.times) > 0)


def test_horizon_validation(homogeneous):
    with pytest.raises(ValueError):
        run(homogeneous, 0.0)
    with pytest.raises(ValueError):
        run(homogeneous, 1.3)
    with pytest.raises(ValueError):
        integrate(homogeneous, None, LatticeState.constant((-5, 5), 1.5), 1.0)


def test_sentinel_aborts_small_window(homogeneous):
    with pytest.raises(IntegrationError, match="edge"):
        run(homogeneous, 20.0, half=15)


def test_buffer_warning(homogeneous):
    with pytest.warns(RuntimeWarning, match="buffer"):
        run(homogeneous, 1.0, initial=LatticeState.constant((-3, 3), 0.5))


def state(values, lo=0):
    return LatticeState(0.0, lo, np.asarray(values, float))


def test_front_step_profile():
    u = np.where(np.arange(0, 21) <= 10, 1.0, 0.0)
    assert front_position(state(u), 0.5) == 10.5


def test_front_linear_interpolation():
    u = np.zeros(21)
    u[:11] = 1.0
    u[10], u[11] = 0.8, 0.2
    assert front_position(state(u), 0.5) == pytest.approx(10.5, abs=1e-14)


def test_front_saturated_and_absent():
    assert front_position(state(np.full(11, 0.6), lo=-5), 0.5) == 5.0
    assert front_position(state(np.full(11, 0.6), lo=-5), 0.5, "-") == -5.0
    assert math.isnan(front_position(state(np.full(5, 0.1)), 0.5))
    with pytest.raises(ValueError):
        front_position(state([0.5]), 1.0)


def test_front_left_direction():
    u = np.zeros(21)
    u[10:] = 1.0
    assert front_position(state(u), 0.5, "-") == 9.5


def synthetic(speed):
    t = np.arange(0, 20.5, 0.5)
    pos = 3.0 + speed * t
    fronts = {(0.5, "+"): pos, (0.5, "-"): -pos}
    final = LatticeState(t[-1], 0, np.zeros(1))
    return Trajectory(t, 0, np.empty((0, 1)), fronts, final)


def test_speed_exact_track():
    fit = empirical_speed(synthetic(2.0), 0.5)
    assert fit.speed == pytest.approx(2.0, abs=1e-12)
    assert empirical_speed(synthetic(2.0), 0.5, direction="-").speed == pytest.approx(2.0, abs=1e-12)
    assert empirical_speed(synthetic(0.0), 0.5).speed == 0.0


def test_speed_needs_points():
    with pytest.raises(ValueError, match="need 10"):
        empirical_speed(synthetic(1.0), 0.5, fit_window=(0, 2))


def test_homogeneous_speed_close_to_prediction(homogeneous):
    traj = run(homogeneous, 200.0, half=600)
    fit = empirical_speed(traj, 0.5, (100, 200))
    assert fit.speed == pytest.approx(2.0734, rel=0.02)
    assert np.isfinite(fit.stderr)


def test_harnack_theta_values():
    assert harnack_theta(1, 1, 1) == pytest.approx(math.e ** 2, rel=1e-15)
    assert harnack_theta(1, 1, 0.5) == pytest.approx(2 * math.e, rel=1e-15)
    assert harnack_theta(1, 1, 1) == pytest.approx(7.389056, abs=1e-6)


def test_harnack_homogeneous_run(homogeneous):
    traj = run(homogeneous, 30.0, half=120)
    for T in (0.5, 1.0):
        rep = harnack_check(traj, T, 1000, seed=3)
        assert rep.samples == 1000 and rep.violations == 0 and rep.passed


def test_harnack_constant_state(homogeneous):
    traj = run(homogeneous, 2.0, initial=LatticeState.constant((-10, 10), 1.0))
    rep = harnack_check(traj, 1.0, 100)
    assert rep.max_ratio == 1.0


def test_harnack_missing_lag(homogeneous):
    traj = run(homogeneous, 2.0, half=30)
    with pytest.raises(ValueError, match="lag"):
        harnack_check(traj, 0.3)


def test_homogenization_interior_small_slack(homogeneous):
    from kpp_lattice.speed import convex_conjugate, hamiltonian_curve

    hs = convex_conjugate(hamiltonian_curve(homogeneous, np.linspace(-4, 4, 401)),
                          np.linspace(-3, 3, 301))
    traj = run(homogeneous, 20.0, half=200)
    tab = homogenization_diag(traj, 0.05, hs, times=(0.5, 1.0), speeds=np.linspace(-1, 1, 11))
    assert all(r[3] == 0.0 for r in tab.rows)
    assert tab.min_slack > -0.05
    with pytest.raises(ValueError):
        homogenization_diag(traj, 0.05, hs, times=(0.33,))
