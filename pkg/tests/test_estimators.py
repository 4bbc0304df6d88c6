import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from kpp_lattice.estimators import (FrontSpeedEstimator, HamiltonianEstimator,
                                    LyapunovEstimator, SpreadingSpeedEstimator)


def closed_form(p):
    return 2 * np.cosh(p) - 1


def test_hamiltonian_estimator_matches_closed_form(homogeneous):
    est = HamiltonianEstimator().fit(homogeneous)
    p = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(est.predict(p), closed_form(p), rtol=1e-12)
    bounds = est.predict_bounds(p)
    assert bounds.shape == (9, 2)
    np.testing.assert_array_equal(bounds[:, 0], bounds[:, 1])
    assert est.method_ == "closed" and not est.bounds_only_


def test_hamiltonian_estimator_periodic(periodic2):
    est = HamiltonianEstimator().fit(periodic2)
    # p = 0 reduces to the top eigenvalue of [[c0 - 2, 2], [2, c1 - 2]]
    assert est.predict([0.0])[0] == pytest.approx((math.sqrt(17) - 1) / 2, abs=1e-10)
    assert est.method_ == "periodic"


def test_clone_and_params():
    est = HamiltonianEstimator(method="cell", window=2048)
    params = est.get_params()
    assert params == {"method": "cell", "eps_schedule": (0.1, 0.05, 0.025),
                      "window": 2048, "lyapunov_range": 10_000}
    twin = clone(est)
    assert twin is not est and twin.get_params() == params
    twin.set_params(window=4096)
    assert est.window == 2048


def test_not_fitted():
    with pytest.raises(NotFittedError):
        HamiltonianEstimator().predict([0.0])
    with pytest.raises(NotFittedError):
        SpreadingSpeedEstimator().predict()


@pytest.mark.parametrize("kwargs", [{"window": 10}, {"window": 2.5},
                                    {"eps_schedule": (0.1, 0.2, 0.05)},
                                    {"lyapunov_range": 10}])
def test_bad_hyperparameters(homogeneous, kwargs):
    with pytest.raises((ValueError, TypeError)):
        HamiltonianEstimator(**kwargs).fit(homogeneous)


def test_bad_input():
    with pytest.raises(TypeError):
        HamiltonianEstimator().fit(np.zeros((3, 3)))


def test_predict_rejects_nonfinite(homogeneous):
    est = HamiltonianEstimator().fit(homogeneous)
    with pytest.raises(ValueError):
        est.predict([np.nan])


def test_spreading_speed_estimator(homogeneous):
    est = SpreadingSpeedEstimator().fit(homogeneous)
    assert est.predict("+") == pytest.approx(2.073444684, abs=1e-8)
    assert est.predict("-") == pytest.approx(est.predict("+"), abs=1e-12)
    assert est.p_star_ == pytest.approx(0.9071, abs=1e-3)


def test_front_speed_estimator(homogeneous):
    est = FrontSpeedEstimator(horizon=100.0, half_width=420).fit(homogeneous)
    assert est.predict("+") == pytest.approx(2.0734, rel=0.03)
    assert est.predict("-") == pytest.approx(est.predict("+"), rel=1e-9)


def test_lyapunov_estimator(homogeneous):
    est = LyapunovEstimator(range=1000, count=8).fit(homogeneous)
    g = est.curve_.gammas[3]
    assert est.predict([g])[0] == pytest.approx(est.curve_.mu[3])
    p = est.predict([g])[0]
    assert est.inverse([p])[0] == pytest.approx(g, rel=1e-6)
