import math

import numpy as np
import pytest

from kpp_lattice.coefficients import Window, build_field
from kpp_lattice.eigen import (CertificateFunction, admissibility_check, lambda_closed_form,
                               lambda_periodic, periodic_matrix)
from kpp_lattice.errors import ConvergenceError

ROOT17 = (-1 + math.sqrt(17)) / 2


def test_closed_form_values():
    assert lambda_closed_form(1, 1, 1, 0) == 1
    assert lambda_closed_form(1, 1, 1, 1) == pytest.approx(math.e + 1 / math.e - 1, abs=1e-15)
    assert lambda_closed_form(1, 1, 1, 1) == pytest.approx(2.086161, abs=1e-6)


def test_closed_form_minimum_asymmetric():
    p0 = 0.5 * (math.log(1) - math.log(4))
    assert lambda_closed_form(4, 1, 2, p0) == pytest.approx(1.0, abs=1e-14)
    grid = np.linspace(-3, 3, 2001)
    assert min(lambda_closed_form(4, 1, 2, p) for p in grid) >= 1 - 1e-14


def test_closed_form_rejects_nonpositive_rates():
    with pytest.raises(ValueError):
        lambda_closed_form(0, 1, 1, 0)


def test_periodic_single_site_matches_closed_form(homogeneous):
    e = lambda_periodic(homogeneous, 1.0)
    assert e.value == pytest.approx(lambda_closed_form(1, 1, 1, 1), abs=1e-12)
    assert e.method == "periodic-perron" and e.residual < 1e-8


def test_periodic_two_site_against_dense_oracle(periodic2):
    dense = np.linalg.eigvals(np.array([[-1.0, 2.0], [2.0, 0.0]])).real.max()
    e = lambda_periodic(periodic2, 0.0)
    assert dense == pytest.approx(ROOT17, abs=1e-14)
    assert abs(e.value - dense) < 1e-12
    assert e.residual < 1e-8
    assert np.all(e.certificate.values > 0)


@pytest.mark.parametrize("p", [-1.5, -0.3, 0.4, 2.0])
def test_periodic_against_dense_eigvals(p):
    f = build_field({"kind": "periodic", "dprime": [1, 2, 0.5], "d": [1.5, 1, 2],
                     "c": [1, 0.2, 3]})
    m = periodic_matrix(*f.sample((0, 2)), p)
    oracle = np.linalg.eigvals(m).real.max()
    assert lambda_periodic(f, p).value == pytest.approx(oracle, abs=1e-11)


def test_periodic_multiple_period(periodic2):
    assert lambda_periodic(periodic2, 0.3, N=6).value == pytest.approx(
        lambda_periodic(periodic2, 0.3).value, abs=1e-12)


def test_periodic_rejects_bad_period(periodic2, quasi):
    with pytest.raises(ValueError, match="multiple"):
        lambda_periodic(periodic2, 0.0, N=3)
    with pytest.raises(ValueError):
        lambda_periodic(quasi, 0.0)


def test_periodic_nonconvergence_aborts(periodic2):
    with pytest.raises(ConvergenceError):
        lambda_periodic(periodic2, 0.0, max_steps=2)


def test_periodic_envelope(periodic2):
    for p in np.linspace(-2, 2, 9):
        v = lambda_periodic(periodic2, p).value
        h = 2 * math.cosh(p) - 2 + np.array([1.0, 2.0])
        assert h.min() - 1e-12 <= v <= h.max() + 1e-12


def test_admissibility_constant():
    rep = admissibility_check(CertificateFunction(Window(-100, 100), np.ones(201)))
    assert rep.passed
    assert rep.ratio_constant == 0 and rep.log_slope == 0 and rep.log_increment_bound == 0


def test_admissibility_exponential_fails_slope():
    w = Window(-100, 100)
    rep = admissibility_check(CertificateFunction(w, np.exp(0.1 * w.indices)))
    assert not rep.passed and not rep.slope_ok
    assert rep.log_slope == pytest.approx(0.1, abs=1e-12)


def test_admissibility_nonpositive():
    assert not admissibility_check(CertificateFunction(Window(0, 3), np.array([1, 0, 1, 1.0]))).passed
