import math

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from kpp_lattice.coefficients import build_field
from kpp_lattice.eigen import block_matrix, gamma_infinity, tridiag_principal
from kpp_lattice.errors import ConvergenceError


def test_single_site_block(random_field):
    for l in (-3, 0, 5):
        dp, d, c = random_field.triple(np.array([l + 1, l + 2]))
        expected = c[0] - d[0] - d[1]
        assert tridiag_principal(random_field, l, 1).value == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("k", range(1, 9))
def test_homogeneous_dirichlet_spectrum(homogeneous, k):
    dense = np.linalg.eigvalsh(-2 * np.eye(k) + np.eye(k, k=1) + np.eye(k, k=-1) + np.eye(k))
    pair = tridiag_principal(homogeneous, 0, k)
    assert pair.value == pytest.approx(dense.max(), abs=1e-11)
    assert pair.value == pytest.approx(1 - 2 + 2 * math.cos(math.pi / (k + 1)), abs=1e-11)
    assert pair.vector.max() == 1.0 and np.all(pair.vector > 0)


def test_random_block_against_lapack(random_field):
    diag, off = block_matrix(random_field, -40, 300)
    oracle = eigh_tridiagonal(diag, off, eigvals_only=True).max()
    pair = tridiag_principal(random_field, -40, 300)
    assert abs(pair.value - oracle) < 1e-11
    t = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    resid = t @ pair.vector - pair.value * pair.vector
    assert np.abs(resid).max() < 1e-9


def test_nesting_monotone(random_field):
    for seed in range(5):
        f = build_field({"kind": "random", "seed": seed, "c_law": "two_state",
                         "c_low": 0.5, "c_high": 1.5})
        assert tridiag_principal(f, 0, 4).value <= tridiag_principal(f, 0, 8).value + 1e-12
        assert tridiag_principal(f, -3, 20).value <= tridiag_principal(f, -10, 40).value + 1e-12


def test_uncoupled_rejected():
    f = build_field({"kind": "periodic", "dprime": [1, 2], "d": [1, 2], "c": [1, 1]})
    with pytest.raises(ValueError, match="dprime"):
        tridiag_principal(f, 0, 4)
    with pytest.raises(ValueError):
        tridiag_principal(build_field({"kind": "homogeneous"}), 0, 0)


def test_gamma_infinity_homogeneous(homogeneous):
    g = gamma_infinity(homogeneous)
    # closed-form spectrum at the largest block
    assert g.value == pytest.approx(2 * math.cos(math.pi / 513) - 1, abs=1e-11)
    assert g.symmetric == g.value
    assert g.wide == pytest.approx(2 * math.cos(math.pi / 1025) - 1, abs=1e-11)
    # distance to the limit 1 is 2(1 - cos(pi/513)), about 3.75e-5
    assert 1 - g.value == pytest.approx(2 * (1 - math.cos(math.pi / 513)), rel=1e-6)
    assert all(b >= a for a, b in zip(g.sequence, g.sequence[1:]))


def test_gamma_infinity_homogeneous_translation(homogeneous):
    assert tridiag_principal(homogeneous, 0, 300).value == pytest.approx(
        tridiag_principal(homogeneous, -300, 300).value, abs=1e-12)


def test_gamma_infinity_two_state_in_range(random_field):
    g = gamma_infinity(random_field, (256, 512, 1024, 2048))
    assert 1.5 - 4 <= g.value <= 1.5
    assert g.value <= g.wide + 1e-12


def test_gamma_infinity_schedule_checks(homogeneous):
    with pytest.raises(ValueError):
        gamma_infinity(homogeneous, (128, 64, 512))
    with pytest.raises(ValueError):
        gamma_infinity(homogeneous, (64, 128))
