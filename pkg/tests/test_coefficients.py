import math

import numpy as np
import pytest

from kpp_lattice.coefficients import (Nonlinearity, Window, build_field, counter_uniform,
                                      field_rows, reflect_field, shift_field, validate_field)
from kpp_lattice.errors import FieldSpecError

from conftest import two_state


def test_homogeneous_samples_constant(homogeneous):
    dp, d, c = homogeneous.sample((-5, 5))
    assert np.all(dp == 1) and np.all(d == 1) and np.all(c == 1)


def test_periodic_extension(periodic2):
    c = periodic2.c(np.array([0, 1, 2, -1, -2]))
    assert list(c) == [1, 2, 1, 2, 1]


def test_quasiperiodic_cosine_law(quasi):
    i = np.arange(-500, 501)
    expected = 1 + 0.3 * np.cos(2 * np.pi * i / math.sqrt(2))
    np.testing.assert_allclose(quasi.c(i), expected, rtol=0, atol=1e-12)
    assert quasi.c(i).min() >= 0.7 and quasi.c(i).max() <= 1.3


@pytest.mark.parametrize("spec, word", [
    ({"kind": "homogeneous", "d": 0}, "d"),
    ({"kind": "homogeneous", "dprime": -1}, "dprime"),
    ({"kind": "periodic", "c": [1, 2], "period": 0}, "period"),
    ({"kind": "periodic", "c": [1, 2], "d": [1, 0]}, "d"),
    ({"kind": "random"}, "seed"),
    ({"kind": "bogus"}, "kind"),
])
def test_build_field_rejections(spec, word):
    with pytest.raises(FieldSpecError, match=word):
        build_field(spec)


def test_random_field_reproducible_and_index_addressable():
    a, b = two_state(7), two_state(7)
    idx = np.arange(-300, 300)
    assert np.array_equal(a.c(idx), b.c(idx))
    # values do not depend on which other indices are requested alongside
    assert np.array_equal(a.c(idx)[::7], a.c(idx[::7]))
    assert set(np.unique(a.c(idx))) == {0.5, 1.5}
    assert not np.array_equal(a.c(idx), two_state(8).c(idx))


def test_counter_uniform_in_unit_interval():
    u = counter_uniform(3, 2, np.arange(-10_000, 10_000))
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.01


def test_coupled_random_constraint_bit_exact():
    f = build_field({"kind": "random", "seed": 4, "d_law": "uniform", "d_low": 0.5,
                     "d_high": 2.0, "c_law": "uniform", "c_low": 0.5, "c_high": 1.5})
    idx = np.arange(-1000, 1000)
    assert np.array_equal(f.dprime(idx), f.d(idx + 1))
    r = reflect_field(f)
    assert np.array_equal(r.dprime(idx), r.d(idx + 1))
    assert f.coupled and f.media_class == "random"


def test_uncoupled_random_is_arbitrary_class():
    f = build_field({"kind": "random", "seed": 1, "coupled": False, "dprime_law": "uniform",
                     "dprime_low": 0.5, "dprime_high": 1.5})
    assert f.media_class == "arbitrary"


def test_validate_homogeneous_passes(homogeneous):
    rep = validate_field(homogeneous, Nonlinearity(), Window(-100, 100))
    assert rep.passed and rep.margin == 1.0


def test_validate_asymmetric_diffusion_fails():
    rep = validate_field(build_field({"kind": "homogeneous", "dprime": 4, "d": 1, "c": 0.5}))
    assert not rep.passed
    assert rep.margin == pytest.approx(-0.5, abs=1e-15)


def test_validate_quasiperiodic_margin(quasi):
    rep = validate_field(quasi, window=4096)
    assert rep.passed
    assert rep.margin == pytest.approx(0.7, abs=1e-4)


def test_reflect_homogeneous_is_identity(homogeneous):
    r = reflect_field(homogeneous)
    for a, b in zip(r.sample((-20, 20)), homogeneous.sample((-20, 20))):
        assert np.array_equal(a, b)


def test_reflect_swaps_rates_and_mirrors():
    f = build_field({"kind": "periodic", "dprime": [1, 3], "d": [2, 5], "c": [1, 2]})
    r = reflect_field(f)
    i = np.arange(-10, 10)
    assert np.array_equal(r.dprime(i), f.d(-i))
    assert np.array_equal(r.d(i), f.dprime(-i))
    assert np.array_equal(r.c(i), f.c(-i))
    assert r.c(0) == 1 and r.c(1) == 2


def test_double_reflection_random(random_field):
    rr = reflect_field(reflect_field(random_field))
    for a, b in zip(rr.sample((0, 199)), random_field.sample((0, 199))):
        assert np.array_equal(a, b)


def test_shift_group_action(random_field):
    w = (-50, 50)
    assert all(np.array_equal(a, b) for a, b in
               zip(shift_field(random_field, 0).sample(w), random_field.sample(w)))
    ab = shift_field(shift_field(random_field, 3), -11)
    direct = shift_field(random_field, -8)
    assert all(np.array_equal(a, b) for a, b in zip(ab.sample(w), direct.sample(w)))
    i = np.arange(-50, 51)
    assert np.array_equal(shift_field(random_field, 13).c(i), random_field.c(i + 13))


def test_shift_homogeneous_identical(homogeneous):
    s = shift_field(homogeneous, 12345)
    assert all(np.array_equal(a, b) for a, b in zip(s.sample((-5, 5)), homogeneous.sample((-5, 5))))


def test_field_rows_columns(periodic2):
    rows = field_rows(periodic2, (0, 2))
    assert rows == [(0, 1.0, 1.0, 1.0), (1, 1.0, 1.0, 2.0), (2, 1.0, 1.0, 1.0)]


def test_nonlinearity_kpp_properties():
    nl = Nonlinearity()
    s = np.linspace(0, 1, 101)
    f = nl(2.0, s)
    assert f[0] == 0 and f[-1] == 0
    assert np.all(f[1:-1] > 0) and np.all(f <= 2.0 * s)


def test_custom_nonlinearity_validation():
    nl = Nonlinearity.custom(lambda s: s * (1 - s) ** 2)
    assert validate_field(build_field({"kind": "homogeneous"}), nl, 64).passed
    with pytest.raises(FieldSpecError):
        Nonlinearity("custom")
    with pytest.raises(FieldSpecError):
        Nonlinearity(holder_exponent=0)


def test_window_helpers():
    w = Window.centered(4)
    assert (w.lo, w.hi, w.size) == (-2, 1, 4)
    assert 0 in w and 2 not in w
    assert Window.coerce((3, 5)).indices.tolist() == [3, 4, 5]
