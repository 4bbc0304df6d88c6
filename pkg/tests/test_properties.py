import csv
import io
import math

import numpy as np
from hypothesis import given, settings, strategies as st

from kpp_lattice.coefficients import build_field, reflect_field, shift_field
from kpp_lattice.config import convert
from kpp_lattice.dynamics import LatticeState, front_position
from kpp_lattice.eigen import envelope, lambda_closed_form, lambda_periodic
from kpp_lattice.io import csv_bytes

rates = st.floats(0.2, 3.0)
growth = st.floats(-0.5, 2.0)
moment = st.floats(-3.0, 3.0)


@st.composite
def periodic_fields(draw, max_period=6):
    n = draw(st.integers(1, max_period))
    spec = {"kind": "periodic",
            "dprime": draw(st.lists(rates, min_size=n, max_size=n)),
            "d": draw(st.lists(rates, min_size=n, max_size=n)),
            "c": draw(st.lists(growth, min_size=n, max_size=n))}
    return build_field(spec), spec


def lam(field, p):
    return lambda_periodic(field, p).value


@settings(max_examples=60, deadline=None)
@given(periodic_fields(), moment, moment)
def test_midpoint_convexity(fs, p, q):
    f, _ = fs
    mid = lam(f, 0.5 * (p + q))
    assert mid <= 0.5 * (lam(f, p) + lam(f, q)) + 1e-9 * (1 + abs(mid))


@settings(max_examples=60, deadline=None)
@given(periodic_fields(), moment)
def test_envelope(fs, p):
    f, _ = fs
    lo, hi = envelope(f, p, (0, f.period - 1))
    v = lam(f, p)
    tol = 1e-10 * (1 + abs(v))
    assert lo - tol <= v <= hi + tol


@settings(max_examples=60, deadline=None)
@given(periodic_fields(), moment, moment)
def test_lipschitz(fs, p, q):
    f, _ = fs
    D = f.bounds((0, f.period - 1))["D"]
    slope = 2 * D * math.exp(max(abs(p), abs(q)))
    assert abs(lam(f, p) - lam(f, q)) <= slope * abs(p - q) + 1e-9


@settings(max_examples=60, deadline=None)
@given(periodic_fields(), moment, st.data())
def test_growth_perturbation(fs, p, data):
    f, spec = fs
    n = len(spec["c"])
    dc = data.draw(st.lists(st.floats(-0.3, 0.3), min_size=n, max_size=n))
    g = build_field({**spec, "c": [a + b for a, b in zip(spec["c"], dc)]})
    a, b = lam(f, p), lam(g, p)
    assert abs(a - b) <= max(map(abs, dc)) + 1e-9
    if min(dc) >= 0:
        assert b >= a - 1e-10


@settings(max_examples=40, deadline=None)
@given(periodic_fields(), moment, st.integers(-20, 20))
def test_shift_and_reflection(fs, p, j):
    f, _ = fs
    v = lam(f, p)
    assert math.isclose(lam(shift_field(f, j), p), v, rel_tol=1e-11, abs_tol=1e-11)
    assert math.isclose(lam(reflect_field(f), -p), v, rel_tol=1e-11, abs_tol=1e-11)


@given(rates, rates, growth, moment)
def test_closed_form_symmetry(dp, d, c, p):
    assert math.isclose(lambda_closed_form(dp, d, c, p), lambda_closed_form(d, dp, c, -p),
                        rel_tol=1e-12, abs_tol=1e-12)
    assert math.isclose(lambda_closed_form(dp, d, c, 0.0), c, abs_tol=1e-14)


profiles = st.lists(st.floats(0.0, 1.0), min_size=2, max_size=40)


@given(profiles, st.floats(0.05, 0.95), st.integers(-50, 50))
def test_front_position_monotone_profile(vals, level, lo):
    u = np.sort(np.array(vals))[::-1]
    pos = front_position(LatticeState(0.0, lo, u), level, "+")
    if u.max() < level:
        assert math.isnan(pos)
        return
    assert lo <= pos <= lo + u.size - 1
    above = np.flatnonzero(u >= level)[-1]
    assert lo + above <= pos <= lo + above + 1


@given(profiles, st.floats(0.05, 0.95))
def test_front_position_mirror(vals, level):
    u = np.array(vals)
    n = u.size
    right = front_position(LatticeState(0.0, 0, u), level, "+")
    left = front_position(LatticeState(0.0, -(n - 1), u[::-1].copy()), level, "-")
    if math.isnan(right):
        assert math.isnan(left)
    else:
        assert math.isclose(right, -left, abs_tol=1e-12)


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.lists(finite, min_size=1, max_size=8))
def test_config_list_round_trip(xs):
    text = ",".join(repr(x) for x in xs)
    assert convert("field.c_amp", text) == xs


@given(st.lists(st.tuples(finite, st.integers(-10**6, 10**6), st.booleans()), max_size=20))
def test_csv_round_trip(rows):
    text = csv_bytes(("x", "n", "flag"), rows).decode()
    back = list(csv.reader(io.StringIO(text)))
    assert back[0] == ["x", "n", "flag"]
    assert [(float(a), int(b), c == "true") for a, b, c in back[1:]] == rows
