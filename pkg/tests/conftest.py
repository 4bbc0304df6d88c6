import math

import pytest

from kpp_lattice.coefficients import build_field

SQRT_HALF = 1 / math.sqrt(2)


@pytest.fixture(scope="session")
def homogeneous():
    return build_field({"kind": "homogeneous", "dprime": 1, "d": 1, "c": 1})


@pytest.fixture(scope="session")
def periodic2():
    return build_field({"kind": "periodic", "c": [1, 2], "d": [1, 1], "dprime": [1, 1]})


@pytest.fixture(scope="session")
def quasi():
    return build_field({"kind": "quasiperiodic", "c": 1, "c_amp": [0.3], "c_freq": [SQRT_HALF]})


@pytest.fixture(scope="session")
def quasi_phased():
    """Two incommensurate-phase harmonics, so the field is not even about 0."""
    return build_field({"kind": "quasiperiodic", "c": 1, "c_amp": [0.2, 0.1],
                        "c_freq": [SQRT_HALF, 2 * SQRT_HALF], "c_phase": [0.0, 0.9]})


def two_state(seed):
    return build_field({"kind": "random", "seed": seed, "c_law": "two_state",
                        "c_low": 0.5, "c_high": 1.5})


@pytest.fixture(scope="session")
def random_field():
    return two_state(1)
