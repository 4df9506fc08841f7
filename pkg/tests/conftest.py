import cmath
import math

import numpy as np
import pytest
from hypothesis import strategies as st

from effcycle.hyperbolic import INF, IdealPoint, Point3, random_isometry
from effcycle.simplices import GeodesicSimplex3

OMEGA = cmath.exp(1j * math.pi / 3)

finite_points = st.builds(
    Point3,
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(0.05, 5),
)
ideal_points = st.builds(
    lambda x, y: IdealPoint(complex(x, y)), st.floats(-3, 3), st.floats(-3, 3)
)
seeds = st.integers(0, 2**32 - 1)


@pytest.fixture
def delta0():
    return GeodesicSimplex3((IdealPoint(0), IdealPoint(1), IdealPoint(OMEGA), INF))


def rand_iso(seed, orientation=None, scale=0.7):
    return random_isometry(np.random.default_rng(seed), scale, orientation)
