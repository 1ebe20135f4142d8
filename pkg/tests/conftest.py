import math

import numpy as np
import pytest

from nrcdt.measures import DiscreteMeasure2D, make_measure_2d
from nrcdt.radon import AffineMap


def random_measure(rng, n=None, spread=1.0):
    """Random planar measure in general position (never collinear for n >= 3)."""
    n = int(rng.integers(3, 50)) if n is None else n
    pts = rng.normal(size=(n, 2)) * spread
    w = rng.uniform(0.1, 1.0, size=n)
    return make_measure_2d(pts, w)


def random_affine(rng, shift=1.0):
    while True:
        a = rng.normal(size=(2, 2))
        if abs(np.linalg.det(a)) > 0.1:
            return AffineMap.from_arrays(a, rng.uniform(-shift, shift, size=2))


def grid_transform(rng, L):
    """Random element of the group that maps the L-angle grid onto itself."""
    c = rng.uniform(0.5, 2.0)
    k = int(rng.integers(0, 2 * L))
    t = AffineMap.rotation(k * math.pi / L)
    if rng.random() < 0.5:
        t = AffineMap.reflection(int(rng.integers(0, 2 * L)) * math.pi / L).compose(t)
    t = AffineMap.scaling(c).compose(t)
    return AffineMap.translation(*rng.uniform(-2, 2, size=2)).compose(t)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def triangle():
    return DiscreteMeasure2D([[0, 0], [1, 0], [0, 1]], [1 / 3, 1 / 3, 1 / 3])


# -- acceptance summary ------------------------------------------------------

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
