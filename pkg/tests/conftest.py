import math

import numpy as np
import pytest

from boustrodiff.experiments import parallelogram, random_convex_polygon
from boustrodiff.geometry import normalize, validate

# filled by test_acceptance; printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
HALF_SIDE = math.sqrt(2) / 4  # normalized square half-width


@pytest.fixture
def square():
    return normalize(validate(UNIT_SQUARE))


@pytest.fixture
def para():
    return normalize(parallelogram())


def random_polygons(n, seed=0, sides=None):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        k = sides if sides is not None else int(rng.integers(3, 10))
        out.append(normalize(random_convex_polygon(rng, k)))
    return out
