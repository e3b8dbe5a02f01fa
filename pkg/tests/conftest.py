import math

import numpy as np
import pytest

from mmcavity.core import CavityGeometry

TWO_PI = 2 * math.pi
R_BAR = 42.53e-3
LENGTHS = (43.75e-3, 45.44e-3, 47.15e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def g0():
    return CavityGeometry(LENGTHS[0], R_BAR, astigmatism_eta=0.01754)


@pytest.fixture
def g1():
    return CavityGeometry(LENGTHS[1], R_BAR, astigmatism_eta=0.01754)


@pytest.fixture
def g2():
    return CavityGeometry(LENGTHS[2], R_BAR, astigmatism_eta=0.01754, mirror_radius_rm=24e-3)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if RESULTS[n] else 'FAIL'}")
