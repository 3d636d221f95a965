import math

import numpy as np
import pytest

from hypercone.semigroup import ConeModel
from hypercone.spaces import ConeSpace


def pytest_configure(config):
    np.seterr(over="ignore", under="ignore")


@pytest.fixture(scope="session")
def half_plane():
    return ConeSpace.planar(math.pi)


@pytest.fixture(scope="session")
def plane():
    return ConeSpace.planar(2 * math.pi)


@pytest.fixture(scope="session")
def half_plane_model(half_plane):
    return ConeModel.build(half_plane, 4.0, 512, t_min=0.05)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for res in sorted(results, key=lambda r: r.number):
            terminalreporter.write_line(res.line())
