import math

import numpy as np
import pytest

from svebound import RunConfig, example_1, example_2
from svebound.bifunctions import Affine
from svebound.cones import Orthant
from svebound.constraints import Box
from svebound.model import ProblemInstance


@pytest.fixture(scope="session")
def cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def ex1():
    return example_1()


@pytest.fixture(scope="session")
def ex2():
    return example_2(math.pi / 6)


@pytest.fixture(scope="session")
def ex2_flat():
    return example_2(0.0, allow_degenerate=True)


@pytest.fixture(scope="session")
def box_toy():
    """f(x, z) = -x on the unit box with C the orthant; Solv = {0}."""
    return ProblemInstance(Affine(-np.eye(2), np.zeros((2, 2)), np.zeros(2)), Orthant(2),
                           Box(np.zeros(2), np.ones(2)), np.zeros((1, 2)), name="box-toy")


def pytest_terminal_summary(terminalreporter):
    from tests.test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS):
            terminalreporter.write_line(line)
