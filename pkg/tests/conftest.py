import math

import numpy as np
import pytest

from landau_breather.model import DisorderDistribution, make_builtin_potential

FOUR_PI = 4 * math.pi

_ACCEPTANCE = []


def record_criterion(number, name, passed, detail=""):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    _ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def hat():
    return make_builtin_potential("hat")


@pytest.fixture
def bump():
    return make_builtin_potential("smooth-bump")


@pytest.fixture
def dist():
    return DisorderDistribution.uniform(0.2, 0.4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
