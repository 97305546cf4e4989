import math

import numpy as np
import pytest

from ttrecurrence import full_shift, golden_mean_shift, make_shift, markov_measure

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def full3():
    return full_shift(3, math.log(3))


@pytest.fixture
def golden():
    return golden_mean_shift()


@pytest.fixture
def golden_markov():
    # kernel chosen so that values (1, -2) are centred: p = (2/3, 1/3)
    M = [[1, 1], [1, 0]]
    return make_shift(M, markov_measure(M, [["1/2", "1/2"], ["1", "0"]]))


@pytest.fixture
def sft3():
    M = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]])
    return make_shift(M)
