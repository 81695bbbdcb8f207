import numpy as np
import pytest
from hypothesis import settings

from infocomplex.belief import ProblemInstance

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

from helpers import uniform


@pytest.fixture
def and_inst():
    return ProblemInstance([[0, 0], [0, 1]], uniform())


@pytest.fixture
def zero_inst():
    return ProblemInstance([[0, 0], [0, 0]], uniform())


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
