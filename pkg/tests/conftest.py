import numpy as np
import pytest

from evmix import dist_zoo


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=dist_zoo.study_families(), ids=str)
def family(request):
    return request.param


@pytest.fixture
def pareto_sample():
    return dist_zoo.sample(dist_zoo.parse_spec("pareto:l=1"), 256, 11).values


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
