import numpy as np
import pytest

from disentangle import MeasureSpace, ProblemInstance, WeightFamily

CRITERIA = pytest.StashKey[list]()


def make_e1(q=0.5, mass=(1.0, 1.0)):
    space = MeasureSpace(("a", "b"), list(mass))
    fam = WeightFamily(("u", "v"), [[3.0, 0.0], [0.0, 1.0]])
    return ProblemInstance(space, (fam, fam), [0.5, 0.5], q)


def single_atom(d=2, q=0.5):
    space = MeasureSpace(("x",), [1.0])
    one = WeightFamily(("one",), [[1.0]])
    theta = np.full(d, 1.0 / d)
    return ProblemInstance(space, (one,) * d, theta, q)


@pytest.fixture
def e1():
    return make_e1()


def pytest_configure(config):
    config.stash[CRITERIA] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; it is echoed now and in the terminal summary."""
    def record(number, title, passed, detail):
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        request.config.stash[CRITERIA].append((number, line))
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.stash.get(CRITERIA, []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in lines:
            terminalreporter.write_line(line)
