import numpy as np
import pytest

from curlspec.mesh import generate_ball, generate_handlebody, generate_solid_torus
from curlspec.spectrum import constraint_space_for_mesh


@pytest.fixture(scope="session")
def ball1():
    return generate_ball(1.0, 1)


@pytest.fixture(scope="session")
def ball2():
    return generate_ball(1.0, 2)


@pytest.fixture(scope="session")
def torus1():
    return generate_solid_torus(2.0, 0.5, 1)


@pytest.fixture(scope="session")
def genus2():
    return generate_handlebody(2, 1)


@pytest.fixture(scope="session")
def ball1_handle(ball1):
    return constraint_space_for_mesh(ball1)


@pytest.fixture(scope="session")
def ball2_handle(ball2):
    return constraint_space_for_mesh(ball2)


@pytest.fixture(scope="session")
def torus1_handle(torus1):
    return constraint_space_for_mesh(torus1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda x: x[0]):
            terminalreporter.write_line(line)
