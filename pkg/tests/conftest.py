import numpy as np
import pytest

from heteroclinic import CrossSection, build_grid, ginzburg_landau

# (number, title, passed, detail) recorded by the acceptance suite
CRITERIA: list = []


def record(number: int, title: str, passed: bool, detail: str) -> None:
    CRITERIA.append((number, title, bool(passed), detail))
    print(f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} | {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(CRITERIA):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}")


@pytest.fixture(scope="session")
def gl():
    return ginzburg_landau()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def line():
    """Unit 1D cross-section with 3 nodes."""
    return CrossSection((1.0,), (3,))


@pytest.fixture(scope="session")
def small2d():
    return build_grid(3, 0.1, CrossSection((1.0,), (6,)))


@pytest.fixture(scope="session")
def small3d():
    return build_grid(2, 0.25, CrossSection((1.0, 0.5), (5, 4)))
