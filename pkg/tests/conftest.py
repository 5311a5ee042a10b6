import numpy as np
import pytest

from sysreg.audit import FOREST_S2_Y2, builtin_summary
from sysreg.popmodel import DesignParams, Population, synthetic_population
from sysreg.theory import NonResponseSpec

# Desk population for Monte Carlo checks: 15 systematic samples of 16 units,
# strong within-sample homogeneity, non-response stratum = last quarter of the frame.
DESK = dict(N=240, n=16, rho=0.8, rho_y=0.9, ms_ratio=0.75, tail=0.25, cv_y=0.3, cv_x=0.1, seed=1)


@pytest.fixture(scope="session")
def forest():
    return builtin_summary()


@pytest.fixture
def nr_anchor():
    return NonResponseSpec(0.1, 2.0, FOREST_S2_Y2)


@pytest.fixture(scope="session")
def desk_pop():
    return synthetic_population(**DESK)


@pytest.fixture(scope="session")
def desk_design():
    return DesignParams.from_sizes(DESK["N"], DESK["n"])


@pytest.fixture
def pop12():
    """Twelve units, n=4, k=3; y and x loosely related, distinct values."""
    y = np.array([12.0, 7.0, 15.0, 9.0, 11.0, 20.0, 14.0, 6.0, 18.0, 10.0, 13.0, 16.0])
    x = np.array([5.0, 3.0, 6.0, 4.0, 5.5, 8.0, 6.5, 2.5, 7.0, 4.5, 6.0, 7.5])
    return Population(y, x)


@pytest.fixture
def design12():
    return DesignParams.from_sizes(12, 4)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line; it is printed immediately and again in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(criterion: str, ok: bool, detail: str) -> None:
        line = f"{criterion} {'PASS' if ok else 'FAIL'}: {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
