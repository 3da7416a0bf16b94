import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fragkin import kernels as K  # noqa: E402
from fragkin.solver import SolverConfig  # noqa: E402
from fragkin.state import WeightedNormParams  # noqa: E402

ACCEPTANCE_LINES = []


def a1_config(**kw):
    """Constant kernel, uniform daughters, e^-x with unit number on [1/8, 8]."""
    base = dict(n=8.0, cells_per_decade=32, T=0.5, norm=WeightedNormParams(1.0, 0.6))
    return SolverConfig(K.constant(1.0), K.powerlaw(0.0, 0.0, 8.0), **{**base, **kw})


def a2_config(**kw):
    """Singular product kernel with sigma = 1/2, otherwise as a1."""
    base = dict(n=8.0, cells_per_decade=32, T=0.5, norm=WeightedNormParams(1.0, 0.6))
    return SolverConfig(K.singular_product(1.0, 0.5, 0.0), K.powerlaw(0.0, 0.1, 8.0), **{**base, **kw})


@pytest.fixture(scope="session")
def a1():
    from fragkin.solver import solve

    return solve(a1_config(cross_check=True))


@pytest.fixture(scope="session")
def a2():
    from fragkin.solver import solve

    return solve(a2_config(cross_check=True))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
