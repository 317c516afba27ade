import numpy as np
import pytest

from transdecomp import Potential, UniformGrid, find_poles
from transdecomp.lyapunov import build

# reference values (4 decimals) for the third barrier resonance
MU3_REF = 7.1168 - 0.4462j
GAMMA3_REF = 0.8924

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def barrier():
    return Potential(a=2.0, b=3.0, v0=5.0, mass=1.0)


@pytest.fixture(scope="session")
def poles(barrier):
    return find_poles(barrier, (0.1, 10.0), 200)


@pytest.fixture(scope="session")
def mu3(poles):
    return poles[2].mu


@pytest.fixture(scope="session")
def default_op():
    return build(UniformGrid(0.0, 40.0, 2000))


@pytest.fixture(scope="session")
def small_op():
    return build(UniformGrid(0.0, 40.0, 800))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def smooth_state(grid, rng, n_bumps=3):
    """Random normalized Gaussian mixture in energy, well inside the grid."""
    from transdecomp import EnergyState

    E = grid.nodes
    psi = np.zeros_like(E, dtype=complex)
    for _ in range(n_bumps):
        centre = rng.uniform(1.0, 0.5 * grid.e_max)
        width = rng.uniform(0.3, 1.5)
        amp = rng.normal() + 1j * rng.normal()
        psi += amp * np.exp(-((E - centre) ** 2) / (2 * width**2))
    return EnergyState(grid, np.sqrt(grid.spacing) * psi).normalized()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
