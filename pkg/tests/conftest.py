import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vortexlab import Grid, ScalarField

settings.register_profile(
    "vortexlab",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("vortexlab")

TWO_PI = 2 * np.pi


@pytest.fixture
def grid64():
    return Grid(64, TWO_PI)


@pytest.fixture
def grid32():
    return Grid(32, TWO_PI)


def band_limited(grid, rng, kmax=6, zero_mean=True):
    """Random real field with Fourier support in ``|k_i| <= kmax``."""
    n = grid.n_points
    coeffs = np.zeros(grid.shape, dtype=complex)
    for k1 in range(-kmax, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            coeffs[k1 % n, k2 % n] = rng.normal() + 1j * rng.normal()
    if zero_mean:
        coeffs[0, 0] = 0.0
    values = np.fft.ifft2(coeffs, norm="forward")
    return ScalarField(grid, values.real)


def taylor_green(grid):
    X, Y = grid.mesh
    return ScalarField(grid, 2 * np.sin(X) * np.sin(Y))


# Acceptance outcomes, printed as one line per criterion at the end of the run.
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def acceptance():
    def record(criterion, passed, detail):
        ACCEPTANCE_RESULTS[criterion] = (bool(passed), detail)
        print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} ({detail})")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'} - {detail}")
