import numpy as np
import pytest

from beltrami_torus.spectral import PeriodicGrid

ACCEPTANCE_LINES = []


def record_acceptance(number: int, title: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_LINES.append((number, f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title}  {detail}".rstrip()))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def grid64():
    return PeriodicGrid(64)


def random_field(grid, rng, band_limited=True):
    """Random samples; optionally restricted to the 2/3 band with decaying spectrum."""
    n = grid.n
    if not band_limited:
        return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m1, m2 = grid.modes()
    c = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    c *= grid.dealias_mask() / (1.0 + m1 ** 2 + m2 ** 2)
    return np.fft.ifft2(c) * n * n
