import numpy as np
import pytest

from nonloc_front import kernel as kn
from nonloc_front import wave1d as wv
from nonloc_front.nonlinearity import Bistable


@pytest.fixture(scope="session")
def gauss():
    return kn.normalize("gaussian", 1.0, 2)


@pytest.fixture(scope="session")
def uniform2():
    return kn.normalize("uniform", 1.0, 2)


@pytest.fixture(scope="session")
def cubic():
    return Bistable.cubic(0.3)


@pytest.fixture(scope="session")
def wave(gauss, cubic):
    """Continuum wave for theta = 0.3 at dz = 0.025."""
    return wv.solve_profile(kn.marginal(gauss, step=0.025), cubic)


@pytest.fixture(scope="session")
def roots(wave, cubic):
    return wv.characteristic_roots(wave.marginal, wave.c, cubic)


@pytest.fixture(scope="session")
def lattice_wave(gauss, cubic):
    """Wave of the h = 0.25 lattice marginal relaxed with dt = 0.05."""
    return wv.solve_profile(kn.lattice_marginal(gauss, 0.25), cubic, wv.WaveConfig(dt=0.05))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """``criterion(n, name, ok, detail)`` prints a PASS/FAIL line and asserts ``ok``."""
    def report(n, name, ok, detail=""):
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
