import numpy as np
import pytest
from hypothesis import settings

from diracspec import Atom, Potential, SpectralMeasure, stieltjes_invert, weyl_function

settings.register_profile("repo", max_examples=25, deadline=None, derandomize=True)
settings.load_profile("repo")

ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def measure_of(pot, window=50.0, epsilon=1e-3, npts=8001):
    return stieltjes_invert(lambda z: weyl_function(pot, z), window, epsilon, out_grid=npts)


@pytest.fixture(scope="session")
def const_pot():
    return Potential.constant(0.5, 1.0, 512)


@pytest.fixture(scope="session")
def const_measure(const_pot):
    return measure_of(const_pot)


@pytest.fixture(scope="session")
def atom_measure():
    """``dt/pi`` plus a 0.2 atom at ``t = 1``: a valid spectral measure with a smooth kernel."""
    return SpectralMeasure.free(1, window=50.0, npts=2001).with_atoms([Atom(1.0, 0.2 * np.eye(1))])


@pytest.fixture(scope="session")
def three_atoms():
    eye = np.eye(1)
    t = np.linspace(-10.0, 10.0, 21)
    return SpectralMeasure(1, 0.0, 10.0, t, np.zeros((21, 1, 1)),
                           (Atom(-1.0, eye), Atom(0.0, eye), Atom(2.0, eye)))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20261016)


def smooth_potential(rng, p, ell=1.0, n=256, bound=2.0, modes=3):
    """Random trigonometric ``p x p`` potential with sup norm at most ``bound``."""
    coeffs = rng.normal(size=(modes, p, p)) + 1j * rng.normal(size=(modes, p, p))
    freqs = rng.uniform(0.5, 4.0, size=modes)
    phases = rng.uniform(0, 2 * np.pi, size=modes)

    def v(x):
        return sum(c * np.cos(f * x + ph) for c, f, ph in zip(coeffs, freqs, phases))

    x = np.linspace(0, ell, n + 1)
    peak = max(np.linalg.norm(v(s), 2) for s in x)
    scale = bound * rng.uniform(0.2, 1.0) / peak
    return Potential.from_function(lambda s: scale * v(s), ell, n, p)
