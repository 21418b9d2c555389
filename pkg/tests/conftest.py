import sys

import numpy as np
import pytest

from gaussminmax import surface


@pytest.fixture(scope="session")
def clifford():
    imm = surface.builtin_surface("clifford", 128)
    return imm, surface.geometry(imm)


@pytest.fixture(scope="session")
def sphere():
    imm = surface.builtin_surface("geodesic_sphere", 128)
    return imm, surface.geometry(imm)


@pytest.fixture(scope="session")
def clifford64():
    imm = surface.builtin_surface("clifford", 64)
    return imm, surface.geometry(imm)


@pytest.fixture(scope="session")
def sphere64():
    imm = surface.builtin_surface("geodesic_sphere", 64)
    return imm, surface.geometry(imm)


def random_frame(rng, size=()):
    """Orthonormal pairs in R^4 drawn by QR of Gaussian matrices."""
    m = rng.standard_normal(size + (4, 2))
    q, _ = np.linalg.qr(m)
    return q[..., 0], q[..., 1]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
