import numpy as np
import pytest

from obsdecay import beam_example, build_basis, build_system, full_spectrum

# Exact roots of lam^2 + lam + 1 = 0, the single-mode characteristic
# polynomial for gamma = c = omega = 1.
SINGLE_MODE_ROOTS = ((-1 + 1j * np.sqrt(3.0)) / 2, (-1 - 1j * np.sqrt(3.0)) / 2)


@pytest.fixture(scope="session")
def single_mode():
    return build_system(1.0, [1.0], [1.0])


@pytest.fixture(scope="session")
def beam23():
    return beam_example(1.0, 1.0, 23)


@pytest.fixture(scope="session")
def beam23_spectrum(beam23):
    return full_spectrum(beam23)


@pytest.fixture(scope="session")
def beam23_basis(beam23, beam23_spectrum):
    return build_basis(beam23, beam23_spectrum)


@pytest.fixture(scope="session")
def beam4():
    return beam_example(1.0, 1.0, 4)


@pytest.fixture(scope="session")
def beam4_spectrum(beam4):
    return full_spectrum(beam4)


@pytest.fixture(scope="session")
def beam4_basis(beam4, beam4_spectrum):
    return build_basis(beam4, beam4_spectrum)
