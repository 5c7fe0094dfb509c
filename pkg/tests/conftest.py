import numpy as np
import pytest

PAPER_SPECTRUM = (0.6, 1.2, 6.7, 9.3, 10.5, 15.5, 17.2, 20.25, 30.1, 35.4)


@pytest.fixture(scope="session")
def paper_spectrum():
    from wishart_edge import build_spectrum

    return build_spectrum(PAPER_SPECTRUM)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250809)
