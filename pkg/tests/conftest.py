import numpy as np
import pytest

from nihigs import massspring as ms
from nihigs.ni import NICertificate


@pytest.fixture(scope="session")
def demo_model():
    return ms.discrete_model()


@pytest.fixture(scope="session")
def demo_cert():
    # storage x'Px/2 with the reference weight; the scale is pinned in test_ni
    return NICertificate(ms.P_REFERENCE)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_stable(rng, n, radius=0.9):
    """Random n x n matrix with spectral radius ``radius``."""
    A = rng.standard_normal((n, n))
    return A * (radius / max(abs(np.linalg.eigvals(A))))


def well_conditioned(rng, n):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(rng.uniform(0.5, 2.0, n))
