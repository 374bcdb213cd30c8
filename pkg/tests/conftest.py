import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_complex(rng, m, n=None):
    n = m if n is None else n
    return rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))


def random_density(rng, d, rank=None):
    rank = d if rank is None else rank
    z = random_complex(rng, d, rank)
    rho = z @ z.conj().T
    return rho / np.trace(rho)
