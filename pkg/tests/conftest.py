import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def gaussian_problem(rng, n, d):
    X = rng.standard_normal((n, d))
    y = rng.standard_normal(n)
    w0 = rng.standard_normal(d)
    return X, y, w0
