import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment


def multiset_distance(a, b):
    """Largest pairwise distance under the optimal matching of two equal-size multisets."""
    a, b = np.asarray(a, complex), np.asarray(b, complex)
    assert a.shape == b.shape
    if a.size == 0:
        return 0.0
    D = np.abs(a[:, None] - b[None, :])
    i, j = linear_sum_assignment(D)
    return float(D[i, j].max())


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
