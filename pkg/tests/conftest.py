import numpy as np
import pytest

from coalloc import _backend


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_psd(rng, n, rank=None):
    a = rng.standard_normal((n, rank or n))
    return a @ a.T


def nonnegative_psd(rng, n):
    a = rng.random((n, n))
    return a @ a.T


def nonpositive_offdiag_psd(rng, n):
    """Diagonally dominant with nonpositive off-diagonal entries."""
    off = -rng.random((n, n))
    off = (off + off.T) / 2
    np.fill_diagonal(off, 0.0)
    return off + np.diag(-off.sum(axis=1) + rng.random(n))


def hedged_psd(rng, n):
    """Covariance of (Y_1, ..., Y_{n-1}, -sum Y_k): the total is a.s. constant."""
    y = random_psd(rng, n - 1)
    b = np.vstack([np.eye(n - 1), -np.ones((1, n - 1))])
    return b @ y @ b.T


def random_game_values(rng, n):
    v = rng.normal(size=1 << n) * 10
    v[0] = 0.0
    return v


EX_2x2 = np.array([[1.0, -2.0], [-2.0, 4.0]])
HEDGED_4x4 = np.array([[1.0, -1, -1, -1], [-1, 1, 1, 1], [-1, 1, 1, 1], [-1, 1, 1, 1]])
EXCHANGEABLE_4x4 = np.array([[1.0, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, -1], [0, 0, -1, 1]])
DIAG_149 = np.diag([1.0, 4.0, 9.0])
