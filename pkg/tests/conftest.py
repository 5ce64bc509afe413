import numpy as np
import pytest


def random_walks(rng: np.random.Generator, n: int, N: int, d: int = 1) -> np.ndarray:
    """(n, N+1, d) independent simple random walks from the origin."""
    axes = rng.integers(0, d, size=(n, N))
    signs = rng.choice((-1, 1), size=(n, N))
    steps = np.zeros((n, N, d), dtype=np.int64)
    rows = np.repeat(np.arange(n), N)
    cols = np.tile(np.arange(N), n)
    steps[rows, cols, axes.ravel()] = signs.ravel()
    out = np.zeros((n, N + 1, d), dtype=np.int64)
    out[:, 1:] = np.cumsum(steps, axis=1)
    return out


@pytest.fixture
def rw():
    return random_walks
