import numpy as np
import pytest

from buffernet.network import NetworkInstance, derive


@pytest.fixture
def tiny2():
    """Two-bank, one-asset instance with hand-checkable numbers."""
    return NetworkInstance(
        liabilities=[[0.0, 1.0], [0.0, 0.0]],
        portfolio=[[1.0], [2.0]],
        external=[1.5, 0.2],
        costs=[1.0, 1.0],
        names=["b1", "b2"],
    )


def random_instance(rng, n=None, m=None, signed=False):
    """Random valid instance with r > 0 by construction (back-solved inflows)."""
    n = n or int(rng.integers(2, 9))
    m = m if m is not None else int(rng.integers(1, 4))
    mask = rng.random((n, n)) < 0.6
    np.fill_diagonal(mask, False)
    liabilities = np.where(mask, rng.uniform(0.2, 2.0, (n, n)), 0.0)
    S = rng.uniform(0.1, 1.5, (n, m))
    if signed:
        S *= rng.choice([-1.0, 1.0], size=(n, m))
    costs = rng.uniform(0.5, 2.0, n)
    shell = NetworkInstance(liabilities, S, np.zeros(n), costs)
    d = derive(shell)
    margins = rng.uniform(0.05, 0.6, n)
    external = margins - d.relative_liabilities.T @ d.total_liabilities + d.total_liabilities
    return NetworkInstance(liabilities, S, external, costs)
