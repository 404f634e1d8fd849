import math
from pathlib import Path

import numpy as np
import pytest

from fracnb import synthetic
from fracnb.data import PreparedDataset, class_log_prior, prepare

DATA_DIR = Path(__file__).parent / "data"


def random_prepared(rng, N=20, K=3, J=2, n_parts=4, costs=None) -> PreparedDataset:
    """Cache built from random part assignments and Dirichlet tables, so it
    has the structure of real prepared data without going through the CSV path."""
    y = rng.integers(0, J, N)
    y[:J] = np.arange(J)
    cond = np.empty((K, N, J))
    for k in range(K):
        table = np.log(rng.dirichlet(np.ones(n_parts), size=J).T)  # (parts, J), columns sum to 1
        parts = rng.integers(0, n_parts, N)
        cond[k] = table[parts]
    if costs is None:
        costs = np.full(K, math.log(K) + 1.0)
    return PreparedDataset(np.ascontiguousarray(cond), class_log_prior(y, J), y, np.asarray(costs, float),
                           tuple(f"x{k}" for k in range(K)), tuple(str(j) for j in range(J)))


def grid_toy() -> PreparedDataset:
    """The fixed N=10, K=2 instance used by the grid-oracle checks."""
    data, _ = prepare(synthetic.toy(N=10, K=2, J=2, seed=3))
    return data


def toy_matrix():
    """Five small prepared datasets for method-by-dataset sweeps."""
    out = [grid_toy()]
    for seed in range(4):
        out.append(prepare(synthetic.toy(N=30, K=4, J=2 + seed % 2, seed=seed))[0])
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_data():
    return grid_toy()


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
