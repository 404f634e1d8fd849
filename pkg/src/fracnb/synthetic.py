"""Seeded synthetic datasets for tests, benchmarks and the demo commands."""

import numpy as np

from .data import RawDataset, dataset_from_arrays


def informative_plus_noise(n_informative=5, n_noise=45, N=1000, shift=1.0, seed=0) -> RawDataset:
    """Binary target; informative columns are ``shift * y + N(0, 1)``, the
    rest pure N(0, 1) noise."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, N)
    inf = shift * y[:, None] + rng.normal(size=(N, n_informative))
    noise = rng.normal(size=(N, n_noise))
    names = [f"inf{i}" for i in range(n_informative)] + [f"noise{i}" for i in range(n_noise)]
    return dataset_from_arrays(np.hstack([inf, noise]), y, names=names)


def redundant(n_copies=2, n_noise=2, N=400, shift=1.5, seed=0) -> RawDataset:
    """One informative signal duplicated ``n_copies`` times, plus noise."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, N)
    signal = shift * y + rng.normal(size=N)
    cols = [signal] * n_copies + [rng.normal(size=N) for _ in range(n_noise)]
    names = [f"copy{i}" for i in range(n_copies)] + [f"noise{i}" for i in range(n_noise)]
    return dataset_from_arrays(np.column_stack(cols), y, names=names)


def toy(N=10, K=2, J=2, seed=0, n_values=3) -> RawDataset:
    """Small categorical dataset with some class signal in every column."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, J, N)
    y[:J] = np.arange(J)  # every class present
    X = np.empty((N, K), dtype=object)
    for k in range(K):
        strength = rng.uniform(0.3, 0.9)
        noisy = rng.integers(0, n_values, N)
        keep = rng.random(N) < strength
        X[:, k] = np.where(keep, y % n_values, noisy).astype(str)
    return dataset_from_arrays(X, y, kinds=["categorical"] * K)
