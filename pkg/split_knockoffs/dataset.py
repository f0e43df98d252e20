"""Regression datasets, sample splitting and row restriction."""

from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from split_knockoffs.errors import (
    DimensionMismatchError,
    InvalidIndexError,
    InvalidParameterError,
    InvalidSplitError,
)

SplitMode = Literal["random", "first"]


@dataclass(frozen=True)
class Dataset:
    """Design matrix X (n x p) and response y (n)."""
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatchError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidParameterError("dataset contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class DataSplit:
    """Partition of row indices into D1 and D2 (0-based, each sorted)."""
    idx1: np.ndarray
    idx2: np.ndarray

    @property
    def n1(self) -> int:
        return len(self.idx1)

    @property
    def n2(self) -> int:
        return len(self.idx2)


def split_samples(
    n: int,
    n1: int,
    rng: Optional[np.random.Generator] = None,
    mode: SplitMode = "random",
) -> DataSplit:
    """Split rows 0..n-1 into D1 of size n1 and D2 of size n - n1.

    Args:
        n: Number of observations
        n1: Size of D1
        rng: Generator driving the random partition (required for mode="random")
        mode: "random" for a uniformly random partition, "first" to put the
            first n1 rows in D1

    Returns:
        DataSplit with sorted index arrays
    """
    if n1 <= 0 or n1 >= n:
        raise InvalidSplitError(f"n1 must satisfy 0 < n1 < n, got n1={n1}, n={n}")
    if mode == "first":
        order = np.arange(n)
    elif mode == "random":
        if rng is None:
            raise InvalidParameterError("a random split needs a generator")
        order = rng.permutation(n)
    else:
        raise InvalidParameterError(f"unknown split mode: {mode}")
    return DataSplit(idx1=np.sort(order[:n1]), idx2=np.sort(order[n1:]))


def restrict(dataset: Dataset, idx: Sequence[int]) -> Dataset:
    """Row subset of a dataset, in the order given by idx (0-based)."""
    idx = np.asarray(idx, dtype=int).reshape(-1)
    if idx.size == 0:
        raise InvalidIndexError("cannot restrict a dataset to zero rows")
    if idx.min() < 0 or idx.max() >= dataset.n:
        raise InvalidIndexError(f"row index out of range for n={dataset.n}")
    if np.unique(idx).size != idx.size:
        raise InvalidIndexError("row indices must be distinct")
    return Dataset(X=dataset.X[idx], y=dataset.y[idx])


def split_dataset(dataset: Dataset, split: DataSplit) -> tuple[Dataset, Dataset]:
    """Materialize (D1, D2) for a split."""
    return restrict(dataset, split.idx1), restrict(dataset, split.idx2)


def standardize(dataset: Dataset) -> Dataset:
    """Scale each column of X by its l2 norm / sqrt(n); all-zero columns are left alone."""
    scale = np.linalg.norm(dataset.X, axis=0) / np.sqrt(dataset.n)
    scale[scale == 0] = 1.0
    return Dataset(X=dataset.X / scale, y=dataset.y)
