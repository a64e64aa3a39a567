"""Baseline imputation methods that complete a dataset before clustering.

Both methods leave observed cells untouched and return a fully observed
dataset. Imputing a dataset that is already complete returns it unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ConfigurationError, Dataset

__all__ = [
    "ImputationError",
    "ImputationConfig",
    "mean_impute",
    "knn_impute",
    "impute",
    "IMPUTATION_METHODS",
]

IMPUTATION_METHODS = ("mean", "knn")


class ImputationError(ValueError):
    """Raised when a dataset cannot be completed, e.g. an all-missing column."""


@dataclass(frozen=True)
class ImputationConfig:
    method: str = "mean"
    k_neighbors: int = 5

    def __post_init__(self):
        if self.method not in IMPUTATION_METHODS:
            raise ConfigurationError(
                f"imputation method must be one of {IMPUTATION_METHODS}, got {self.method!r}"
            )
        if not (isinstance(self.k_neighbors, int) and self.k_neighbors >= 1):
            raise ConfigurationError(
                f"k_neighbors must be a positive integer, got {self.k_neighbors!r}"
            )


def _column_means(ds: Dataset) -> np.ndarray:
    observed_per_col = ds.mask.sum(axis=0)
    empty = np.flatnonzero(observed_per_col == 0)
    if empty.size:
        raise ImputationError(f"column c{empty[0] + 1} has no observed cells")
    sums = np.where(ds.mask, ds.values, 0.0).sum(axis=0)
    return sums / observed_per_col


def mean_impute(ds: Dataset) -> Dataset:
    """Fill each missing cell with its column mean over observed cells."""
    if ds.complete:
        return ds
    means = _column_means(ds)
    values = np.where(ds.mask, ds.values, means)
    return ds.filled_with(values)


def knn_impute(ds: Dataset, cfg: ImputationConfig | None = None, return_fallback_count=False):
    """Fill missing cells from the k nearest rows under partial distances.

    The distance between two rows is the squared Euclidean distance over
    the coordinates observed in both, rescaled by p over the overlap size;
    rows sharing no observed coordinate are not comparable. For each missing
    cell only rows that observe that coordinate are candidates, the k
    nearest are averaged with equal weights, and ties are broken toward the
    lower row index. A cell with no candidate at all falls back to the
    column mean; pass ``return_fallback_count=True`` to get the number of
    such cells alongside the dataset.
    """
    if cfg is None:
        cfg = ImputationConfig(method="knn")
    if ds.complete:
        return (ds, 0) if return_fallback_count else ds

    X = ds.values
    mask = ds.mask
    n, p = X.shape
    col_means = _column_means(ds)
    Xz = np.where(mask, X, 0.0)

    values = X.copy()
    fallbacks = 0
    for i in np.flatnonzero(~mask.all(axis=1)):
        both = mask[i] & mask
        overlap = both.sum(axis=1)
        diff = np.where(both, Xz[i] - Xz, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            d2 = np.einsum("ij,ij->i", diff, diff) * (p / overlap)
        d2[overlap == 0] = np.inf
        d2[i] = np.inf
        for c in np.flatnonzero(~mask[i]):
            candidates = np.flatnonzero(mask[:, c] & np.isfinite(d2))
            if candidates.size == 0:
                values[i, c] = col_means[c]
                fallbacks += 1
                continue
            # Stable sort on distance keeps candidates in ascending row
            # order, which is the documented tie-break.
            order = candidates[np.argsort(d2[candidates], kind="stable")]
            neighbors = order[: cfg.k_neighbors]
            values[i, c] = X[neighbors, c].mean()

    out = ds.filled_with(values)
    return (out, fallbacks) if return_fallback_count else out


def impute(ds: Dataset, cfg: ImputationConfig) -> Dataset:
    """Dispatch to the configured imputation method."""
    if cfg.method == "mean":
        return mean_impute(ds)
    return knn_impute(ds, cfg)
