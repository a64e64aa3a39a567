"""External cluster validity indices computed from a contingency table."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "UndefinedMetricError",
    "ContingencyTable",
    "adjusted_rand_index",
    "normalized_mutual_information",
]


class UndefinedMetricError(ValueError):
    """Raised when an index is undefined, e.g. for fewer than two points."""


@dataclass(frozen=True)
class ContingencyTable:
    """Joint class counts of two labelings of the same points."""

    counts: np.ndarray
    row_totals: np.ndarray
    col_totals: np.ndarray
    n: int

    @classmethod
    def from_labels(cls, labels_a, labels_b) -> "ContingencyTable":
        a = np.asarray(labels_a).ravel()
        b = np.asarray(labels_b).ravel()
        if a.shape != b.shape:
            raise ValueError(f"label vectors differ in length: {a.shape} vs {b.shape}")
        if a.size < 2:
            raise UndefinedMetricError("indices are undefined for fewer than 2 points")
        _, ai = np.unique(a, return_inverse=True)
        _, bi = np.unique(b, return_inverse=True)
        n_rows = int(ai.max()) + 1
        n_cols = int(bi.max()) + 1
        counts = np.bincount(ai * n_cols + bi, minlength=n_rows * n_cols)
        counts = counts.reshape(n_rows, n_cols).astype(np.int64)
        counts.setflags(write=False)
        return cls(
            counts=counts,
            row_totals=counts.sum(axis=1),
            col_totals=counts.sum(axis=0),
            n=int(a.size),
        )


def _pairs(c) -> int:
    c = int(c)
    return c * (c - 1) // 2


def adjusted_rand_index(labels_a, labels_b) -> float:
    """Chance-corrected pair-counting agreement between two labelings.

    Pair counts are accumulated in exact integer arithmetic; only the final
    ratio is a float. Returns 1.0 when the correction leaves a zero
    denominator, which happens only for two identical trivial labelings.
    """
    table = ContingencyTable.from_labels(labels_a, labels_b)
    index = sum(_pairs(c) for c in table.counts.ravel())
    sum_a = sum(_pairs(c) for c in table.row_totals)
    sum_b = sum(_pairs(c) for c in table.col_totals)
    total = _pairs(table.n)
    expected = sum_a * sum_b / total
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


def normalized_mutual_information(labels_a, labels_b) -> float:
    """Mutual information normalized by the geometric mean of the entropies.

    Natural logarithms throughout. If either labeling has zero entropy the
    index is 0.0, except that two single-cluster labelings are identical
    partitions and score 1.0.
    """
    table = ContingencyTable.from_labels(labels_a, labels_b)
    n = table.n
    h_a = _entropy(table.row_totals, n)
    h_b = _entropy(table.col_totals, n)
    if h_a == 0.0 or h_b == 0.0:
        return 1.0 if (h_a == 0.0 and h_b == 0.0) else 0.0
    mi = 0.0
    for u in range(table.counts.shape[0]):
        a_u = int(table.row_totals[u])
        for v in range(table.counts.shape[1]):
            c = int(table.counts[u, v])
            if c == 0:
                continue
            b_v = int(table.col_totals[v])
            mi += (c / n) * math.log(n * c / (a_u * b_v))
    mi = max(mi, 0.0)
    return min(mi / math.sqrt(h_a * h_b), 1.0)


def _entropy(totals, n: int) -> float:
    h = 0.0
    for c in totals:
        c = int(c)
        if c > 0:
            h -= (c / n) * math.log(c / n)
    return h
