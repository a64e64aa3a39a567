"""Brute-force reference implementations the fast code is checked against.

Everything here favors obviousness over speed: quadratic pair loops,
Counter-based entropies, exhaustive enumeration. Nothing from the package
under test is imported.
"""

import itertools
import math
from collections import Counter

import numpy as np


def ari_by_pairs(labels_a, labels_b):
    """Adjusted Rand index via an explicit loop over all point pairs."""
    a = list(labels_a)
    b = list(labels_b)
    n = len(a)
    s11 = sa = sb = 0
    for i, j in itertools.combinations(range(n), 2):
        same_a = a[i] == a[j]
        same_b = b[i] == b[j]
        sa += same_a
        sb += same_b
        s11 += same_a and same_b
    total = n * (n - 1) // 2
    expected = sa * sb / total
    max_index = 0.5 * (sa + sb)
    if max_index == expected:
        return 1.0
    return (s11 - expected) / (max_index - expected)


def nmi_by_counts(labels_a, labels_b):
    """NMI from Counter-based joint and marginal distributions."""
    a = list(labels_a)
    b = list(labels_b)
    n = len(a)
    ca = Counter(a)
    cb = Counter(b)
    h_a = -sum(c / n * math.log(c / n) for c in ca.values())
    h_b = -sum(c / n * math.log(c / n) for c in cb.values())
    if h_a == 0.0 or h_b == 0.0:
        return 1.0 if (h_a == 0.0 and h_b == 0.0) else 0.0
    mi = sum(
        c / n * math.log(n * c / (ca[x] * cb[y]))
        for (x, y), c in Counter(zip(a, b)).items()
    )
    return min(max(mi, 0.0) / math.sqrt(h_a * h_b), 1.0)


def kmeans_objective(X, labels):
    """Within-cluster sum of squared distances to cluster means."""
    total = 0.0
    for k in set(labels):
        members = X[np.asarray(labels) == k]
        total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def exhaustive_kmeans_optimum(X, K):
    """Global minimum of the K-means objective over all K^n assignments."""
    n = X.shape[0]
    best = math.inf
    for assignment in itertools.product(range(K), repeat=n):
        best = min(best, kmeans_objective(X, np.asarray(assignment)))
    return best


def knn_fill_by_hand(values, mask, k):
    """Row-by-row nearest-neighbor filling with partial distances.

    Mirrors the documented contract: squared Euclidean distance over
    mutually observed coordinates scaled by p / overlap, candidates must
    observe the target coordinate, ties break toward the lower row index,
    and a cell with no candidate falls back to its column mean.
    """
    n, p = values.shape
    col_means = [
        np.mean([values[i, j] for i in range(n) if mask[i, j]]) for j in range(p)
    ]
    out = values.copy()
    for i in range(n):
        dists = []
        for other in range(n):
            if other == i:
                dists.append(math.inf)
                continue
            shared = [j for j in range(p) if mask[i, j] and mask[other, j]]
            if not shared:
                dists.append(math.inf)
                continue
            d2 = sum((values[i, j] - values[other, j]) ** 2 for j in shared)
            dists.append(d2 * p / len(shared))
        for j in range(p):
            if mask[i, j]:
                continue
            candidates = [
                other
                for other in range(n)
                if mask[other, j] and math.isfinite(dists[other])
            ]
            if not candidates:
                out[i, j] = col_means[j]
                continue
            candidates.sort(key=lambda other: (dists[other], other))
            neighbors = candidates[:k]
            out[i, j] = np.mean([values[other, j] for other in neighbors])
    return out
