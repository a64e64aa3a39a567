"""Deterministic random stream derivation.

All randomness in the package flows through ``stream``, which builds a
counter-based Philox generator from an integer key path. Equal key paths
always produce equal streams, and distinct key paths produce statistically
independent ones, so callers can derive per-restart or per-replicate
generators without coordinating.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream"]


def stream(*keys: int) -> np.random.Generator:
    """Generator for the integer key path ``keys``, e.g. (seed, replicate)."""
    if not keys:
        raise ValueError("at least one key is required")
    for k in keys:
        if int(k) != k or k < 0:
            raise ValueError(f"stream keys must be non-negative integers, got {k!r}")
    seq = np.random.SeedSequence([int(k) for k in keys])
    return np.random.Generator(np.random.Philox(seq))
