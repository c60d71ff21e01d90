"""Exact signal-domain definitions used as ground truth by every decoder test.

These are the non-sketch reference computations: the sign convention, the
tail/heavy-hitter decomposition, and coordinate restriction.  Decoders are
judged against these, never against their own sketches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def sign_scalar(theta: float) -> int:
    """Sign with the convention sign(0) = +1. Rejects non-finite input."""
    if not np.isfinite(theta):
        raise ValueError(f"sign of non-finite value {theta!r}")
    return 1 if theta >= 0 else -1


def sign_vector(values) -> np.ndarray:
    """Elementwise sign with sign(0) = +1, as int8."""
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("sign of non-finite vector")
    return np.where(v >= 0, 1, -1).astype(np.int8)


def as_signal(x) -> np.ndarray:
    """Validate a 1-D real signal with finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"signal must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("signal has non-finite entries")
    return arr


@dataclass(frozen=True)
class TailStats:
    """Energy outside the k largest entries, and the heavy-hitter set."""

    tail_sq: float
    heavy: np.ndarray  # sorted coordinate indices


def head_indices(x, k: int) -> np.ndarray:
    """Indices of the k largest-magnitude entries; ties go to lower index."""
    x = as_signal(x)
    if not 1 <= k <= x.size:
        raise ValueError(f"k={k} out of range for signal of length {x.size}")
    # stable sort on descending magnitude keeps lower indices first among ties
    order = np.argsort(-np.abs(x), kind="stable")
    return np.sort(order[:k])


def tail_stats(x, k: int) -> TailStats:
    """Tail energy after removing the top-k entries, plus the heavy set.

    A coordinate is heavy when its squared value is at least tail_sq / k.
    When the tail is identically zero that test would mark every coordinate,
    so the heavy set degenerates to the support of x.  The comparison is done
    on entries rescaled by the largest tail magnitude, which is equivalent in
    exact arithmetic and immune to underflow of squared tiny entries.
    """
    x = as_signal(x)
    head = head_indices(x, k)
    mask = np.ones(x.size, dtype=bool)
    mask[head] = False
    tail = x[mask]
    scale = float(np.max(np.abs(tail))) if tail.size else 0.0
    tail_sq = float(np.sum(tail**2))
    if scale == 0.0:
        heavy = np.nonzero(x)[0]
    else:
        with np.errstate(over="ignore"):
            scaled_sq = (x / scale) ** 2  # head entries may overflow to inf
            threshold = float(np.sum((tail / scale) ** 2)) / k
            heavy = np.nonzero(scaled_sq >= threshold)[0]
    return TailStats(tail_sq=tail_sq, heavy=heavy)


def restrict(x, indices) -> np.ndarray:
    """Zero out every coordinate not listed in ``indices``."""
    x = as_signal(x)
    idx = np.asarray(sorted(indices), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= x.size):
        raise ValueError("restriction index out of range")
    out = np.zeros_like(x)
    out[idx] = x[idx]
    return out


@dataclass(frozen=True)
class SparseEstimate:
    """A sparse estimate as (index, value) pairs with a sparsity budget."""

    indices: np.ndarray
    values: np.ndarray
    sparsity_bound: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be matching 1-D arrays")
        if idx.size != np.unique(idx).size:
            raise ValueError("estimate indices must be distinct")
        if idx.size > self.sparsity_bound:
            raise ValueError(
                f"{idx.size} entries exceed sparsity bound {self.sparsity_bound}"
            )
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def to_dense(self, n: int) -> np.ndarray:
        if self.indices.size and self.indices.max() >= n:
            raise ValueError("estimate index out of range for requested length")
        out = np.zeros(n)
        out[self.indices] = self.values
        return out
