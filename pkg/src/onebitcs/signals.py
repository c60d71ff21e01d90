"""Deterministic unit-norm test-signal generators.

Four families: exactly sparse spikes, spikes plus a prescribed-energy dense
tail, a flat random simplex profile with no dominant entries, and an
adversarial equal-magnitude family that stresses tie-breaking in the
head/tail split.
"""

from __future__ import annotations

import math

import numpy as np

from .prf import RandomSource

EXACT_SPARSE = "exact-sparse"
SPARSE_PLUS_TAIL = "sparse-plus-tail"
DIRICHLET_FLAT = "dirichlet-flat"
ADVERSARIAL_TIES = "adversarial-ties"

MODELS = (EXACT_SPARSE, SPARSE_PLUS_TAIL, DIRICHLET_FLAT, ADVERSARIAL_TIES)


def gen_signal(
    model: str, n: int, k: int, source: RandomSource, tail_norm: float = 0.3
) -> np.ndarray:
    """A unit-norm signal of the given family; identical per (model, source)."""
    if model not in MODELS:
        raise ValueError(f"unknown signal model {model!r}; pick one of {MODELS}")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    x = np.zeros(n)
    if model == EXACT_SPARSE:
        head = source.derive(1).choice_without_replacement(n, k)
        x[head] = source.derive(2).signs(np.arange(k)) / math.sqrt(k)
    elif model == SPARSE_PLUS_TAIL:
        if not 0 <= tail_norm < 1:
            raise ValueError(f"tail norm must be in [0, 1), got {tail_norm}")
        if k >= n and tail_norm > 0:
            raise ValueError("no coordinates left for the tail")
        head = source.derive(1).choice_without_replacement(n, k)
        x[head] = (
            source.derive(2).signs(np.arange(k))
            * math.sqrt((1.0 - tail_norm**2) / k)
        )
        if tail_norm > 0:
            mask = np.ones(n, dtype=bool)
            mask[head] = False
            tail = source.derive(3).gaussian(np.arange(n - k))
            tail *= tail_norm / np.linalg.norm(tail)
            x[mask] = tail
    elif model == DIRICHLET_FLAT:
        # squared magnitudes uniform on the simplex via normalized exponentials
        u = source.derive(1).uniform(np.arange(n))
        energy = -np.log(u)
        energy /= energy.sum()
        x = np.sqrt(energy) * source.derive(2).signs(np.arange(n))
    else:  # adversarial ties: 2k equal-magnitude spikes, exact boundary case
        count = min(2 * k, n)
        head = source.derive(1).choice_without_replacement(n, count)
        x[head] = source.derive(2).signs(np.arange(count)) / math.sqrt(count)
    norm = np.linalg.norm(x)
    if not math.isclose(norm, 1.0, rel_tol=0, abs_tol=1e-9):
        x /= norm
    return x
