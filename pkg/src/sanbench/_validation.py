"""Input validation helpers shared by the estimators and the plain functions."""
from __future__ import annotations

import numbers
from collections.abc import Mapping

import numpy as np


class InvariantError(RuntimeError):
    """A structural invariant (connectivity, family, BST order) was broken."""


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_random_state(seed) -> np.random.Generator:
    """Return a PCG64-backed generator for ``seed`` (int, SeedSequence or Generator)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if seed is None:
        raise ValueError("an explicit seed is required for reproducible runs")
    return np.random.Generator(np.random.PCG64(int(seed)))


def check_weights(weights, n: int | None = None) -> np.ndarray:
    """Normalise key weights to a dense float array indexed by key - 1.

    ``weights`` is either a mapping key -> weight over keys 1..n or a
    sequence whose i-th entry is the weight of key i + 1.  Keys missing
    from a mapping get weight zero; explicit weights must be positive.
    """
    if isinstance(weights, Mapping):
        if not weights:
            raise ValueError("at least one weight is required")
        keys = [int(k) for k in weights]
        if min(keys) < 1:
            raise ValueError("keys must be >= 1")
        size = max(keys) if n is None else n
        if max(keys) > size:
            raise ValueError(f"key {max(keys)} exceeds n={size}")
        out = np.zeros(size, dtype=float)
        for k, w in weights.items():
            w = float(w)
            if not np.isfinite(w) or w <= 0:
                raise ValueError(f"weight of key {k} must be positive, got {w}")
            out[int(k) - 1] = w
        return out
    arr = np.asarray(weights, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("weights must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError("weights must be positive")
    if n is not None and arr.size != n:
        raise ValueError(f"expected {n} weights, got {arr.size}")
    return arr


def check_stochastic(matrix, name: str = "matrix", atol: float = 1e-9) -> np.ndarray:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim == 1:
        rows = arr[None, :]
    elif arr.ndim == 2:
        rows = arr
    else:
        raise ValueError(f"{name} must be 1-d or 2-d")
    if np.any(rows < 0) or not np.all(np.isfinite(rows)):
        raise ValueError(f"{name} has negative or non-finite entries")
    bad = np.abs(rows.sum(axis=1) - 1.0) > atol
    if np.any(bad):
        raise ValueError(f"{name}: row {int(np.argmax(bad))} does not sum to 1")
    return arr
