from __future__ import annotations

import numpy as np

from ..errors import LengthMismatch

__all__ = ["contingency", "adjusted_rand_index"]


def contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Counts of samples per (label in a, label in b) pair."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if len(a) != len(b):
        raise LengthMismatch(f"labelings of length {len(a)} and {len(b)}")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max(initial=-1) + 1, ib.max(initial=-1) + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _pairs(x: np.ndarray) -> float:
    x = x.astype(np.float64)
    return float((x * (x - 1.0) / 2.0).sum())


def adjusted_rand_index(a: np.ndarray, b: np.ndarray) -> float:
    """Pair-counting agreement of two labelings, corrected for chance.

    Returns 1.0 when the expected and maximal index coincide (both labelings
    trivial, or identical all-singleton partitions).
    """
    table = contingency(a, b)
    n = int(table.sum())
    if n < 2:
        return 1.0
    index = _pairs(table)
    rows = _pairs(table.sum(axis=1))
    cols = _pairs(table.sum(axis=0))
    expected = rows * cols / (n * (n - 1) / 2.0)
    maximum = (rows + cols) / 2.0
    if maximum == expected:
        return 1.0
    return float((index - expected) / (maximum - expected))
