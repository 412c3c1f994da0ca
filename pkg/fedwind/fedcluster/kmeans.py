from __future__ import annotations

"""Centralized k-means pieces shared with the federated path.

Squared Euclidean distance everywhere; the nearest centre wins and ties go to
the lowest centre index; a cluster left empty keeps its previous centre.
"""

import logging

import numpy as np

from ..errors import InvalidParams
from ..features.scaling import FeatureMatrix
from .models import CentroidSet

log = logging.getLogger(__name__)

__all__ = [
    "as_rows",
    "sq_distances",
    "assign",
    "inertia",
    "cluster_means",
    "kmeanspp_init",
    "lloyd_update",
    "centralized_lloyd",
    "centralized_kmeans",
]


def as_rows(matrix: FeatureMatrix | np.ndarray) -> np.ndarray:
    if isinstance(matrix, FeatureMatrix):
        rows = matrix.rows
    else:
        rows = np.asarray(matrix, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[:, None]
    return rows


def sq_distances(rows: np.ndarray, centres: np.ndarray) -> np.ndarray:
    diff = rows[:, None, :] - centres[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def assign(matrix: FeatureMatrix | np.ndarray, centres: CentroidSet | np.ndarray) -> np.ndarray:
    c = centres.centres if isinstance(centres, CentroidSet) else np.asarray(centres, np.float64)
    # np.argmin returns the first minimum: lowest index on ties
    return np.argmin(sq_distances(as_rows(matrix), c), axis=1)


def inertia(matrix: FeatureMatrix | np.ndarray, centres: CentroidSet | np.ndarray) -> float:
    c = centres.centres if isinstance(centres, CentroidSet) else np.asarray(centres, np.float64)
    return float(sq_distances(as_rows(matrix), c).min(axis=1).sum())


def cluster_means(rows: np.ndarray, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster means (zeros where empty) and counts."""
    means = np.zeros((k, rows.shape[1]))
    counts = np.zeros(k, dtype=np.int64)
    for j in range(k):
        members = rows[labels == j]
        counts[j] = len(members)
        if counts[j]:
            means[j] = members.mean(axis=0)
    return means, counts


def _d2_pick(rows: np.ndarray, chosen: list[int], d2: np.ndarray, rng: np.random.Generator) -> int:
    total = d2.sum()
    if total > 0:
        return int(rng.choice(len(rows), p=d2 / total))
    free = np.setdiff1d(np.arange(len(rows)), chosen)
    return int(free[rng.integers(len(free))])


def kmeanspp_init(
    matrix: FeatureMatrix | np.ndarray, k: int, rng: np.random.Generator
) -> CentroidSet:
    """k-means++ D^2 seeding over all rows (uniform over unchosen rows if all D^2 vanish)."""
    rows = as_rows(matrix)
    n = len(rows)
    if not 1 <= k <= n:
        raise InvalidParams(f"k must lie in [1, {n}], got {k}")
    chosen = [int(rng.integers(n))]
    d2 = sq_distances(rows, rows[chosen]).min(axis=1)
    for _ in range(1, k):
        nxt = _d2_pick(rows, chosen, d2, rng)
        chosen.append(nxt)
        np.minimum(d2, sq_distances(rows, rows[[nxt]])[:, 0], out=d2)
    return CentroidSet(rows[chosen].copy())


def lloyd_update(rows: np.ndarray, centres: np.ndarray) -> np.ndarray:
    labels = np.argmin(sq_distances(rows, centres), axis=1)
    means, counts = cluster_means(rows, labels, len(centres))
    return np.where((counts > 0)[:, None], means, centres)


def centralized_lloyd(
    matrix: FeatureMatrix | np.ndarray, init: CentroidSet | np.ndarray, iters: int
) -> tuple[np.ndarray, CentroidSet]:
    """``iters`` Lloyd iterations from ``init``, then a final assignment."""
    rows = as_rows(matrix)
    c = init.centres if isinstance(init, CentroidSet) else np.asarray(init, dtype=np.float64)
    for _ in range(iters):
        c = lloyd_update(rows, c)
    return assign(rows, c), CentroidSet(c)


def centralized_kmeans(
    matrix: FeatureMatrix | np.ndarray,
    k: int,
    rng: np.random.Generator,
    *,
    n_init: int = 10,
    max_iter: int = 100,
) -> tuple[np.ndarray, CentroidSet, float]:
    """Best-inertia result of ``n_init`` k-means++ restarts run to convergence."""
    rows = as_rows(matrix)
    best: tuple[np.ndarray, CentroidSet, float] | None = None
    for _ in range(n_init):
        c = kmeanspp_init(rows, k, rng).centres
        labels = assign(rows, c)
        for _ in range(max_iter):
            c = lloyd_update(rows, c)
            new_labels = assign(rows, c)
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
        score = inertia(rows, c)
        if best is None or score < best[2]:
            best = (labels, CentroidSet(c), score)
    assert best is not None
    return best
