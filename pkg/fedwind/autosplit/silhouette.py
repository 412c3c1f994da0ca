from __future__ import annotations

import numpy as np

from ..errors import LengthMismatch, SingleCluster
from ..features.scaling import FeatureMatrix
from ..fedcluster.kmeans import as_rows, sq_distances

__all__ = ["silhouette", "silhouette_samples"]


def silhouette_samples(matrix: FeatureMatrix | np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-sample silhouette with Euclidean distance.

    Members of singleton clusters score 0, as does a sample with a = b = 0.
    """
    rows = as_rows(matrix)
    labels = np.asarray(labels)
    if len(labels) != len(rows):
        raise LengthMismatch(f"{len(labels)} labels for {len(rows)} rows")
    uniq, inv = np.unique(labels, return_inverse=True)
    if len(uniq) < 2:
        raise SingleCluster("silhouette needs at least two distinct labels")

    dist = np.sqrt(sq_distances(rows, rows))
    onehot = (inv[:, None] == np.arange(len(uniq))[None, :]).astype(np.float64)
    sums = dist @ onehot
    counts = onehot.sum(axis=0)
    idx = np.arange(len(rows))
    own = counts[inv]

    a = sums[idx, inv] / np.maximum(own - 1.0, 1.0)
    other = sums / counts[None, :]
    other[idx, inv] = np.inf
    b = other.min(axis=1)

    denom = np.maximum(a, b)
    s = np.zeros(len(rows))
    ok = (own > 1) & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]
    return s


def silhouette(matrix: FeatureMatrix | np.ndarray, labels: np.ndarray) -> float:
    return float(silhouette_samples(matrix, labels).mean())
