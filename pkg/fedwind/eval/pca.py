from __future__ import annotations

"""Principal components of the behaviour feature space, for plotting."""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import DimsTooLarge, InvalidParams
from ..features.scaling import FeatureMatrix
from ..fedcluster.kmeans import as_rows

__all__ = ["Projection", "pca_project", "pca_frame"]


@dataclass(frozen=True)
class Projection:
    rows: np.ndarray  # (N, dims)
    explained_variance_ratio: np.ndarray  # (dims,)
    components: np.ndarray  # (dims, d), orthonormal rows
    eigenvalues: np.ndarray  # (d,), descending
    mean: np.ndarray


def pca_project(matrix: FeatureMatrix | np.ndarray, dims: int = 3) -> Projection:
    """Project onto the top ``dims`` eigenvectors of the population covariance.

    Each component is signed so its largest-magnitude loading is positive.
    """
    x = as_rows(matrix)
    d = x.shape[1]
    if dims < 1:
        raise InvalidParams("dims must be >= 1")
    if dims > d:
        raise DimsTooLarge(f"dims={dims} exceeds feature dimension {d}")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / len(x)
    values, vectors = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1]
    values = np.clip(values[order], 0.0, None)
    vectors = vectors[:, order].T
    for comp in vectors:
        if comp[np.argmax(np.abs(comp))] < 0:
            comp *= -1.0
    total = values.sum()
    ratios = values[:dims] / total if total > 0 else np.zeros(dims)
    comps = vectors[:dims]
    return Projection(
        rows=centred @ comps.T,
        explained_variance_ratio=ratios,
        components=comps,
        eigenvalues=values,
        mean=mean,
    )


def pca_frame(rows: np.ndarray, ids: list[str], labels: np.ndarray) -> pd.DataFrame:
    """``id,pc1..pcN,cluster`` table of projected rows."""
    frame = pd.DataFrame({"id": ids})
    for j in range(rows.shape[1]):
        frame[f"pc{j + 1}"] = rows[:, j]
    frame["cluster"] = np.asarray(labels, dtype=np.int64)
    return frame
