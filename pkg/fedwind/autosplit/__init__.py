from __future__ import annotations

from .silhouette import silhouette, silhouette_samples
from .tree import ClusterNode, ClusterTree, GridResult, auto_split, grid_search, leaf_labels

__all__ = [
    "ClusterNode",
    "ClusterTree",
    "GridResult",
    "auto_split",
    "grid_search",
    "leaf_labels",
    "silhouette",
    "silhouette_samples",
]
