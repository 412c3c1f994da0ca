from __future__ import annotations

from .agreement import adjusted_rand_index, contingency
from .grouping import (
    GroupingResult,
    dense_labels,
    flat_fed_kmeans_grouping,
    geo_grouping,
    grouping_from_labels,
)
from .metrics import R2_FLOOR, MetricsReport, regression_metrics
from .pca import Projection, pca_frame, pca_project
from .report import MethodSummary, comparison_frame, emit_report

__all__ = [
    "GroupingResult",
    "MethodSummary",
    "MetricsReport",
    "Projection",
    "R2_FLOOR",
    "adjusted_rand_index",
    "comparison_frame",
    "contingency",
    "dense_labels",
    "emit_report",
    "flat_fed_kmeans_grouping",
    "geo_grouping",
    "grouping_from_labels",
    "pca_frame",
    "pca_project",
    "regression_metrics",
]
