from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np

from .windows import ClientDataset

log = logging.getLogger(__name__)

__all__ = ["LOW_MAX", "LOW_STD", "uninformative_reason", "filter_uninformative_clients"]

LOW_MAX = 0.1
LOW_STD = 0.05


def uninformative_reason(values: np.ndarray) -> str | None:
    """Why a normalized validation target series carries no signal, or None."""
    y = np.asarray(values, dtype=np.float64)
    if len(y) == 0:
        return None
    if np.all(y == 0):
        return "all_zero"
    if y.max() < LOW_MAX:
        return "low_max"
    if y.std() < LOW_STD:
        return "low_std"
    return None


def filter_uninformative_clients(
    clients: Sequence[ClientDataset],
) -> tuple[list[ClientDataset], list[tuple[ClientDataset, str]]]:
    """Split clients into kept and excluded-with-reason, preserving order.

    Clients without validation windows are kept.
    """
    kept: list[ClientDataset] = []
    excluded: list[tuple[ClientDataset, str]] = []
    for client in clients:
        reason = uninformative_reason(client.validation.target_series())
        if reason is None:
            kept.append(client)
        else:
            log.info("Excluding client %s from training: %s", client.turbine_id, reason)
            excluded.append((client, reason))
    return kept, excluded
