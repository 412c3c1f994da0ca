"""Seeded random streams.

All randomness flows through :class:`numpy.random.Generator`. Child streams
are derived from an integer base plus integer keys, so a stream depends only
on *what* it is for (node path, grid cell, client index) and never on the
order in which work is scheduled.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParams

__all__ = ["derive", "draw_base", "resolve"]


def draw_base(rng: np.random.Generator) -> int:
    """Consume one value from ``rng`` and return it as a base for :func:`derive`."""
    return int(rng.integers(0, 2**63 - 1))


def derive(base: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(base), *(int(k) for k in keys)]))


def resolve(rng: np.random.Generator | None, seed: int | None, what: str) -> np.random.Generator:
    """``rng`` when given, else a fresh stream from a config's own ``seed``."""
    if rng is not None:
        return rng
    if seed is None:
        raise InvalidParams(f"{what}: pass an rng or set seed in its config")
    return np.random.default_rng(seed)
