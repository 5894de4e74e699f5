"""Integer partitions indexing the zonal/Jack series terms.

A partition is stored as a plain tuple of non-increasing positive ints; the
empty tuple is the unique partition of 0.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator, Sequence

Partition = tuple[int, ...]

__all__ = [
    "Partition",
    "as_partition",
    "conjugate",
    "partitions_of",
    "partitions_upto",
    "weight",
]


def as_partition(parts: Sequence[int]) -> Partition:
    """Validate ``parts`` and return it as a canonical partition tuple.

    Trailing zeros are dropped, so ``(2, 1, 0)`` and ``(2, 1)`` are the same
    partition.
    """
    if any(int(v) != v for v in parts):
        raise ValueError(f"partition parts must be integers, got {tuple(parts)}")
    p = tuple(int(v) for v in parts)
    while p and p[-1] == 0:
        p = p[:-1]
    if any(v <= 0 for v in p):
        raise ValueError(f"partition parts must be positive, got {tuple(parts)}")
    if any(p[i] < p[i + 1] for i in range(len(p) - 1)):
        raise ValueError(f"partition parts must be non-increasing, got {tuple(parts)}")
    return p


def weight(p: Partition) -> int:
    return sum(p)


def _descend(k: int, max_parts: int, largest: int) -> Iterator[Partition]:
    if k == 0:
        yield ()
        return
    if max_parts == 0:
        return
    for first in range(min(k, largest), 0, -1):
        # the remaining parts cannot absorb what is left
        if first * max_parts < k:
            break
        for rest in _descend(k - first, max_parts - 1, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def partitions_of(k: int, max_parts: int) -> tuple[Partition, ...]:
    """All partitions of ``k`` with at most ``max_parts`` parts.

    Returned in descending lexicographic order, e.g. ``(4,), (3, 1), (2, 2),
    (2, 1, 1), (1, 1, 1, 1)`` for ``k = max_parts = 4``.
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if max_parts < 1:
        raise ValueError(f"max_parts must be >= 1, got {max_parts}")
    return tuple(_descend(k, max_parts, k))


def partitions_upto(max_degree: int, max_parts: int) -> list[Partition]:
    """Every partition of weight ``0..max_degree``, weight-ascending."""
    out: list[Partition] = []
    for k in range(max_degree + 1):
        out.extend(partitions_of(k, max_parts))
    return out


def conjugate(p: Partition) -> Partition:
    """Transpose of the Young diagram of ``p``."""
    if not p:
        return ()
    return tuple(sum(1 for part in p if part > j) for j in range(p[0]))
