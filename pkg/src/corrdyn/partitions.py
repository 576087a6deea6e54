"""Set partitions, bipartitions, dissections and compositions.

Partitions are tuples of blocks, each block a tuple of ground elements.  The
normal form orders blocks by the position of their first element in the
ground sequence and keeps the ground order inside each block.  Ground
elements may be labels or frozen clusters (tuples of labels).
"""

from __future__ import annotations

import math
from functools import lru_cache

from .operators import DomainError


@lru_cache(maxsize=None)
def _index_partitions(n):
    # restricted growth strings, lexicographic
    out = []

    def grow(prefix, top):
        if len(prefix) == n:
            blocks = [[] for _ in range(top + 1)]
            for i, b in enumerate(prefix):
                blocks[b].append(i)
            out.append(tuple(tuple(b) for b in blocks))
            return
        for b in range(top + 2):
            grow(prefix + [b], max(top, b))

    grow([0], 0)
    return tuple(out)


def enumerate_partitions(ground):
    """All set partitions of ``ground`` in normal form, Bell(|ground|) of them."""
    ground = tuple(ground)
    if not ground:
        raise DomainError("cannot partition the empty set")
    if len(set(ground)) != len(ground):
        raise DomainError("ground elements must be distinct")
    return [tuple(tuple(ground[i] for i in block) for block in p)
            for p in _index_partitions(len(ground))]


def enumerate_bipartitions(ground, pinned_first=(), pinned_second=()):
    """Unordered splits of ``ground`` into two nonempty blocks ``(X1, X2)``.

    Elements of ``pinned_first`` must land in ``X1`` and those of
    ``pinned_second`` in ``X2``.  Without pins the block holding
    ``ground[0]`` is reported first.
    """
    ground = tuple(ground)
    p1, p2 = set(pinned_first), set(pinned_second)
    if p1 & p2:
        raise DomainError("pinned sets overlap")
    if not (p1 | p2) <= set(ground):
        raise DomainError("pinned elements must belong to the ground set")
    out = []
    for p in enumerate_partitions(ground):
        if len(p) != 2:
            continue
        a, b = p
        for x1, x2 in ((a, b), (b, a)):
            if p1 <= set(x1) and p2 <= set(x2):
                out.append((x1, x2))
                break
    return out


def enumerate_dissections(ground, max_blocks):
    """Partitions of a linearly ordered set into at most ``max_blocks`` blocks.

    Blocks keep the ambient order; they need not be intervals.
    """
    ground = tuple(ground)
    if not ground:
        raise DomainError("cannot dissect the empty set")
    if max_blocks < 1:
        raise DomainError("max_blocks must be positive")
    return [p for p in enumerate_partitions(ground) if len(p) <= max_blocks]


def mobius_weight(block_count):
    """(-1)^(k-1) (k-1)!  -- the partition-lattice Moebius value to the top."""
    if block_count < 1:
        raise DomainError("block count must be at least 1")
    return (-1) ** (block_count - 1) * math.factorial(block_count - 1)


def declusterize(clustered):
    """Flatten nested clusters, preserving order."""
    flat = []

    def walk(x):
        if isinstance(x, (tuple, list, frozenset, set)):
            for y in x:
                walk(y)
        else:
            flat.append(int(x))

    walk(clustered)
    if len(set(flat)) != len(flat):
        raise DomainError(f"duplicate labels after declusterization: {flat}")
    return tuple(flat)


def weak_compositions(total, parts):
    """Ordered tuples of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in weak_compositions(total - first, parts - 1):
            yield (first,) + rest


def bounded_compositions(limit):
    """Tuples of positive integers whose sum does not exceed ``limit``.

    Includes the empty tuple.
    """
    yield ()
    for first in range(1, limit + 1):
        for rest in bounded_compositions(limit - first):
            yield (first,) + rest


def stirling2(n, k):
    if n == k:
        return 1
    if k == 0 or k > n:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


def bell(n):
    return sum(stirling2(n, k) for k in range(n + 1))


def meet(p, q):
    """Common refinement of two partitions of the same ground set."""
    out = []
    for a in p:
        for b in q:
            sb = set(b)
            block = tuple(x for x in a if x in sb)
            if block:
                out.append(block)
    return tuple(out)
