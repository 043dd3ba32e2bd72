"""Small shared helpers: deterministic RNG streams, union-find, thread cap."""

from __future__ import annotations

import os

import numpy as np

__all__ = ["thread_cap", "make_rng", "UnionFind"]


def thread_cap() -> int:
    """Maximum worker count, honouring the VERTEXLAB_THREADS environment variable.

    Unset, empty, or non-positive values fall back to the CPU count.
    """
    raw = os.environ.get("VERTEXLAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    # One PCG64 stream per (seed, stream) pair; identical pairs replay exactly,
    # distinct stream ids are statistically independent.
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))


class UnionFind:
    """Disjoint sets over range(n) with path halving and min-root union.

    Roots are always the smallest member of their set, so component labels
    are stable regardless of union order.
    """

    __slots__ = ("parent", "n_sets")

    def __init__(self, n: int) -> None:
        self.parent = list(range(n))
        self.n_sets = n

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return i

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        if ri > rj:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.n_sets -= 1
        return True

    def groups(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            out.setdefault(self.find(i), []).append(i)
        return out
