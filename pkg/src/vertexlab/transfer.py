"""Row-to-row transfer operator for x-wrapped six-vertex domains.

The state of a row is the N-bit tuple of vertical-edge arrows below a
vertex row (bit 1 = up).  Crossing one vertex row multiplies by

    T[u, v] = Tr prod_i A^(u_i, v_i),

where the 2x2 matrices act on the horizontal-arrow bit flowing through
the row (trace = periodic horizontal closure) and are read off the vertex
type table:

    A^(1,1) = [[b, 0], [0, a]]      (l=r=0 -> type 4, l=r=1 -> type 1)
    A^(0,0) = [[a, 0], [0, b]]      (l=r=0 -> type 2, l=r=1 -> type 3)
    A^(0,1) = [[0, 0], [c, 0]]      (l=1, r=0 -> type 5)
    A^(1,0) = [[0, c], [0, 0]]      (l=0, r=1 -> type 6)

The ice rule makes T vanish unless u and v carry the same up-arrow
count, so T is block diagonal over Hamming weight; the weight-k block is
exactly the fixed-unbalance sector with per-row flux 2k - N.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .sixvertex import Weights

__all__ = [
    "transfer_matrix",
    "sector_states",
    "sector_block",
    "torus_log_partition",
    "cylinder_log_partition",
    "sector_free_energy",
    "transfer_free_energy",
]

MAX_FULL_N = 12
MAX_BLOCK_DIM = 5000


def _vertex_matrices(w: Weights) -> dict[tuple[int, int], np.ndarray]:
    a, b, c = w.a, w.b, w.c
    return {
        (1, 1): np.array([[b, 0.0], [0.0, a]]),
        (0, 0): np.array([[a, 0.0], [0.0, b]]),
        (0, 1): np.array([[0.0, 0.0], [c, 0.0]]),
        (1, 0): np.array([[0.0, c], [0.0, 0.0]]),
    }


def _entry(u: tuple[int, ...], v: tuple[int, ...], mats) -> float:
    m = np.eye(2)
    for ui, vi in zip(u, v):
        m = m @ mats[(ui, vi)]
    return float(np.trace(m))


def sector_states(N: int, k: int) -> list[tuple[int, ...]]:
    """All N-bit rows with k up arrows, in deterministic order."""
    if not 0 <= k <= N:
        raise ValueError(f"up-arrow count {k} out of range for N={N}")
    states = []
    for pos in combinations(range(N), k):
        bits = [0] * N
        for p in pos:
            bits[p] = 1
        states.append(tuple(bits))
    return states


def sector_block(N: int, k: int, w: Weights) -> np.ndarray:
    """The weight-k block of the transfer matrix."""
    if N % 2 != 0:
        raise ValueError("circumference N must be even")
    states = sector_states(N, k)
    if len(states) > MAX_BLOCK_DIM:
        raise ValueError(
            f"sector block dimension {len(states)} exceeds guard {MAX_BLOCK_DIM}"
        )
    mats = _vertex_matrices(w)
    T = np.empty((len(states), len(states)))
    for i, u in enumerate(states):
        for j, v in enumerate(states):
            T[i, j] = _entry(u, v, mats)
    return T


def transfer_matrix(N: int, w: Weights) -> np.ndarray:
    """Full 2^N transfer matrix (row state = vertical-edge bits, LSB = i=0)."""
    if N % 2 != 0:
        raise ValueError("circumference N must be even")
    if N > MAX_FULL_N:
        raise ValueError(f"full transfer matrix guarded at N <= {MAX_FULL_N}")
    mats = _vertex_matrices(w)
    dim = 1 << N
    T = np.zeros((dim, dim))
    unpack = [tuple((s >> i) & 1 for i in range(N)) for s in range(dim)]
    for si, u in enumerate(unpack):
        ku = sum(u)
        for sj, v in enumerate(unpack):
            if sum(v) != ku:
                continue  # flux conservation: off-block entries vanish
            T[si, sj] = _entry(u, v, mats)
    return T


def _log_trace_power(T: np.ndarray, M: int) -> float:
    """log Tr(T^M) for a nonnegative matrix, with overflow-safe scaling."""
    s = float(T.max())
    if s <= 0.0:
        return float("-inf")
    P = np.linalg.matrix_power(T / s, M)
    tr = float(np.trace(P))
    if tr <= 0.0:
        return float("-inf")
    return M * math.log(s) + math.log(tr)


def _log_grand_sum_power(T: np.ndarray, M: int) -> float:
    """log of 1^T T^M 1 with the same scaling trick."""
    if M == 0:
        return math.log(T.shape[0])
    s = float(T.max())
    if s <= 0.0:
        return float("-inf")
    P = np.linalg.matrix_power(T / s, M)
    total = float(P.sum())
    if total <= 0.0:
        return float("-inf")
    return M * math.log(s) + math.log(total)


def torus_log_partition(N: int, M: int, w: Weights, k: int | None = None) -> float:
    """log Z on the N x M torus; k restricts to the up-count sector."""
    if M < 1:
        raise ValueError("need at least one row")
    if k is not None:
        return _log_trace_power(sector_block(N, k, w), M)
    if N <= MAX_FULL_N:
        return _log_trace_power(transfer_matrix(N, w), M)
    logs = [_log_trace_power(sector_block(N, kk, w), M) for kk in range(N + 1)]
    finite = [x for x in logs if x != float("-inf")]
    if not finite:
        return float("-inf")
    m = max(finite)
    return m + math.log(sum(math.exp(x - m) for x in finite))


def cylinder_log_partition(N: int, M: int, w: Weights, k: int | None = None) -> float:
    """log Z on the open-ended cylinder with M face rows (free ends).

    M face rows hold M vertical-edge rows linked by M-1 interior vertex
    rows, so Z = 1^T T^{M-1} 1 (sector-blocked when *k* is given).
    """
    if M < 1:
        raise ValueError("need at least one row")
    if k is not None:
        return _log_grand_sum_power(sector_block(N, k, w), M - 1)
    if N <= MAX_FULL_N:
        return _log_grand_sum_power(transfer_matrix(N, w), M - 1)
    logs = [_log_grand_sum_power(sector_block(N, kk, w), M - 1) for kk in range(N + 1)]
    finite = [x for x in logs if x != float("-inf")]
    if not finite:
        return float("-inf")
    m = max(finite)
    return m + math.log(sum(math.exp(x - m) for x in finite))


def sector_free_energy(N: int, w: Weights, k: int) -> float:
    """Per-site free energy of the sector, M -> infinity: log lambda_max / N."""
    T = sector_block(N, k, w)
    lam = np.linalg.eigvals(T)
    top = float(np.max(lam.real))
    if top <= 0.0:
        return float("-inf")
    return math.log(top) / N


def transfer_free_energy(N: int, M: int, w: Weights, sector=None) -> float:
    """(N*M)^-1 log Z of the N x M cylinder, optionally sector-restricted.

    *sector* may be a SectorSpec, an explicit up-arrow count, or None for
    the unrestricted sum.
    """
    from .sixvertex import SectorSpec

    if isinstance(sector, SectorSpec):
        k: int | None = sector.up_count(N)
    else:
        k = sector
    return cylinder_log_partition(N, M, w, k) / (N * M)
