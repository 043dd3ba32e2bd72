"""Seeded Markov chains: heat-bath height dynamics and Metropolis spin flips.

Height updates resample one face from its exact conditional, which has at
most two support points (the face must sit at distance one from every
neighbour).  The sweep kernel is written once as a plain-Python function
over flat arrays; the accelerated engine is the same function pushed
through numba, so both engines consume the identical uniform stream and
produce bit-identical trajectories.  Every site visit consumes exactly
one uniform, including forced moves, which keeps the stream alignment
independent of the configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ._util import make_rng
from .ashkinteller import ATParams
from .lattice import Domain, Face
from .sixvertex import (
    BoundaryCondition,
    HeightFunction,
    Weights,
    is_admissible,
    minimal_extension,
)

__all__ = [
    "RngSeed",
    "ChainState",
    "ATChainState",
    "make_height_chain",
    "heat_bath_height_step",
    "height_conditional",
    "make_at_chain",
    "metropolis_at_step",
    "at_flip_delta",
    "run_chain",
    "run_at_chain",
]

# uniforms are pre-drawn in blocks of roughly this many doubles (~3 MB)
_CHUNK_DOUBLES = 400_000


@dataclass(frozen=True)
class RngSeed:
    seed: int
    stream: int = 0

    def generator(self):
        return make_rng(self.seed, self.stream)


def _as_seed(seed) -> RngSeed:
    if isinstance(seed, RngSeed):
        return seed
    return RngSeed(int(seed), 0)


# -- geometry tables ---------------------------------------------------------


class _HeightTables:
    """Flat-array view of a domain for the sweep kernels."""

    __slots__ = ("nbrs", "vcount", "vcorn", "free", "type_lut")

    def __init__(self, domain: Domain, frozen: set[Face]):
        faces = domain.faces
        index = domain.face_index
        F = len(faces)
        self.nbrs = np.full((F, 4), -1, dtype=np.int64)
        for fi, f in enumerate(faces):
            x, y = f
            for k, g in enumerate(((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))):
                gc = domain.canon_face(g)
                if gc in domain.face_set:
                    self.nbrs[fi, k] = index[gc]
        # per face: incident interior vertices as rows of corner indices
        self.vcount = np.zeros(F, dtype=np.int64)
        self.vcorn = np.full((F, 4, 4), -1, dtype=np.int64)
        for fi, f in enumerate(faces):
            x, y = f
            seen = set()
            for v in ((x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)):
                vc = domain.canon_vertex(v)
                if vc in seen or not domain.is_interior_vertex(vc):
                    continue
                seen.add(vc)
                fsw, fse, fnw, fne = domain.vertex_faces(vc)
                k = self.vcount[fi]
                self.vcorn[fi, k, 0] = index[fsw]
                self.vcorn[fi, k, 1] = index[fse]
                self.vcorn[fi, k, 2] = index[fnw]
                self.vcorn[fi, k, 3] = index[fne]
                self.vcount[fi] = k + 1
        self.free = np.array(
            [index[f] for f in faces if f not in frozen], dtype=np.int64
        )
        # bits (n, e, s, w) packed as n*8 + e*4 + s*2 + w -> type, 0 = invalid
        lut = np.zeros(16, dtype=np.int64)
        lut[0b1111] = 1
        lut[0b0000] = 2
        lut[0b0101] = 3
        lut[0b1010] = 4
        lut[0b1001] = 5
        lut[0b0110] = 6
        self.type_lut = lut


def _weight_table(w: Weights) -> np.ndarray:
    return np.array([0.0, w.a, w.a, w.b, w.b, w.c, w.c])


# -- the kernel --------------------------------------------------------------
#
# One source, two compilations: the builder is called with the identity
# decorator for the python engine and with numba.njit for the fast one.
# Both therefore execute the same arithmetic in the same order.


def _build_kernels(decorate):
    @decorate
    def site_weight(heights, vcount, vcorn, type_lut, wtab, fi):
        total = 1.0
        for k in range(vcount[fi]):
            hsw = heights[vcorn[fi, k, 0]]
            hse = heights[vcorn[fi, k, 1]]
            hnw = heights[vcorn[fi, k, 2]]
            hne = heights[vcorn[fi, k, 3]]
            n = 1 if hnw == hne + 1 else 0
            e = 1 if hne == hse + 1 else 0
            s = 1 if hsw == hse + 1 else 0
            ww = 1 if hnw == hsw + 1 else 0
            total *= wtab[type_lut[n * 8 + e * 4 + s * 2 + ww]]
        return total

    @decorate
    def visit_face(heights, nbrs, vcount, vcorn, type_lut, wtab, fi, u):
        lo = -(1 << 60)
        hi = 1 << 60
        for k in range(4):
            g = nbrs[fi, k]
            if g < 0:
                continue
            v = heights[g]
            if v > lo:
                lo = v
            if v < hi:
                hi = v
        lo, hi = lo - 1, hi + 1  # intersection of the neighbour windows
        if lo == hi:
            heights[fi] = lo
            return
        heights[fi] = lo
        wlo = site_weight(heights, vcount, vcorn, type_lut, wtab, fi)
        heights[fi] = hi
        whi = site_weight(heights, vcount, vcorn, type_lut, wtab, fi)
        if u * (wlo + whi) < whi:
            heights[fi] = hi
        else:
            heights[fi] = lo

    @decorate
    def sweep(heights, free, nbrs, vcount, vcorn, type_lut, wtab, uniforms, t0):
        t = t0
        for i in range(free.shape[0]):
            visit_face(heights, nbrs, vcount, vcorn, type_lut, wtab, free[i], uniforms[t])
            t += 1
        return t

    return sweep, visit_face, site_weight


_sweep_kernel, _visit_face, _site_weight = _build_kernels(lambda f: f)

_jit_cache: dict[str, Callable] = {}


def _jitted_sweep():
    if "sweep" not in _jit_cache:
        import numba

        _jit_cache["sweep"] = _build_kernels(numba.njit(cache=False))[0]
    return _jit_cache["sweep"]


# -- chain state -------------------------------------------------------------


@dataclass
class ChainState:
    """A running height chain; mutate through the step functions only."""

    model: str
    domain: Domain
    weights: Weights
    heights: np.ndarray
    frozen: set[Face]
    tables: _HeightTables
    seed: RngSeed
    rng: object
    step: int = 0
    engine: str = "python"
    _wtab: np.ndarray = None
    _chunk: np.ndarray = None
    _chunk_pos: int = 0

    def height_function(self) -> HeightFunction:
        return HeightFunction(
            self.domain, tuple(int(v) for v in self.heights)
        )

    def height_at(self, f: Face) -> int:
        return int(self.heights[self.domain.face_index[self.domain.canon_face(f)]])


def make_height_chain(
    domain: Domain,
    bc: BoundaryCondition | None,
    w: Weights,
    seed: RngSeed | int = 0,
    engine: str = "auto",
    pin: Face | None = None,
) -> ChainState:
    """Fresh chain at the minimal admissible state.

    With a boundary condition, its support faces stay frozen and the
    start state is the minimal extension.  Without one (wrapped domains),
    a single face is pinned at its checkerboard value to kill the global
    shift mode, and the start state is the checkerboard itself.
    """
    if engine == "auto":
        engine = "numba" if len(domain.faces) >= 64 else "python"
    if engine not in ("python", "numba"):
        raise ValueError(f"unknown engine {engine!r}")
    if bc is not None:
        ok, why = is_admissible(domain, bc)
        if not ok:
            raise ValueError(f"inadmissible boundary condition: {why}")
        start = minimal_extension(domain, bc)
        frozen = set(bc.support)
        heights = np.array([start.at(f) for f in domain.faces], dtype=np.int64)
    else:
        pin = domain.canon_face(pin) if pin is not None else domain.faces[0]
        frozen = {pin}
        heights = np.array([domain.parity(f) for f in domain.faces], dtype=np.int64)
    tables = _HeightTables(domain, frozen)
    if tables.free.size == 0 and bc is None:
        raise ValueError("nothing to sample: every face is frozen")
    sd = _as_seed(seed)
    return ChainState(
        model="sixv-height",
        domain=domain,
        weights=w,
        heights=heights,
        frozen=frozen,
        tables=tables,
        seed=sd,
        rng=sd.generator(),
        engine=engine,
        _wtab=_weight_table(w),
    )


def height_conditional(state: ChainState, face: Face) -> dict[int, float]:
    """Exact single-face conditional given the rest of the configuration."""
    d = state.domain
    fi = d.face_index[d.canon_face(face)]
    t = state.tables
    lo = -(1 << 60)
    hi = 1 << 60
    for k in range(4):
        g = t.nbrs[fi, k]
        if g < 0:
            continue
        v = int(state.heights[g])
        lo = max(lo, v)
        hi = min(hi, v)
    lo, hi = lo - 1, hi + 1
    if d.canon_face(face) in state.frozen:
        return {int(state.heights[fi]): 1.0}
    if lo == hi:
        return {lo: 1.0}
    keep = int(state.heights[fi])
    state.heights[fi] = lo
    wlo = _site_weight(state.heights, t.vcount, t.vcorn, t.type_lut, state._wtab, fi)
    state.heights[fi] = hi
    whi = _site_weight(state.heights, t.vcount, t.vcorn, t.type_lut, state._wtab, fi)
    state.heights[fi] = keep
    z = wlo + whi
    return {lo: wlo / z, hi: whi / z}


def heat_bath_height_step(state: ChainState, face: Face) -> ChainState:
    """Resample one face in place; frozen faces keep their unique value.

    Consumes one uniform regardless of whether the move is forced.
    """
    d = state.domain
    f = d.canon_face(face)
    u = float(state.rng.random())
    if f not in state.frozen:
        t = state.tables
        _visit_face(
            state.heights, t.nbrs, t.vcount, t.vcorn, t.type_lut, state._wtab,
            d.face_index[f], u,
        )
    state.step += 1
    return state


def _run_sweeps(state: ChainState, n_sweeps: int, after_sweep=None) -> None:
    """Advance whole sweeps over the free faces in a fixed scan order."""
    t = state.tables
    n_free = int(t.free.size)
    if n_free == 0 or n_sweeps <= 0:
        return
    kernel = _jitted_sweep() if state.engine == "numba" else _sweep_kernel
    sweeps_per_chunk = max(1, _CHUNK_DOUBLES // n_free)
    done = 0
    while done < n_sweeps:
        if state._chunk is None or state._chunk_pos >= state._chunk.size:
            state._chunk = state.rng.random(sweeps_per_chunk * n_free)
            state._chunk_pos = 0
        pos = kernel(
            state.heights, t.free, t.nbrs, t.vcount, t.vcorn, t.type_lut,
            state._wtab, state._chunk, state._chunk_pos,
        )
        state._chunk_pos = int(pos)
        state.step += 1
        done += 1
        if after_sweep is not None:
            after_sweep(state)


def run_chain(
    domain: Domain,
    bc: BoundaryCondition | None,
    w: Weights,
    sweeps: int,
    burn_in: int = 100,
    thin: int = 1,
    seed: RngSeed | int = 0,
    observables: Mapping[str, Callable[[ChainState], float]] | None = None,
    engine: str = "auto",
    pin: Face | None = None,
) -> tuple[ChainState, dict[str, np.ndarray]]:
    """Burn in, then record observables every `thin` sweeps.

    Deterministic in (seed, engine-independent): the numba and python
    engines replay the same trajectory for the same seed.  Observables
    are pure functions of the chain state.
    """
    if sweeps < 0 or burn_in < 0 or thin < 1:
        raise ValueError("sweeps >= 0, burn_in >= 0, thin >= 1 required")
    state = make_height_chain(domain, bc, w, seed, engine, pin)
    _run_sweeps(state, burn_in)
    names = list(observables or {})
    records: dict[str, list] = {nm: [] for nm in names}
    counter = {"k": 0}

    def collect(st: ChainState) -> None:
        counter["k"] += 1
        if counter["k"] % thin == 0:
            for nm in names:
                records[nm].append(observables[nm](st))

    _run_sweeps(state, sweeps, collect if names else None)
    out = {nm: np.asarray(vals) for nm, vals in records.items()}
    return state, out


# -- Metropolis dynamics for the coupled spin model --------------------------


@dataclass
class ATChainState:
    model: str
    sites: tuple
    bonds: tuple
    params: ATParams
    tau: np.ndarray
    tau_prime: np.ndarray
    free_idx: np.ndarray
    seed: RngSeed
    rng: object
    step: int = 0
    _adj: list = None  # per site: list of neighbouring site indices

    def spin_state(self) -> tuple:
        """(tau, tau') pairs over the free sites, oracle-compatible layout."""
        return tuple(
            (int(self.tau[i]), int(self.tau_prime[i])) for i in self.free_idx
        )


def make_at_chain(
    system,
    p: ATParams,
    pinned: Mapping | None = None,
    seed: RngSeed | int = 0,
) -> ATChainState:
    """All-plus start state; pinned maps site -> (tau, tau') kept fixed."""
    from .ashkinteller import _resolve_system

    sites, bonds = _resolve_system(system)
    pinned = dict(pinned or {})
    index = {s: i for i, s in enumerate(sites)}
    n = len(sites)
    tau = np.ones(n, dtype=np.int64)
    tp = np.ones(n, dtype=np.int64)
    for s, (a, b) in pinned.items():
        tau[index[s]] = a
        tp[index[s]] = b
    adj: list[list[int]] = [[] for _ in range(n)]
    for i, j in bonds:
        adj[index[i]].append(index[j])
        adj[index[j]].append(index[i])
    free_idx = np.array([i for i, s in enumerate(sites) if s not in pinned], dtype=np.int64)
    sd = _as_seed(seed)
    return ATChainState(
        model="at-spin",
        sites=tuple(sites),
        bonds=tuple(bonds),
        params=p,
        tau=tau,
        tau_prime=tp,
        free_idx=free_idx,
        seed=sd,
        rng=sd.generator(),
        _adj=adj,
    )


def at_flip_delta(state: ATChainState, site_idx: int, move: int) -> float:
    """Energy change for flipping tau (0), tau' (1), or both (2) at a site."""
    p = state.params
    t, s = state.tau, state.tau_prime
    dt = -2 * t[site_idx] if move in (0, 2) else 0
    ds = -2 * s[site_idx] if move in (1, 2) else 0
    nt = t[site_idx] + dt
    ns = s[site_idx] + ds
    delta = 0.0
    for j in state._adj[site_idx]:
        old = p.J * (t[site_idx] * t[j] + s[site_idx] * s[j]) \
            + p.U * (t[site_idx] * t[j] * s[site_idx] * s[j])
        new = p.J * (nt * t[j] + ns * s[j]) + p.U * (nt * t[j] * ns * s[j])
        delta += new - old
    return float(delta)


def metropolis_at_step(state: ATChainState, site) -> ATChainState:
    """One proposal at the given site: flip tau, tau', or both, uniformly.

    Consumes exactly two uniforms (move choice, acceptance) per call.
    """
    if not isinstance(site, (int, np.integer)):
        site = state.sites.index(site)
    u_move = float(state.rng.random())
    u_acc = float(state.rng.random())
    move = min(2, int(u_move * 3.0))
    delta = at_flip_delta(state, site, move)
    if u_acc < min(1.0, math.exp(-delta)):
        if move in (0, 2):
            state.tau[site] = -state.tau[site]
        if move in (1, 2):
            state.tau_prime[site] = -state.tau_prime[site]
    state.step += 1
    return state


def run_at_chain(
    system,
    p: ATParams,
    sweeps: int,
    burn_in: int = 100,
    thin: int = 1,
    seed: RngSeed | int = 0,
    pinned: Mapping | None = None,
    observables: Mapping[str, Callable[[ATChainState], object]] | None = None,
) -> tuple[ATChainState, dict[str, list]]:
    """Sequential-scan Metropolis over the free sites."""
    if sweeps < 0 or burn_in < 0 or thin < 1:
        raise ValueError("sweeps >= 0, burn_in >= 0, thin >= 1 required")
    state = make_at_chain(system, p, pinned, seed)
    names = list(observables or {})
    records: dict[str, list] = {nm: [] for nm in names}

    def sweep():
        for i in state.free_idx:
            metropolis_at_step(state, int(i))

    for _ in range(burn_in):
        sweep()
    for k in range(1, sweeps + 1):
        sweep()
        if names and k % thin == 0:
            for nm in names:
                records[nm].append(observables[nm](state))
    return state, records
