"""Brute-force reference engines, deliberately independent of the fast paths.

Everything here recomputes model weights from first principles with naive
nested loops and plain floats: the height-to-vertex-class table is derived
from inflow sets rather than the bit-pattern table, clusters are counted by
label propagation rather than union-find, and partition sums are plain
Python arithmetic.  A bug shared between this module and the main engines
would have to be a bug in the conventions themselves, which is exactly what
the cross-engine regression suite is meant to expose.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .lattice import Domain, Face, Vertex

__all__ = [
    "ExactDistribution",
    "naive_vertex_class",
    "naive_corner_class",
    "naive_component_count",
    "sixv_height_distribution",
    "sixv_ice_distribution",
    "at_distribution",
    "grcm_distribution",
    "cubic_distribution",
    "exact_distribution",
    "exact_event_prob",
]


@dataclass(frozen=True)
class ExactDistribution:
    """Fully enumerated support with normalized probabilities."""

    model: str
    digest: str
    support: tuple
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        total = sum(self.probs)
        if abs(total - 1.0) > 1e-12:
            raise AssertionError(f"probabilities sum to {total}, not 1")
        if len(set(map(repr, self.support))) != len(self.support):
            raise AssertionError("duplicate states in support")

    def prob_of(self, predicate: Callable) -> float:
        return sum(p for s, p in zip(self.support, self.probs) if predicate(s))

    def as_dict(self) -> dict:
        return dict(zip(self.support, self.probs))

    @property
    def log_probs(self) -> tuple[float, ...]:
        return tuple(math.log(p) if p > 0 else float("-inf") for p in self.probs)


def _digest(model: str, **params) -> str:
    blob = model + "|" + "|".join(f"{k}={params[k]!r}" for k in sorted(params))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _normalize(model: str, digest: str, support: list, weights: list[float]) -> ExactDistribution:
    z = sum(weights)
    if z <= 0:
        raise ValueError("all enumerated weights vanish")
    return ExactDistribution(model, digest, tuple(support), tuple(w / z for w in weights))


# -- six-vertex --------------------------------------------------------------


def naive_vertex_class(n: int, e: int, s: int, w: int) -> str:
    """Class from the inflow set of a vertex (bits 1 = north/east).

    An up arrow on the south edge flows in, on the north edge flows out;
    an east arrow on the west edge flows in, on the east edge flows out.
    Straight-through flow (in on one axis stays on it) never happens for
    ice vertices, so the class is decided by which pair flows in:
    opposite-corner pairs {W,S}/{E,N} are a, the mixed straight pairs
    {W,N}/{E,S} are b, and the same-axis pairs {W,E}/{N,S} are c.
    """
    inflow = set()
    if s == 1:
        inflow.add("S")
    if n == 0:
        inflow.add("N")
    if w == 1:
        inflow.add("W")
    if e == 0:
        inflow.add("E")
    if len(inflow) != 2:
        raise ValueError(f"not an ice vertex: inflow {sorted(inflow)}")
    if inflow in ({"W", "S"}, {"E", "N"}):
        return "a"
    if inflow in ({"W", "N"}, {"E", "S"}):
        return "b"
    return "c"


# Normalized corner heights (sw, se, ne, nw) minus their minimum, derived by
# hand from "left of the arrow is higher": e.g. all arrows north/east gives
# sw=se+1, nw=ne+1, nw=sw+1, ne=se+1, i.e. pattern (1,0,1,2) around from sw.
_CORNER_CLASS: dict[tuple[int, int, int, int], str] = {
    (1, 0, 1, 2): "a",  # type 1
    (1, 2, 1, 0): "a",  # type 2
    (0, 1, 2, 1): "b",  # type 3
    (2, 1, 0, 1): "b",  # type 4
    (0, 1, 0, 1): "c",  # type 5
    (1, 0, 1, 0): "c",  # type 6
}


def naive_corner_class(sw: int, se: int, ne: int, nw: int) -> str:
    m = min(sw, se, ne, nw)
    key = (sw - m, se - m, ne - m, nw - m)
    try:
        return _CORNER_CLASS[key]
    except KeyError:
        raise ValueError(f"corner heights {(sw, se, ne, nw)} do not encode an ice vertex")


def _naive_height_weight(
    domain: Domain, values: Mapping[Face, int], a: float, b: float, c: float
) -> float:
    w = 1.0
    for v in domain.interior_vertices:
        fsw, fse, fnw, fne = domain.vertex_faces(v)
        cls = naive_corner_class(values[fsw], values[fse], values[fne], values[fnw])
        w *= {"a": a, "b": b, "c": c}[cls]
    return w


def _naive_enumerate_heights(
    domain: Domain, bc: Mapping[Face, int]
) -> list[dict[Face, int]]:
    fixed = {domain.canon_face(f): v for f, v in bc.items()}
    free = [f for f in domain.faces if f not in fixed]

    # Per-face candidate values from plain distance bounds; no shared
    # envelope code, just BFS distances off the lattice object.
    ranges: dict[Face, list[int]] = {}
    for f in free:
        lo, hi = -(10**9), 10**9
        for g, xi in fixed.items():
            d = domain.distances_from(g)[f]
            lo = max(lo, xi - d)
            hi = min(hi, xi + d)
        if lo > hi:
            return []
        ranges[f] = [v for v in range(lo, hi + 1) if (v - lo) % 2 == 0]

    pairs = []
    face_list = list(fixed) + free
    seen = set()
    for f in face_list:
        for g in domain.neighbors(f, "edge"):
            key = tuple(sorted((f, g)))
            if key not in seen:
                seen.add(key)
                pairs.append((f, g))

    out = []
    for combo in itertools.product(*(ranges[f] for f in free)):
        values = dict(fixed)
        values.update(zip(free, combo))
        if all(abs(values[f] - values[g]) == 1 for f, g in pairs):
            out.append(values)
    return out


def sixv_height_distribution(
    domain: Domain, bc: Mapping[Face, int], a: float, b: float, c: float
) -> ExactDistribution:
    digest = _digest("sixv-heights", shape=domain.shape, params=domain.params,
                     bc=sorted(bc.items()), a=a, b=b, c=c)
    support, weights = [], []
    for values in _naive_enumerate_heights(domain, bc):
        support.append(tuple(values[f] for f in domain.faces))
        weights.append(_naive_height_weight(domain, values, a, b, c))
    return _normalize("sixv-heights", digest, support, weights)


def sixv_ice_distribution(
    domain: Domain, a: float, b: float, c: float, flux: int | None = None
) -> ExactDistribution:
    """All ice configs by raw product over interior-edge bits (<= 20 edges)."""
    edges = domain.interior_edges
    if len(edges) > 20:
        raise ValueError(f"oracle ice enumeration capped at 20 edges, got {len(edges)}")
    digest = _digest("sixv-ice", shape=domain.shape, params=domain.params,
                     a=a, b=b, c=c, flux=flux)
    support, weights = [], []
    for bits in itertools.product((0, 1), repeat=len(edges)):
        lut = dict(zip(edges, bits))
        ok = True
        weight = 1.0
        for v in domain.interior_vertices:
            en, ee, es, ew = domain.vertex_edges(v)
            try:
                cls = naive_vertex_class(lut[en], lut[ee], lut[es], lut[ew])
            except ValueError:
                ok = False
                break
            weight *= {"a": a, "b": b, "c": c}[cls]
        if not ok:
            continue
        if flux is not None and domain.period_x is not None:
            row0 = sum(
                2 * lut[domain.canon_edge(("v", i, 0))] - 1
                for i in range(domain.period_x)
            )
            if row0 != flux:
                continue
        support.append(bits)
        weights.append(weight)
    return _normalize("sixv-ice", digest, support, weights)


# -- Ashkin-Teller -----------------------------------------------------------


def at_distribution(
    sites: Sequence, bonds: Sequence[tuple], J: float, U: float,
    pinned: Mapping | None = None,
) -> ExactDistribution:
    """Two coupled sign fields with energy summed bond by bond.

    *pinned* maps site -> (tau, tau_prime) for frozen boundary spins; the
    support covers the free sites only, each state a tuple of (tau, tau')
    pairs in site order.
    """
    pinned = dict(pinned or {})
    free = [s for s in sites if s not in pinned]
    if len(free) > 12:
        raise ValueError(f"oracle AT enumeration capped at 12 free sites, got {len(free)}")
    digest = _digest("at", sites=list(sites), bonds=list(bonds), J=J, U=U,
                     pinned=sorted(map(repr, pinned.items())))
    support, weights = [], []
    for tau_combo in itertools.product((-1, 1), repeat=len(free)):
        for tp_combo in itertools.product((-1, 1), repeat=len(free)):
            tau = {s: tt[0] for s, tt in pinned.items()}
            tp = {s: tt[1] for s, tt in pinned.items()}
            tau.update(zip(free, tau_combo))
            tp.update(zip(free, tp_combo))
            h = 0.0
            for (i, j) in bonds:
                h += J * (tau[i] * tau[j] + tp[i] * tp[j])
                h += U * (tau[i] * tau[j] * tp[i] * tp[j])
            support.append(tuple(zip(tau_combo, tp_combo)))
            weights.append(math.exp(-h))
    return _normalize("at", digest, support, weights)


# -- generalized random-cluster ----------------------------------------------


def naive_component_count(nodes: Iterable, edges: Iterable[tuple]) -> int:
    """Connected components by label propagation to the minimum label."""
    labels = {n: i for i, n in enumerate(sorted(nodes, key=repr))}
    edge_list = [tuple(e) for e in edges]
    changed = True
    while changed:
        changed = False
        for i, j in edge_list:
            li, lj = labels[i], labels[j]
            if li != lj:
                m = min(li, lj)
                labels[i] = labels[j] = m
                changed = True
    return len(set(labels.values()))


def grcm_distribution(
    sites: Sequence,
    bonds: Sequence[tuple],
    channel_weights: Mapping[tuple[int, int], float] | Sequence[Mapping[tuple[int, int], float]],
    q_sigma: float,
    q_tau: float,
    wired: Iterable = (),
) -> ExactDistribution:
    """Exact two-species bond measure on a tiny graph.

    channel_weights maps (n_sigma, n_tau) to a weight, either one mapping
    for all bonds or one per bond.  *wired* lists sites glued into a single
    boundary blob for the cluster counts (the ++ convention).
    """
    bonds = [tuple(b) for b in bonds]
    if len(bonds) > 10:
        raise ValueError(f"oracle GRCM enumeration capped at 10 bonds, got {len(bonds)}")
    if isinstance(channel_weights, Mapping):
        per_bond = [dict(channel_weights)] * len(bonds)
    else:
        per_bond = [dict(cw) for cw in channel_weights]
        if len(per_bond) != len(bonds):
            raise ValueError("need one channel table per bond")
    wired = set(wired)
    digest = _digest("grcm", sites=list(map(repr, sites)), bonds=list(map(repr, bonds)),
                     channels=[sorted(cw.items()) for cw in per_bond],
                     q_sigma=q_sigma, q_tau=q_tau, wired=sorted(map(repr, wired)))

    def count(open_bonds: list[tuple]) -> int:
        edges = list(open_bonds)
        if wired:
            blob = "__wired__"
            nodes = list(sites) + [blob]
            edges += [(s, blob) for s in wired]
        else:
            nodes = list(sites)
        return naive_component_count(nodes, edges)

    support, weights = [], []
    for combo in itertools.product(((0, 0), (1, 0), (0, 1), (1, 1)), repeat=len(bonds)):
        lam = 1.0
        for cw, ch in zip(per_bond, combo):
            lam *= cw[ch]
        if lam == 0.0:
            continue
        ns = count([b for b, ch in zip(bonds, combo) if ch[0] == 1])
        nt = count([b for b, ch in zip(bonds, combo) if ch[1] == 1])
        support.append(combo)
        weights.append(lam * (q_sigma**ns) * (q_tau**nt))
    return _normalize("grcm", digest, support, weights)


# -- cubic model -------------------------------------------------------------


def cubic_distribution(
    sites: Sequence,
    bonds: Sequence[tuple],
    j_sigma: float,
    j_tau: float,
    j_sigmatau: float,
    q_sigma: int,
    q_tau: int,
) -> ExactDistribution:
    """Nearest-neighbour model on {1..q_sigma} x {1..q_tau} alphabets."""
    bonds = [tuple(b) for b in bonds]
    n = len(sites)
    if (q_sigma * q_tau) ** n > 300_000:
        raise ValueError("oracle cubic enumeration too large")
    digest = _digest("cubic", sites=list(map(repr, sites)), bonds=list(map(repr, bonds)),
                     j_sigma=j_sigma, j_tau=j_tau, j_sigmatau=j_sigmatau,
                     q_sigma=q_sigma, q_tau=q_tau)
    support, weights = [], []
    for sigma in itertools.product(range(1, q_sigma + 1), repeat=n):
        smap = dict(zip(sites, sigma))
        for tau in itertools.product(range(1, q_tau + 1), repeat=n):
            tmap = dict(zip(sites, tau))
            h = 0.0
            for (i, j) in bonds:
                ds = 1.0 if smap[i] == smap[j] else 0.0
                dt = 1.0 if tmap[i] == tmap[j] else 0.0
                h += -2.0 * (j_sigma - j_sigmatau) * ds
                h += -2.0 * (j_tau - j_sigmatau) * dt
                h += -4.0 * j_sigmatau * ds * dt
            support.append((sigma, tau))
            weights.append(math.exp(-h))
    return _normalize("cubic", digest, support, weights)


# -- dispatch ----------------------------------------------------------------

_BUILDERS = {
    "sixv-heights": sixv_height_distribution,
    "sixv-ice": sixv_ice_distribution,
    "at": at_distribution,
    "grcm": grcm_distribution,
    "cubic": cubic_distribution,
}


def exact_distribution(spec: Mapping) -> ExactDistribution:
    """Build the oracle distribution for a model-spec mapping.

    The mapping carries a "model" key naming the family plus that
    family's keyword arguments, e.g.::

        exact_distribution({"model": "at", "sites": [...], "bonds": [...],
                            "J": 0.5, "U": 0.1})
    """
    spec = dict(spec)
    try:
        model = spec.pop("model")
        builder = _BUILDERS[model]
    except KeyError:
        raise ValueError(f"unknown or missing model in spec: {spec}")
    return builder(**spec)


def exact_event_prob(spec: Mapping, predicate: Callable) -> float:
    return exact_distribution(spec).prob_of(predicate)
