"""Directed loop decomposition, loop reversal, and arrow unbalance.

Every vertex has two arrows in and two out, so pairing arrivals with
departures turns a configuration into edge-disjoint directed cycles.
The pairing never lets transits cross: at vertex types 1, 2, and 5 the
quarter-turn arcs sit in the northwest and southeast corners (north
pairs with west, south with east), at types 3, 4, and 6 in the other
two corners.  For the c-types, where both resolutions would be planar,
this is the convention in which each transit turns left.

Decomposition needs every reachable vertex to be classifiable, which on
the shapes built here means a torus: on boxes, strips, and cylinders
the vertical edges of the extreme rows dangle at unclassifiable
boundary vertices, so the walk cannot close and the flux is reported as
open.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .lattice import Domain, Edge
from .sixvertex import ArrowConfig, Weights, classify_all, log_weight

__all__ = [
    "LoopDecomposition",
    "UnbalanceProfile",
    "decompose",
    "loop_edge_set",
    "reverse_edges",
    "reverse_loops",
    "weight_ratio",
    "type_change_count",
    "unbalance",
]

# arrival slot -> departure slot, keyed by the corner layout of the arcs
_NW_SE = {"n": "w", "w": "n", "s": "e", "e": "s"}
_NE_SW = {"n": "e", "e": "n", "s": "w", "w": "s"}
_TRANSIT = {1: _NW_SE, 2: _NW_SE, 5: _NW_SE, 3: _NE_SW, 4: _NE_SW, 6: _NE_SW}

_SLOTS = ("n", "e", "s", "w")


@dataclass(frozen=True)
class LoopDecomposition:
    """Edge-disjoint directed cycles covering all interior edges."""

    loops: tuple[tuple[Edge, ...], ...]
    convention: str = "left-turn"

    def __len__(self) -> int:
        return len(self.loops)

    def lengths(self) -> tuple[int, ...]:
        return tuple(len(lp) for lp in self.loops)


@dataclass(frozen=True)
class UnbalanceProfile:
    """Net upward flux through each face row, and its normalized value."""

    per_row: tuple[int, ...]
    alpha: Fraction


def _walk_step(domain, types, bits, edge_index, edge, forward):
    """Follow one directed edge to its far vertex and take the transit.

    `forward` means travel from the edge's first vertex to its second
    (up for vertical edges, east for horizontal ones).  Returns the next
    edge and its travel sense.
    """
    v0, v1 = domain.edge_vertices(edge)
    v = domain.canon_vertex(v1 if forward else v0)
    t = types.get(v)
    if t is None:
        raise ValueError(
            f"open boundary flux: walk reaches unclassifiable vertex {v}"
        )
    incident = domain.vertex_edges(v)
    canon = domain.canon_edge(edge)
    arrival = None
    for slot, inc in zip(_SLOTS, incident):
        if domain.canon_edge(inc) == canon:
            # travelling along the vertex's own n-edge into the vertex
            # means coming from the north, and so on around
            arrival = slot
            break
    if arrival is None:
        raise AssertionError(f"edge {edge} not incident to vertex {v}")
    depart = _TRANSIT[t.value][arrival]
    out = domain.canon_edge(incident[_SLOTS.index(depart)])
    # leaving through the n or e slot travels forward, s or w backward
    out_forward = depart in ("n", "e")
    b = bits[edge_index[out]]
    if (b == 1) != out_forward:
        raise AssertionError(f"transit at {v} disagrees with arrow on {out}")
    return out, out_forward


def decompose(config: ArrowConfig) -> LoopDecomposition:
    """Split a configuration into directed loops; deterministic.

    Loops are reported in order of their least edge index and traversed
    along the arrows starting from that edge.
    """
    dom = config.domain
    types = classify_all(config)
    bits = config.bits
    idx = dom.interior_edge_index
    unvisited = [True] * len(dom.interior_edges)
    loops = []
    for start_i, start_edge in enumerate(dom.interior_edges):
        if not unvisited[start_i]:
            continue
        loop = []
        edge, forward = start_edge, bits[start_i] == 1
        while True:
            ei = idx[edge]
            if not unvisited[ei]:
                raise AssertionError("walk revisited an edge before closing")
            unvisited[ei] = False
            loop.append(edge)
            edge, forward = _walk_step(dom, types, bits, idx, edge, forward)
            if edge == start_edge:
                break
        loops.append(tuple(loop))
    return LoopDecomposition(tuple(loops))


def loop_edge_set(dec: LoopDecomposition, loop_ids: Iterable[int]) -> frozenset:
    ids = sorted(set(loop_ids))
    bad = [i for i in ids if not 0 <= i < len(dec.loops)]
    if bad:
        raise ValueError(f"invalid loop id {bad[0]} (have {len(dec.loops)} loops)")
    out: set = set()
    for i in ids:
        out.update(dec.loops[i])
    return frozenset(out)


def reverse_edges(config: ArrowConfig, edges: Iterable[Edge]) -> ArrowConfig:
    """Flip the arrows on the given edges.

    Self-inverse for any edge set; the ice rule survives exactly when
    the set is a union of loops.
    """
    dom = config.domain
    idx = dom.interior_edge_index
    flip = set()
    for e in edges:
        ce = dom.canon_edge(e)
        if ce not in idx:
            raise ValueError(f"{e} is not an interior edge")
        flip.add(idx[ce])
    bits = tuple(
        1 - b if i in flip else b for i, b in enumerate(config.bits)
    )
    return ArrowConfig(dom, bits)


def reverse_loops(
    config: ArrowConfig,
    loop_ids: Iterable[int],
    decomposition: LoopDecomposition | None = None,
) -> ArrowConfig:
    """Reverse whole loops, resolved against the given decomposition.

    Pass the decomposition back in to undo a reversal: after reversing,
    the configuration decomposes differently, so ids alone do not name
    the same edges twice.
    """
    if decomposition is None:
        decomposition = decompose(config)
    return reverse_edges(config, loop_edge_set(decomposition, loop_ids))


def type_change_count(config: ArrowConfig, other: ArrowConfig) -> int:
    """How many vertices classify differently between two configurations."""
    if config.domain is not other.domain and config.domain.faces != other.domain.faces:
        raise ValueError("configurations live on different domains")
    ta = classify_all(config)
    tb = classify_all(other)
    return sum(1 for v, t in ta.items() if tb[v] != t)


def weight_ratio(config: ArrowConfig, reversed_config: ArrowConfig, w: Weights) -> float:
    """log weight(after) - log weight(before).

    Bounded by the number of retyped vertices times the largest log
    ratio between single-vertex weights.
    """
    return log_weight(reversed_config, w) - log_weight(config, w)


def unbalance(config: ArrowConfig) -> UnbalanceProfile:
    """Per-row net upward flux and alpha = flux / circumference.

    Interior vertex rows conserve vertical flux, so on a torus every
    row carries the same value and alpha is well defined from row 0.
    """
    dom = config.domain
    if dom.period_x is None:
        raise ValueError("unbalance needs rows wrapped into cycles")
    rows = sorted({f[1] for f in dom.faces})
    n = dom.period_x
    per_row = []
    for y in rows:
        flux = 0
        for i in range(n):
            flux += 2 * config.bit(("v", i, y)) - 1
        per_row.append(flux)
    return UnbalanceProfile(tuple(per_row), Fraction(per_row[0], n))
