"""Six-vertex configurations, weights, height functions, and enumeration.

Arrow convention
----------------
Each interior edge carries one bit: 1 means the arrow points along the
edge's canonical direction (north for vertical edges, east for horizontal
ones), 0 means reversed.  At an interior vertex the four incident bits in
(n, e, s, w) order determine the vertex type:

    ==========  =========  ======  =====
    (n,e,s,w)   inflow     type    class
    ==========  =========  ======  =====
    (1,1,1,1)   W, S        1       a
    (0,0,0,0)   E, N        2       a
    (0,1,0,1)   W, N        3       b
    (1,0,1,0)   E, S        4       b
    (1,0,0,1)   W, E        5       c
    (0,1,1,0)   N, S        6       c
    ==========  =========  ======  =====

Exactly these six of the 16 local assignments satisfy the ice rule
(two in, two out), and full arrow reversal swaps 1<->2, 3<->4, 5<->6.

Height convention
-----------------
Walking along an arrow, the face to the LEFT is the higher one:
h(left) = h(right) + 1.  Concretely, for a vertical edge ("v", i, j) the
bit is 1 (north) exactly when the west face is one above the east face,
and for a horizontal edge ("h", i, j) the bit is 1 (east) exactly when
the north face is one above the south face.  Heights change by exactly
one across every edge, so h(f) - parity(f) is even everywhere or odd
everywhere.

On wrapped domains a configuration admits a single-valued height iff its
net winding vanishes in every wrapped direction; the balanced sector
(zero vertical flux) guarantees this for the vertical direction only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .lattice import Domain, Edge, Face, Vertex

__all__ = [
    "VertexType",
    "Weights",
    "ArrowConfig",
    "HeightFunction",
    "BoundaryCondition",
    "SectorSpec",
    "classify_vertex",
    "classify_all",
    "type_from_corner_heights",
    "class_counts",
    "log_weight",
    "height_log_weight",
    "height_from_config",
    "config_from_height",
    "flat01",
    "flat_shifted",
    "sloped_bc",
    "explicit_bc",
    "envelopes",
    "is_admissible",
    "minimal_extension",
    "maximal_extension",
    "local_candidates",
    "enumerate_heights",
    "enumerate_ice_configs",
    "enumerate_states",
    "row_flux",
    "column_flux",
    "is_balanced",
    "partition_function",
    "log_sum_exp",
]

MAX_FREE_FACES = 26
MAX_FREE_EDGES = 32

# (n, e, s, w) bit pattern -> vertex type; see module docstring.
_TYPE_OF_BITS: dict[tuple[int, int, int, int], int] = {
    (1, 1, 1, 1): 1,
    (0, 0, 0, 0): 2,
    (0, 1, 0, 1): 3,
    (1, 0, 1, 0): 4,
    (1, 0, 0, 1): 5,
    (0, 1, 1, 0): 6,
}
_CLASS_OF_TYPE = {1: "a", 2: "a", 3: "b", 4: "b", 5: "c", 6: "c"}
_CONJUGATE = {1: 2, 2: 1, 3: 4, 4: 3, 5: 6, 6: 5}


@dataclass(frozen=True)
class VertexType:
    value: int

    def __post_init__(self) -> None:
        if self.value not in _CLASS_OF_TYPE:
            raise ValueError(f"vertex type must be 1..6, got {self.value!r}")

    @property
    def cls(self) -> str:
        return _CLASS_OF_TYPE[self.value]

    @property
    def conjugate(self) -> "VertexType":
        return VertexType(_CONJUGATE[self.value])


@dataclass(frozen=True)
class Weights:
    """Isotropic vertex weights (a, b, c), kept with their logarithms.

    Zero weights are allowed and contribute -inf log factors; negative
    ones are rejected outright.
    """

    a: float = 1.0
    b: float = 1.0
    c: float = 1.0

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not (v >= 0.0):
                raise ValueError(f"weight {name} must be >= 0, got {v}")

    def log_class(self, cls: str) -> float:
        v = {"a": self.a, "b": self.b, "c": self.c}[cls]
        return math.log(v) if v > 0.0 else float("-inf")

    def log_type(self, t: int) -> float:
        return self.log_class(_CLASS_OF_TYPE[t])

    @property
    def max_log_ratio(self) -> float:
        """log(max weight / min positive weight); bound used by loop accounting."""
        vals = [v for v in (self.a, self.b, self.c) if v > 0.0]
        if not vals:
            raise ValueError("all weights are zero")
        return math.log(max(vals) / min(vals))


class ArrowConfig:
    """One bit per interior edge of a domain; hashable value type."""

    __slots__ = ("domain", "bits")

    def __init__(self, domain: Domain, bits: Iterable[int]) -> None:
        bits = tuple(int(b) for b in bits)
        if len(bits) != len(domain.interior_edges):
            raise ValueError(
                f"expected {len(domain.interior_edges)} bits, got {len(bits)}"
            )
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        self.domain = domain
        self.bits = bits

    @classmethod
    def from_dict(cls, domain: Domain, mapping: Mapping[Edge, int]) -> "ArrowConfig":
        try:
            bits = [mapping[e] for e in domain.interior_edges]
        except KeyError as exc:
            raise ValueError(f"missing bit for interior edge {exc.args[0]}")
        return cls(domain, bits)

    def bit(self, e: Edge) -> int:
        e = self.domain.canon_edge(e)
        try:
            return self.bits[self.domain.interior_edge_index[e]]
        except KeyError:
            raise KeyError(f"{e} is not an interior edge")

    def as_dict(self) -> dict[Edge, int]:
        return dict(zip(self.domain.interior_edges, self.bits))

    def reversed(self) -> "ArrowConfig":
        return ArrowConfig(self.domain, tuple(1 - b for b in self.bits))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ArrowConfig)
            and self.domain is other.domain
            and self.bits == other.bits
        )

    def __hash__(self) -> int:
        return hash(self.bits)

    def __repr__(self) -> str:  # pragma: no cover
        return f"ArrowConfig({''.join(map(str, self.bits))})"


class HeightFunction:
    """Integer height per face, aligned with ``domain.faces``; hashable."""

    __slots__ = ("domain", "values")

    def __init__(self, domain: Domain, values: Iterable[int]) -> None:
        values = tuple(int(v) for v in values)
        if len(values) != len(domain.faces):
            raise ValueError(f"expected {len(domain.faces)} values, got {len(values)}")
        self.domain = domain
        self.values = values

    @classmethod
    def from_dict(cls, domain: Domain, mapping: Mapping[Face, int]) -> "HeightFunction":
        try:
            vals = [mapping[f] for f in domain.faces]
        except KeyError as exc:
            raise ValueError(f"missing height for face {exc.args[0]}")
        return cls(domain, vals)

    def at(self, f: Face) -> int:
        return self.values[self.domain.face_index[self.domain.canon_face(f)]]

    def as_dict(self) -> dict[Face, int]:
        return dict(zip(self.domain.faces, self.values))

    def shifted(self, delta: int) -> "HeightFunction":
        if delta % 2 != 0:
            raise ValueError("height shifts must be even to preserve parity")
        return HeightFunction(self.domain, tuple(v + delta for v in self.values))

    def validate(self) -> None:
        """Raise unless every edge step is exactly +-1."""
        dom = self.domain
        for e in dom.interior_edges:
            f, g = dom.edge_faces(e)
            if abs(self.at(f) - self.at(g)) != 1:
                raise ValueError(
                    f"height step across edge {e} is {self.at(g) - self.at(f)}, not +-1"
                )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, HeightFunction)
            and self.domain is other.domain
            and self.values == other.values
        )

    def __hash__(self) -> int:
        return hash(self.values)

    def __repr__(self) -> str:  # pragma: no cover
        return f"HeightFunction({self.values})"


# -- classification and weights ---------------------------------------------


def _vertex_bits(config: ArrowConfig, v: Vertex) -> tuple[int, int, int, int]:
    dom = config.domain
    idx = dom.interior_edge_index
    n, e, s, w = dom.vertex_edges(v)
    return (config.bits[idx[n]], config.bits[idx[e]], config.bits[idx[s]], config.bits[idx[w]])


def type_from_corner_heights(sw: int, se: int, nw: int, ne: int) -> VertexType:
    """Vertex type from the four surrounding face heights (sw, se, nw, ne).

    Valid heights around a vertex differ by one along each side of the
    plaquette, which already implies the ice rule; anything else raises.
    """
    for x, y in ((sw, se), (se, ne), (ne, nw), (nw, sw)):
        if abs(x - y) != 1:
            raise ValueError(f"corner heights {(sw, se, nw, ne)} are not unit steps")
    bits = (
        1 if nw == ne + 1 else 0,  # n: west face above east
        1 if ne == se + 1 else 0,  # e: north face above south
        1 if sw == se + 1 else 0,  # s
        1 if nw == sw + 1 else 0,  # w
    )
    return VertexType(_TYPE_OF_BITS[bits])


def classify_vertex(config: ArrowConfig, v: Vertex) -> VertexType:
    """Type of an interior vertex; raises on an ice-rule violation."""
    dom = config.domain
    v = dom.canon_vertex(v)
    if v not in dom.interior_vertex_set:
        raise ValueError(f"vertex {v} is not interior")
    bits = _vertex_bits(config, v)
    t = _TYPE_OF_BITS.get(bits)
    if t is None:
        raise ValueError(f"ice rule violated at vertex {v}: bits (n,e,s,w)={bits}")
    return VertexType(t)


def classify_all(config: ArrowConfig) -> dict[Vertex, VertexType]:
    dom = config.domain
    idx = dom.interior_edge_index
    bits_seq = config.bits
    out: dict[Vertex, VertexType] = {}
    for v in dom.interior_vertices:
        n, e, s, w = dom.vertex_edges(v)
        bits = (bits_seq[idx[n]], bits_seq[idx[e]], bits_seq[idx[s]], bits_seq[idx[w]])
        t = _TYPE_OF_BITS.get(bits)
        if t is None:
            raise ValueError(f"ice rule violated at vertex {v}: bits (n,e,s,w)={bits}")
        out[v] = VertexType(t)
    return out


def class_counts(config: ArrowConfig) -> dict[str, int]:
    counts = {"a": 0, "b": 0, "c": 0}
    for t in classify_all(config).values():
        counts[t.cls] += 1
    return counts


def log_weight(config: ArrowConfig, w: Weights) -> float:
    """Sum of log vertex weights over interior vertices (-inf on zero weight)."""
    counts = class_counts(config)
    total = 0.0
    for cls, n in counts.items():
        if n == 0:
            continue
        lw = w.log_class(cls)
        if lw == float("-inf"):
            return float("-inf")
        total += n * lw
    return total


def height_log_weight(h: HeightFunction, w: Weights) -> float:
    return log_weight(config_from_height(h), w)


# -- the height <-> arrow bijection ------------------------------------------


def _edge_step(kind: str, bit: int) -> int:
    # Height change crossing the edge from its first face to its second
    # (west->east for "v", south->north for "h"); see module docstring.
    if kind == "v":
        return -1 if bit else 1
    return 1 if bit else -1


def height_from_config(
    config: ArrowConfig, anchor: tuple[Face, int] | None = None
) -> HeightFunction:
    """Integrate arrows into a height function anchored at one face.

    Default anchor: the first face of the domain gets its parity as value.
    Raises if the domain's interior-edge graph is disconnected from the
    anchor or if wrapping makes the height multivalued.
    """
    dom = config.domain
    if anchor is None:
        f0 = dom.faces[0]
        anchor = (f0, dom.parity(f0))
    anchor_face = dom.canon_face(anchor[0])
    lut = dict(zip(dom.interior_edges, config.bits))

    values: dict[Face, int] = {anchor_face: anchor[1]}
    frontier = [anchor_face]
    while frontier:
        nxt = []
        for f in frontier:
            x, y = f
            for e in (("v", x, y), ("v", x + 1, y), ("h", x, y), ("h", x, y + 1)):
                e = dom.canon_edge(e)
                if e not in dom.interior_edge_set:
                    continue
                a, b = dom.edge_faces(e)
                step = _edge_step(e[0], lut[e])
                for src, dst, d in ((a, b, step), (b, a, -step)):
                    if src == f:
                        hv = values[f] + d
                        if dst in values:
                            if values[dst] != hv:
                                raise ValueError(
                                    "height multivalued: nonzero winding detected "
                                    f"at edge {e}"
                                )
                        else:
                            values[dst] = hv
                            nxt.append(dst)
        frontier = nxt
    missing = dom.face_set - values.keys()
    if missing:
        raise ValueError(
            f"cannot anchor heights: faces {sorted(missing)[:3]}... unreachable "
            "through interior edges"
        )
    return HeightFunction.from_dict(dom, values)


def config_from_height(h: HeightFunction) -> ArrowConfig:
    """Differentiate a height function into its arrow configuration."""
    dom = h.domain
    bits = []
    for e in dom.interior_edges:
        f, g = dom.edge_faces(e)
        d = h.at(g) - h.at(f)
        if d == _edge_step(e[0], 1):
            bits.append(1)
        elif d == _edge_step(e[0], 0):
            bits.append(0)
        else:
            raise ValueError(
                f"height step across edge {e} is {d}, not +-1; not a height function"
            )
    return ArrowConfig(dom, bits)


# -- boundary conditions -----------------------------------------------------


@dataclass(frozen=True)
class BoundaryCondition:
    """Fixed heights on a face subset (usually the boundary ring)."""

    kind: str
    assignments: tuple[tuple[Face, int], ...]

    @property
    def support(self) -> tuple[Face, ...]:
        return tuple(f for f, _ in self.assignments)

    def as_dict(self) -> dict[Face, int]:
        return dict(self.assignments)

    def value(self, f: Face) -> int:
        return dict(self.assignments)[f]

    def shifted(self, delta: int) -> "BoundaryCondition":
        if delta % 2 != 0:
            raise ValueError("boundary shifts must be even to preserve parity")
        return BoundaryCondition(
            f"{self.kind}{delta:+d}",
            tuple((f, v + delta) for f, v in self.assignments),
        )

    def raised_at(self, face: Face, delta: int) -> "BoundaryCondition":
        if delta % 2 != 0:
            raise ValueError("single-face raises must be even to preserve parity")
        out = []
        hit = False
        for f, v in self.assignments:
            if f == face:
                out.append((f, v + delta))
                hit = True
            else:
                out.append((f, v))
        if not hit:
            raise ValueError(f"face {face} not in boundary support")
        return BoundaryCondition(f"{self.kind}@raised", tuple(out))


def _bc(kind: str, domain: Domain, mapping: Mapping[Face, int]) -> BoundaryCondition:
    items = tuple(sorted(((domain.canon_face(f), int(v)) for f, v in mapping.items()),
                         key=lambda fv: (fv[0][1], fv[0][0])))
    return BoundaryCondition(kind, items)


def flat01(domain: Domain) -> BoundaryCondition:
    """Heights 0 on even and 1 on odd boundary faces."""
    return _bc("flat01", domain, {f: domain.parity(f) for f in domain.boundary_faces})


def flat_shifted(domain: Domain, delta: int) -> BoundaryCondition:
    return flat01(domain).shifted(delta)


def _nearest_with_parity(target: Fraction, parity: int) -> int:
    # Nearest integer of the given parity; exact ties resolve to the larger
    # value (this is what makes zero slope reproduce the flat 0/1 boundary).
    lo = parity + 2 * math.floor((target - parity) / 2)
    hi = lo + 2
    if target - lo < hi - target:
        return lo
    return hi


def sloped_bc(domain: Domain, s: tuple[Fraction | float | int, Fraction | float | int]) -> BoundaryCondition:
    """Boundary heights tracking the plane x*s_x + y*s_y, parity-corrected."""
    sx, sy = (Fraction(v) if not isinstance(v, Fraction) else v for v in s)
    if abs(sx) > 1 or abs(sy) > 1:
        raise ValueError("slopes must lie in [-1, 1]")
    vals = {}
    for f in domain.boundary_faces:
        target = sx * f[0] + sy * f[1]
        vals[f] = _nearest_with_parity(target, domain.parity(f))
    return _bc(f"sloped({sx},{sy})", domain, vals)


def explicit_bc(domain: Domain, mapping: Mapping[Face, int]) -> BoundaryCondition:
    for f in mapping:
        if domain.canon_face(f) not in domain.face_set:
            raise ValueError(f"boundary face {f} not in domain")
    return _bc("explicit", domain, mapping)


# -- admissibility via min/max envelopes -------------------------------------


def envelopes(
    domain: Domain, bc: BoundaryCondition
) -> tuple[dict[Face, int], dict[Face, int]]:
    """Pointwise least and greatest extensions (lower, upper) of the BC.

    Computed by distance propagation: lower(f) = max_g xi(g) - d(f, g) and
    upper(f) = min_g xi(g) + d(f, g).  Both are themselves height functions
    whenever the BC is admissible.
    """
    support = bc.as_dict()
    if not support:
        raise ValueError("boundary condition has empty support")
    lower = {f: -(10**9) for f in domain.faces}
    upper = {f: +(10**9) for f in domain.faces}
    for g, xi in support.items():
        dist = domain.distances_from(g)
        for f in domain.faces:
            d = dist.get(f)
            if d is None:
                raise ValueError(f"face {f} unreachable from boundary support")
            lower[f] = max(lower[f], xi - d)
            upper[f] = min(upper[f], xi + d)
    return lower, upper


def is_admissible(domain: Domain, bc: BoundaryCondition) -> tuple[bool, str]:
    """Whether at least one height function extends the BC, with a reason."""
    support = bc.as_dict()
    items = list(support.items())
    if not items:
        return False, "empty support"
    (g0, xi0) = items[0]
    dist0 = domain.distances_from(g0)
    for g, xi in items[1:]:
        d0 = dist0.get(g)
        if d0 is None:
            return False, f"face {g} unreachable from {g0}"
        if (xi - xi0 - d0) % 2 != 0:
            return False, f"parity clash between {g0} and {g}"
    lower, upper = envelopes(domain, bc)
    for f in domain.faces:
        if lower[f] > upper[f]:
            return False, f"empty envelope at face {f}"
    return True, "ok"


def minimal_extension(domain: Domain, bc: BoundaryCondition) -> HeightFunction:
    ok, why = is_admissible(domain, bc)
    if not ok:
        raise ValueError(f"inadmissible boundary condition: {why}")
    lower, _ = envelopes(domain, bc)
    return HeightFunction.from_dict(domain, lower)


def maximal_extension(domain: Domain, bc: BoundaryCondition) -> HeightFunction:
    ok, why = is_admissible(domain, bc)
    if not ok:
        raise ValueError(f"inadmissible boundary condition: {why}")
    _, upper = envelopes(domain, bc)
    return HeightFunction.from_dict(domain, upper)


def local_candidates(neighbor_values: Iterable[int]) -> list[int]:
    """Heights compatible with fixed edge-neighbour values, ascending.

    Either two (nbrs all equal) or one (nbrs spread by 2) or none.
    """
    vals = list(neighbor_values)
    if not vals:
        raise ValueError("need at least one neighbour value")
    lo, hi = min(vals), max(vals)
    if hi - lo == 0:
        return [lo - 1, lo + 1]
    if hi - lo == 2:
        return [lo + 1]
    return []


# -- enumeration -------------------------------------------------------------


def enumerate_heights(
    domain: Domain, bc: BoundaryCondition
) -> list[HeightFunction]:
    """All height functions extending *bc*, in deterministic order.

    Free faces are filled in breadth-first order from the BC support, so
    every newly placed face has an already-valued edge-neighbour; the
    envelope bounds prune dead branches early.
    """
    ok, why = is_admissible(domain, bc)
    if not ok:
        raise ValueError(f"inadmissible boundary condition: {why}")
    fixed = bc.as_dict()
    free = [f for f in domain.faces if f not in fixed]
    if len(free) > MAX_FREE_FACES:
        raise ValueError(
            f"too large for enumeration: {len(free)} free faces (max {MAX_FREE_FACES})"
        )
    lower, upper = envelopes(domain, bc)

    # BFS order over free faces from the support.
    order: list[Face] = []
    seen = set(fixed)
    frontier = sorted(fixed, key=lambda f: (f[1], f[0]))
    while frontier:
        nxt = []
        for f in frontier:
            for g in sorted(domain.neighbors(f, "edge"), key=lambda f: (f[1], f[0])):
                if g not in seen:
                    seen.add(g)
                    order.append(g)
                    nxt.append(g)
        frontier = nxt
    assert len(order) == len(free)

    values = dict(fixed)

    def rec(idx: int) -> Iterator[HeightFunction]:
        if idx == len(order):
            yield HeightFunction.from_dict(domain, values)
            return
        f = order[idx]
        nbr_vals = [values[g] for g in domain.neighbors(f, "edge") if g in values]
        for v in local_candidates(nbr_vals):
            if lower[f] <= v <= upper[f]:
                values[f] = v
                yield from rec(idx + 1)
                del values[f]

    return list(rec(0))


def enumerate_ice_configs(domain: Domain) -> list[ArrowConfig]:
    """All ice-rule arrow configurations on the domain's interior edges.

    Depth-first over interior vertices with immediate ice filtering;
    interior edges touching no interior vertex are free bits appended at
    the end.  Deterministic order.
    """
    edges = domain.interior_edges
    if len(edges) > MAX_FREE_EDGES:
        raise ValueError(
            f"too large for enumeration: {len(edges)} interior edges (max {MAX_FREE_EDGES})"
        )
    interior_set = domain.interior_edge_set
    vertices = domain.interior_vertices

    constrained: set[Edge] = set()
    for v in vertices:
        constrained.update(domain.vertex_edges(v))
    loose = [e for e in edges if e not in constrained]

    assignment: dict[Edge, int] = {}

    def vertex_options(v: Vertex) -> list[dict[Edge, int]]:
        n, e, s, w = domain.vertex_edges(v)
        fixed = {k: assignment[k] for k in (n, e, s, w) if k in assignment}
        free = [k for k in (n, e, s, w) if k not in assignment]
        options = []
        for mask in range(1 << len(free)):
            trial = dict(fixed)
            for t, k in enumerate(free):
                trial[k] = (mask >> t) & 1
            bits = (trial[n], trial[e], trial[s], trial[w])
            if bits in _TYPE_OF_BITS:
                options.append({k: trial[k] for k in free})
        return options

    def rec(idx: int) -> Iterator[ArrowConfig]:
        if idx == len(vertices):
            for mask in range(1 << len(loose)):
                extra = {e: (mask >> t) & 1 for t, e in enumerate(loose)}
                full = {**assignment, **extra}
                yield ArrowConfig(domain, [full[e] for e in edges])
            return
        for opt in vertex_options(vertices[idx]):
            assignment.update(opt)
            yield from rec(idx + 1)
            for k in opt:
                del assignment[k]

    # Edges incident to interior vertices but themselves non-interior cannot
    # occur: an interior vertex's four edges all separate member faces.
    for v in vertices:
        for e in domain.vertex_edges(v):
            assert e in interior_set
    return list(rec(0))


@dataclass(frozen=True)
class SectorSpec:
    """Vertical-flux sector on a wrapped domain.

    The per-row net upward flux is fixed at ``2*ceil(s*N)`` where N is the
    circumference, i.e. the up-arrow count per row is N/2 + ceil(s*N).
    """

    s: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        s = self.s if isinstance(self.s, Fraction) else Fraction(self.s)
        object.__setattr__(self, "s", s)
        if abs(s) > Fraction(1, 2):
            raise ValueError("unbalance s must lie in [-1/2, 1/2]")

    @property
    def balanced(self) -> bool:
        return self.s == 0

    def up_count(self, circumference: int) -> int:
        k = circumference // 2 + math.ceil(self.s * circumference)
        if not 0 <= k <= circumference:
            raise ValueError(f"infeasible sector s={self.s} at N={circumference}")
        return k

    def flux(self, circumference: int) -> int:
        return 2 * self.up_count(circumference) - circumference


def row_flux(config: ArrowConfig, j: int) -> int:
    """Net upward flux through the vertical edges of face-row *j*."""
    dom = config.domain
    if dom.period_x is None:
        raise ValueError("row flux is defined on x-wrapped domains")
    lut = dict(zip(dom.interior_edges, config.bits))
    total = 0
    for i in range(dom.period_x):
        e = dom.canon_edge(("v", i, j))
        if e in lut:
            total += 2 * lut[e] - 1
    return total


def column_flux(config: ArrowConfig, i: int) -> int:
    """Net eastward flux through the horizontal edges of column *i*."""
    dom = config.domain
    if dom.period_y is None:
        raise ValueError("column flux is defined on y-wrapped domains")
    lut = dict(zip(dom.interior_edges, config.bits))
    total = 0
    for j in range(dom.period_y):
        e = dom.canon_edge(("h", i, j))
        if e in lut:
            total += 2 * lut[e] - 1
    return total


def is_balanced(config: ArrowConfig) -> bool:
    """Zero net vertical flux in every row (the x-wrapped sector condition)."""
    dom = config.domain
    if dom.period_x is None:
        raise ValueError("balance is defined on x-wrapped domains")
    rows = range(dom.period_y) if dom.period_y is not None else sorted(
        {j for (k, i, j) in dom.interior_edges if k == "v"}
    )
    return all(row_flux(config, j) == 0 for j in rows)


def enumerate_states(
    domain: Domain, constraint: BoundaryCondition | SectorSpec | None = None
) -> list[HeightFunction] | list[ArrowConfig]:
    """Admissible states under the given constraint.

    BoundaryCondition -> height functions; SectorSpec (wrapped domains) ->
    arrow configurations with the prescribed vertical flux; None -> all
    ice configurations.
    """
    if isinstance(constraint, BoundaryCondition):
        return enumerate_heights(domain, constraint)
    if isinstance(constraint, SectorSpec):
        if domain.period_x is None:
            raise ValueError("sector enumeration needs an x-wrapped domain")
        flux = constraint.flux(domain.period_x)
        return [c for c in enumerate_ice_configs(domain) if row_flux(c, 0) == flux]
    return enumerate_ice_configs(domain)


# -- partition functions -----------------------------------------------------


def log_sum_exp(logs: Iterable[float]) -> float:
    vals = [x for x in logs if x != float("-inf")]
    if not vals:
        return float("-inf")
    m = max(vals)
    return m + math.log(sum(math.exp(x - m) for x in vals))


def partition_function(
    domain: Domain,
    constraint: BoundaryCondition | SectorSpec | None,
    w: Weights,
    engine: str = "auto",
) -> float:
    """log of the summed weight over the admissible set.

    engine "enumerate" sums the stream from :func:`enumerate_states`;
    engine "transfer" handles wrapped domains through the row-transfer
    operator (see the transfer module); "auto" prefers enumeration when
    the guards allow it and falls back to transfer.
    """
    if engine not in ("auto", "enumerate", "transfer"):
        raise ValueError(f"unknown engine {engine!r}")

    def by_enumeration() -> float:
        if isinstance(constraint, BoundaryCondition):
            ok, _why = is_admissible(domain, constraint)
            if not ok:
                return float("-inf")  # empty admissible set
        logs = []
        for state in enumerate_states(domain, constraint):
            if isinstance(state, HeightFunction):
                logs.append(log_weight(config_from_height(state), w))
            else:
                logs.append(log_weight(state, w))
        if not logs:
            return float("-inf")  # empty sector
        return log_sum_exp(logs)

    def by_transfer() -> float:
        from . import transfer

        if domain.shape == "cylinder":
            N = domain.params["circumference"]
            M = domain.params["height"]
            k = constraint.up_count(N) if isinstance(constraint, SectorSpec) else None
            return transfer.cylinder_log_partition(N, M, w, k)
        if domain.shape == "torus":
            N = domain.params["nx"]
            M = domain.params["ny"]
            k = constraint.up_count(N) if isinstance(constraint, SectorSpec) else None
            return transfer.torus_log_partition(N, M, w, k)
        raise ValueError(f"transfer engine needs a cylinder or torus, got {domain.shape}")

    if engine == "enumerate":
        return by_enumeration()
    if engine == "transfer":
        return by_transfer()
    if isinstance(constraint, BoundaryCondition):
        return by_enumeration()
    if domain.shape in ("cylinder", "torus") and len(domain.interior_edges) > MAX_FREE_EDGES:
        return by_transfer()
    return by_enumeration()
