"""Connectivity events on faces: crossings, circuits, frozen regions.

A query names a predicate (height threshold, spin sign, or open bond of
either species), an adjacency notion, a region, and two face sets to be
joined.  Everything here is a pure function of immutable inputs.

Annulus circuits get two detectors on purpose.  The exported one tests
dual disconnection: a circuit of high faces separates the hole from the
outside exactly when no diagonal-adjacency path of low faces escapes.
The second walks cycles of the high subgraph and measures their winding
number around the hole.  They must agree subset-by-subset; the test
suite checks that exhaustively on small annuli.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .lattice import Domain, Face
from .sixvertex import (
    ArrowConfig,
    BoundaryCondition,
    HeightFunction,
    VertexType,
    Weights,
    classify_all,
    enumerate_heights,
    height_log_weight,
)

__all__ = [
    "CrossingQuery",
    "FreezingCluster",
    "AnnulusGeometry",
    "clusters",
    "connected",
    "annulus_geometry",
    "annulus_circuit",
    "annulus_circuit_by_winding",
    "freezing_clusters",
    "bridging_interval",
    "bridging_event",
    "box_crossing_query",
    "compile_query",
    "exact_height_event_prob",
    "estimate_event_prob",
    "query_to_text",
    "query_from_text",
]

_HEIGHT_PREDICATES = ("h>=", "h<=", "h-in")
_SPIN_PREDICATES = ("spin+", "spin-")
_BOND_PREDICATES = ("bond-sigma", "bond-tau")
_PREDICATES = _HEIGHT_PREDICATES + _SPIN_PREDICATES + _BOND_PREDICATES


@dataclass(frozen=True)
class CrossingQuery:
    """Which faces count, how they connect, and what must be joined."""

    predicate: str
    region: frozenset
    source: frozenset
    target: frozenset
    adjacency: str = "edge"
    k: int | None = None
    k2: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "region", frozenset(self.region))
        object.__setattr__(self, "source", frozenset(self.source))
        object.__setattr__(self, "target", frozenset(self.target))
        if self.predicate not in _PREDICATES:
            raise ValueError(f"unknown predicate {self.predicate!r}")
        if self.adjacency not in ("edge", "x"):
            raise ValueError(f"unknown adjacency {self.adjacency!r}")
        if not self.source <= self.region or not self.target <= self.region:
            raise ValueError("source and target must lie inside the region")
        if self.predicate in _HEIGHT_PREDICATES:
            if self.k is None:
                raise ValueError(f"predicate {self.predicate!r} needs k")
            if self.predicate == "h-in":
                if self.k2 is None or self.k2 < self.k:
                    raise ValueError("h-in needs k <= k2")
            elif self.k2 is not None:
                raise ValueError("k2 only applies to h-in")
        elif self.k is not None or self.k2 is not None:
            raise ValueError(f"predicate {self.predicate!r} takes no level")

    def holds_at(self, value) -> bool:
        p = self.predicate
        if p == "h>=":
            return value >= self.k
        if p == "h<=":
            return value <= self.k
        if p == "h-in":
            return self.k <= value <= self.k2
        if p == "spin+":
            return value == 1
        if p == "spin-":
            return value == -1
        raise ValueError(f"{p!r} applies to bonds, not single sites")


def _value_map(config) -> Mapping:
    if isinstance(config, HeightFunction):
        return config.as_dict()
    if isinstance(config, Mapping):
        return config
    as_dict = getattr(config, "as_dict", None)
    if as_dict is not None:
        return as_dict()
    raise TypeError(f"cannot read site values from {type(config).__name__}")


_EDGE_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_X_STEPS = tuple(
    (dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)
)


def _neighbor_fn(domain: Domain | None, adjacency: str):
    steps = _EDGE_STEPS if adjacency == "edge" else _X_STEPS
    if domain is None:
        def nbrs(f):
            x, y = f
            return [(x + dx, y + dy) for dx, dy in steps]
    else:
        def nbrs(f):
            x, y = f
            return [domain.canon_face((x + dx, y + dy)) for dx, dy in steps]
    return nbrs


def _bond_components(config, query: CrossingQuery) -> list[tuple]:
    want = 0 if query.predicate == "bond-sigma" else 1
    adj: dict = {s: set() for s in query.region}
    for bond, channel in _value_map(config).items():
        i, j = tuple(bond)
        if i in adj and j in adj and channel[want] == 1:
            adj[i].add(j)
            adj[j].add(i)
    return _components(sorted(query.region, key=repr), lambda s: adj[s])


def _components(members: Iterable, nbrs) -> list[tuple]:
    member_set = set(members)
    seen: set = set()
    out = []
    for start in members:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            f = stack.pop()
            for g in nbrs(f):
                if g in member_set and g not in seen:
                    seen.add(g)
                    comp.add(g)
                    stack.append(g)
        out.append(tuple(sorted(comp)))
    return out


def clusters(config, query: CrossingQuery, domain: Domain | None = None) -> list[tuple]:
    """Maximal connected sets of satisfying faces, least face first.

    `config` may be a height function, a mapping of faces to values, or
    (for bond predicates) a mapping of bonds to channel pairs.  Without a
    domain, adjacency is read off the integer coordinates, which is
    correct on any unwrapped face set.
    """
    if not query.region:
        raise ValueError("empty region")
    if query.predicate in _BOND_PREDICATES:
        return _bond_components(config, query)
    if domain is None and isinstance(config, HeightFunction):
        domain = config.domain
    values = _value_map(config)
    good = sorted(f for f in query.region if query.holds_at(values[f]))
    nbrs = _neighbor_fn(domain, query.adjacency)
    return _components(good, nbrs)


def connected(config, query: CrossingQuery, domain: Domain | None = None) -> bool:
    """True iff one cluster meets both the source and the target set."""
    for comp in clusters(config, query, domain):
        cs = set(comp)
        if cs & query.source and cs & query.target:
            return True
    return False


# -- annulus circuits --------------------------------------------------------


@dataclass(frozen=True)
class AnnulusGeometry:
    """A centered square ring inside a domain, plus its hole."""

    faces: frozenset
    hole: frozenset
    x0: int
    y0: int
    outer: int
    center: tuple[float, float]

    def on_outer_ring(self, f: Face) -> bool:
        x, y = f
        return (
            x in (self.x0, self.x0 + self.outer - 1)
            or y in (self.y0, self.y0 + self.outer - 1)
        )


def annulus_geometry(domain: Domain, inner: int, outer: int) -> AnnulusGeometry:
    if domain.period_x is not None or domain.period_y is not None:
        raise ValueError("circuit detection needs an unwrapped domain")
    if inner < 1 or outer <= inner:
        raise ValueError("need 1 <= inner < outer")
    if (outer - inner) % 2 != 0:
        raise ValueError("inner and outer must have equal parity to share a center")
    xs = [f[0] for f in domain.faces]
    ys = [f[1] for f in domain.faces]
    x0 = min(xs) + (max(xs) - min(xs) + 1 - outer) // 2
    y0 = min(ys) + (max(ys) - min(ys) + 1 - outer) // 2
    pad = (outer - inner) // 2
    hole = frozenset(
        (x, y)
        for x in range(x0 + pad, x0 + pad + inner)
        for y in range(y0 + pad, y0 + pad + inner)
    )
    ring = frozenset(
        (x, y)
        for x in range(x0, x0 + outer)
        for y in range(y0, y0 + outer)
    ) - hole
    missing = [f for f in ring if f not in domain.face_set]
    if missing:
        raise ValueError(f"annulus does not fit the domain (missing {missing[0]})")
    # quarter offset keeps the center off every face row, column, and path
    cx = x0 + (outer - 1) / 2 + 0.25
    cy = y0 + (outer - 1) / 2 + 0.25
    return AnnulusGeometry(ring, hole, x0, y0, outer, (cx, cy))


def _chebyshev_near(f: Face, targets: frozenset) -> bool:
    x, y = f
    return any(max(abs(x - tx), abs(y - ty)) <= 1 for tx, ty in targets)


def circuit_by_dual(geom: AnnulusGeometry, high: frozenset) -> bool:
    """No low diagonal path from the hole to the outside => circuit."""
    low = geom.faces - frozenset(high)
    starts = [f for f in low if _chebyshev_near(f, geom.hole)]
    seen = set(starts)
    stack = list(starts)
    while stack:
        f = stack.pop()
        if geom.on_outer_ring(f):
            return False
        x, y = f
        for dx, dy in _X_STEPS:
            g = (x + dx, y + dy)
            if g in low and g not in seen:
                seen.add(g)
                stack.append(g)
    return True


def _winding(loop: list[Face], cx: float, cy: float) -> int:
    w = 0
    for (x1, y1), (x2, y2) in zip(loop, loop[1:] + loop[:1]):
        if y1 == y2 and y1 > cy:
            if x1 < cx < x2:
                w -= 1
            elif x2 < cx < x1:
                w += 1
    return w


def circuit_by_winding(geom: AnnulusGeometry, high: frozenset) -> bool:
    """Search cycles of the high subgraph for nonzero winding.

    The cycle space is spanned by the fundamental cycles of any spanning
    forest, and winding is additive on it, so checking those suffices.
    """
    high = frozenset(high) & geom.faces
    cx, cy = geom.center
    parent: dict[Face, Face | None] = {}
    depth: dict[Face, int] = {}
    order = sorted(high)
    for root in order:
        if root in parent:
            continue
        parent[root] = None
        depth[root] = 0
        queue = [root]
        qi = 0
        while qi < len(queue):
            f = queue[qi]
            qi += 1
            x, y = f
            for dx, dy in _EDGE_STEPS:
                g = (x + dx, y + dy)
                if g in high and g not in parent:
                    parent[g] = f
                    depth[g] = depth[f] + 1
                    queue.append(g)
    seen_edges = set()
    for f in order:
        x, y = f
        for dx, dy in _EDGE_STEPS:
            g = (x + dx, y + dy)
            if g not in high or parent.get(g) == f or parent.get(f) == g:
                continue
            key = (f, g) if f < g else (g, f)
            if key in seen_edges:
                continue
            seen_edges.add(key)
            # fundamental cycle: f up to the common ancestor, then down to g
            up_f, up_g = [f], [g]
            a, b = f, g
            while depth[a] > depth[b]:
                a = parent[a]
                up_f.append(a)
            while depth[b] > depth[a]:
                b = parent[b]
                up_g.append(b)
            while a != b:
                a = parent[a]
                b = parent[b]
                up_f.append(a)
                up_g.append(b)
            loop = up_f + up_g[-2::-1]
            if _winding(loop, cx, cy) != 0:
                return True
    return False


def _high_faces(h: HeightFunction, k: int, geom: AnnulusGeometry) -> frozenset:
    return frozenset(f for f in geom.faces if h.at(f) >= k)


def annulus_circuit(h: HeightFunction, k: int, inner: int, outer: int) -> bool:
    """Does a circuit of faces with h >= k separate the hole from outside?"""
    geom = annulus_geometry(h.domain, inner, outer)
    return circuit_by_dual(geom, _high_faces(h, k, geom))


def annulus_circuit_by_winding(h: HeightFunction, k: int, inner: int, outer: int) -> bool:
    geom = annulus_geometry(h.domain, inner, outer)
    return circuit_by_winding(geom, _high_faces(h, k, geom))


# -- frozen regions ----------------------------------------------------------


@dataclass(frozen=True)
class FreezingCluster:
    """A maximal run of like-typed vertices and the faces they touch."""

    vertices: tuple
    vertex_type: VertexType
    faces: tuple
    inner_diameter: int
    outer_diameter: int

    def __post_init__(self):
        if self.faces:
            if not 1 <= self.inner_diameter <= self.outer_diameter:
                raise ValueError("diameters must satisfy 1 <= inner <= outer")


def _longest_run(positions: list[int], period: int | None) -> int:
    if not positions:
        return 0
    if period is not None and len(set(p % period for p in positions)) == period:
        return period
    xs = sorted(set(positions))
    if period is not None:
        xs = xs + [x + period for x in xs]
    best = run = 1
    for prev, cur in zip(xs, xs[1:]):
        run = run + 1 if cur == prev + 1 else 1
        best = max(best, run)
    if period is not None:
        best = min(best, period)
    return best


def _inner_diameter(domain: Domain, faces: set[Face]) -> int:
    rows: dict[int, list[int]] = {}
    cols: dict[int, list[int]] = {}
    for x, y in faces:
        rows.setdefault(y, []).append(x)
        cols.setdefault(x, []).append(y)
    best = 0
    for xs in rows.values():
        best = max(best, _longest_run(xs, domain.period_x))
    for ys in cols.values():
        best = max(best, _longest_run(ys, domain.period_y))
    return best


def _outer_diameter(domain: Domain, faces: set[Face]) -> int:
    best = 0
    for start in faces:
        dist = {start: 0}
        queue = [start]
        qi = 0
        while qi < len(queue):
            f = queue[qi]
            qi += 1
            for g in domain.neighbors(f, "edge"):
                if g in faces and g not in dist:
                    dist[g] = dist[f] + 1
                    queue.append(g)
        best = max(best, max(dist.values()))
    return best


def freezing_clusters(config: ArrowConfig) -> list[FreezingCluster]:
    """Group like-typed neighbouring vertices; report their face extent.

    Two classified vertices belong together when they are nearest
    neighbours on the vertex lattice and share a type.  The cluster's
    face set is everything its vertices touch; the inner diameter is the
    longest straight face run inside that set, the outer diameter its
    graph diameter under edge adjacency.
    """
    dom = config.domain
    types = classify_all(config)
    comps: list[tuple] = []
    seen: set = set()
    for v in sorted(types):
        if v in seen:
            continue
        t = types[v]
        comp = {v}
        stack = [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            x, y = u
            for dx, dy in _EDGE_STEPS:
                nb = dom.canon_vertex((x + dx, y + dy))
                if nb in types and nb not in seen and types[nb] == t:
                    seen.add(nb)
                    comp.add(nb)
                    stack.append(nb)
        comps.append((tuple(sorted(comp)), t))
    out = []
    for verts, t in comps:
        faces: set[Face] = set()
        for v in verts:
            faces.update(dom.vertex_faces(v))
        out.append(
            FreezingCluster(
                vertices=verts,
                vertex_type=t,
                faces=tuple(sorted(faces)),
                inner_diameter=_inner_diameter(dom, faces),
                outer_diameter=_outer_diameter(dom, faces),
            )
        )
    out.sort(key=lambda c: c.faces[0])
    return out


# -- bridging along the bottom of a strip ------------------------------------


def bridging_interval(domain: Domain, j: int, delta, n: int) -> frozenset:
    """Faces [j*L, (j+1)*L] x {bottom} with L = floor(delta * n)."""
    L = int(Fraction(delta) * n // 1)
    if L < 1:
        raise ValueError("interval length floor(delta * n) must be >= 1")
    ymin = min(f[1] for f in domain.faces)
    faces = frozenset((x, ymin) for x in range(j * L, (j + 1) * L + 1))
    if not faces <= domain.face_set:
        raise ValueError(f"interval {j} leaves the bottom boundary")
    return faces


def bridging_event(h: HeightFunction, j: int, k: int, delta, n: int) -> bool:
    """Are the intervals flanking I_j joined by an h >= k path?"""
    dom = h.domain
    left = bridging_interval(dom, j - 1, delta, n)
    right = bridging_interval(dom, j + 1, delta, n)
    q = CrossingQuery(
        predicate="h>=",
        region=frozenset(dom.faces),
        source=left,
        target=right,
        adjacency="edge",
        k=k,
    )
    return connected(h, q, dom)


# -- queries as events under a measure ---------------------------------------


def box_crossing_query(
    domain: Domain,
    orientation: str,
    predicate: str = "h>=",
    k: int | None = None,
    k2: int | None = None,
    adjacency: str = "edge",
) -> CrossingQuery:
    """Side-to-side crossing of the domain's bounding box.

    Horizontal joins the leftmost and rightmost columns, vertical the
    bottom and top rows.
    """
    if orientation not in ("horizontal", "vertical"):
        raise ValueError("orientation must be horizontal or vertical")
    axis = 0 if orientation == "horizontal" else 1
    lo = min(f[axis] for f in domain.faces)
    hi = max(f[axis] for f in domain.faces)
    src = frozenset(f for f in domain.faces if f[axis] == lo)
    tgt = frozenset(f for f in domain.faces if f[axis] == hi)
    return CrossingQuery(
        predicate=predicate,
        region=frozenset(domain.faces),
        source=src,
        target=tgt,
        adjacency=adjacency,
        k=k,
        k2=k2,
    )


def compile_query(domain: Domain, query: CrossingQuery) -> Callable:
    """Turn a height query into a fast predicate on raw value arrays.

    The returned callable takes the height values in `domain.faces`
    order, as produced by the sampler, and reports the crossing.
    """
    if query.predicate not in _HEIGHT_PREDICATES:
        raise ValueError("only height queries run against sampled heights")
    idx = domain.face_index
    region_idx = [idx[f] for f in sorted(query.region)]
    nbr_fn = _neighbor_fn(domain, query.adjacency)
    nbrs_of = {
        idx[f]: [idx[g] for g in nbr_fn(f) if g in query.region]
        for f in sorted(query.region)
    }
    src = {idx[f] for f in query.source}
    tgt = {idx[f] for f in query.target}
    holds = query.holds_at

    def crossing(values) -> bool:
        good = {i for i in region_idx if holds(values[i])}
        stack = [i for i in src & good]
        seen = set(stack)
        while stack:
            i = stack.pop()
            if i in tgt:
                return True
            for jdx in nbrs_of[i]:
                if jdx in good and jdx not in seen:
                    seen.add(jdx)
                    stack.append(jdx)
        return False

    return crossing


def _as_height_event(domain: Domain, event) -> Callable:
    if isinstance(event, CrossingQuery):
        fast = compile_query(domain, event)
        return lambda hf: fast(hf.values)
    if callable(event):
        return event
    raise TypeError("event must be a CrossingQuery or a predicate")


def exact_height_event_prob(
    domain: Domain, bc: BoundaryCondition, w: Weights, event
) -> float:
    """Probability of the event under the enumerated height measure."""
    ev = _as_height_event(domain, event)
    logs, hits = [], []
    for h in enumerate_heights(domain, bc):
        logs.append(height_log_weight(h, w))
        hits.append(ev(h))
    if not logs:
        raise ValueError("no admissible heights")
    m = max(logs)
    ws = [math.exp(v - m) for v in logs]
    z = sum(ws)
    return sum(wt for wt, hit in zip(ws, hits) if hit) / z


_Z95 = 1.959963984540054


def wilson_interval(successes: int, n: int) -> tuple[float, float]:
    """Wilson 95% bounds; one-sided (but never empty) at 0 or n."""
    p = successes / n
    z2 = _Z95 * _Z95
    denom = 1 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = _Z95 * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    return center - half, center + half


def estimate_event_prob(
    domain: Domain,
    bc: BoundaryCondition,
    w: Weights,
    event,
    samples: int,
    seed=0,
    burn_in: int = 100,
    thin: int = 1,
    engine: str = "auto",
) -> tuple[float, float]:
    """Chain-sample the measure; report p-hat and a Wilson 95% half-width.

    At the boundary (all hits or none) the point estimate sits on an
    endpoint of the interval, so the half-width reported is the distance
    to the far Wilson bound divided by two; it shrinks like 1/n.
    """
    if samples <= 0:
        raise ValueError("need a positive sample count")
    from .sampler import run_chain

    if isinstance(event, CrossingQuery):
        fast = compile_query(domain, event)
        obs = {"hit": lambda st: 1.0 if fast(st.heights) else 0.0}
    else:
        ev = _as_height_event(domain, event)
        obs = {"hit": lambda st: 1.0 if ev(st.height_function()) else 0.0}
    _, rec = run_chain(
        domain, bc, w, sweeps=samples * thin, burn_in=burn_in, thin=thin,
        seed=seed, observables=obs, engine=engine,
    )
    hits = int(rec["hit"].sum())
    n = int(rec["hit"].size)
    lo, hi = wilson_interval(hits, n)
    return hits / n, (hi - lo) / 2


# -- text form of a query ----------------------------------------------------


def _face_token(f) -> str:
    if isinstance(f, tuple):
        return ",".join(str(int(v)) for v in f)
    return str(f)


def _parse_token(tok: str):
    if "," in tok:
        return tuple(int(v) for v in tok.split(","))
    return tok


def query_to_text(q: CrossingQuery) -> str:
    """One-line key=value form; face tuples as x,y joined with '|'."""
    parts = [f"predicate={q.predicate}", f"adjacency={q.adjacency}"]
    if q.k is not None:
        parts.append(f"k={q.k}")
    if q.k2 is not None:
        parts.append(f"k2={q.k2}")
    for name in ("region", "source", "target"):
        faces = sorted(getattr(q, name), key=repr)
        parts.append(f"{name}=" + "|".join(_face_token(f) for f in faces))
    return ";".join(parts)


def query_from_text(text: str) -> CrossingQuery:
    fields: dict[str, str] = {}
    for chunk in text.strip().split(";"):
        if not chunk:
            continue
        key, _, val = chunk.partition("=")
        if not _:
            raise ValueError(f"malformed query field {chunk!r}")
        fields[key.strip()] = val.strip()
    missing = {"predicate", "region", "source", "target"} - set(fields)
    if missing:
        raise ValueError(f"query text lacks {sorted(missing)}")
    sets = {
        name: frozenset(
            _parse_token(tok) for tok in fields[name].split("|") if tok
        )
        for name in ("region", "source", "target")
    }
    return CrossingQuery(
        predicate=fields["predicate"],
        region=sets["region"],
        source=sets["source"],
        target=sets["target"],
        adjacency=fields.get("adjacency", "edge"),
        k=int(fields["k"]) if "k" in fields else None,
        k2=int(fields["k2"]) if "k2" in fields else None,
    )
