"""Finite square-lattice geometry shared by every model module.

Conventions, fixed once and used everywhere:

* Faces are unit squares addressed by integer centers ``(x, y)``.  The face
  ``(x, y)`` has the four corner vertices ``(x, y)``, ``(x+1, y)``,
  ``(x, y+1)``, ``(x+1, y+1)``; equivalently the vertex labelled ``(i, j)``
  sits at the geometric point ``(i - 1/2, j - 1/2)``.
* Face parity is ``(x + y) mod 2``; even faces have even coordinate sum.
  A wrapped axis must have even period or the 2-coloring breaks.
* Edges are named by kind and base vertex:
  ``("v", i, j)`` runs from vertex ``(i, j)`` to ``(i, j+1)`` and separates
  face ``(i-1, j)`` (west) from ``(i, j)`` (east); its canonical direction
  is north.  ``("h", i, j)`` runs from ``(i, j)`` to ``(i+1, j)`` and
  separates ``(i, j-1)`` (south) from ``(i, j)`` (north); canonical
  direction east.
* A domain's edge set contains every edge touching at least one member
  face; an edge is *interior* when both its faces are members, a vertex is
  *interior* when all four incident faces are members.  Arrow
  configurations live on interior edges only.
* Two faces are edge-adjacent when they share an edge (4 neighbours) and
  x-adjacent when they share at least one corner vertex (8 neighbours:
  the 4 edge-adjacent plus the 4 diagonal ones).  The x relation is the
  one under which crossings of a set are exactly dual to edge-crossings
  of its complement on rectangles, which downstream event detectors rely
  on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal

__all__ = [
    "Face",
    "Vertex",
    "Edge",
    "Domain",
    "Plaquette",
    "build_domain",
    "box",
    "strip",
    "cylinder",
    "torus",
    "annulus",
]

Face = tuple[int, int]
Vertex = tuple[int, int]
Edge = tuple[str, int, int]

# Offsets realizing the two adjacency modes.
_EDGE_OFFSETS: tuple[Face, ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))
_DIAG_OFFSETS: tuple[Face, ...] = ((1, 1), (1, -1), (-1, 1), (-1, -1))
_X_OFFSETS: tuple[Face, ...] = _EDGE_OFFSETS + _DIAG_OFFSETS


@dataclass(frozen=True)
class Plaquette:
    """The four faces and four edges around one vertex."""

    vertex: Vertex
    faces: tuple[Face, Face, Face, Face]  # sw, se, nw, ne
    edges: tuple[Edge, Edge, Edge, Edge]  # n, e, s, w


class Domain:
    """Immutable finite region of the square lattice.

    Built through :func:`build_domain` or the shape helpers; do not mutate
    after construction (shared freely across threads).
    """

    __slots__ = (
        "shape",
        "params",
        "period_x",
        "period_y",
        "faces",
        "face_set",
        "face_index",
        "vertices",
        "vertex_set",
        "edges",
        "edge_set",
        "interior_edges",
        "interior_edge_set",
        "interior_edge_index",
        "interior_vertices",
        "interior_vertex_set",
        "boundary_faces",
    )

    def __init__(
        self,
        shape: str,
        params: dict,
        faces: Iterable[Face],
        period_x: int | None,
        period_y: int | None,
    ) -> None:
        if period_x is not None and period_x % 2 != 0:
            raise ValueError(
                f"wrapped x-axis period must be even, got {period_x}: "
                "odd periods break the face 2-coloring"
            )
        if period_y is not None and period_y % 2 != 0:
            raise ValueError(
                f"wrapped y-axis period must be even, got {period_y}: "
                "odd periods break the face 2-coloring"
            )
        self.shape = shape
        self.params = dict(params)
        self.period_x = period_x
        self.period_y = period_y

        canon = self.canon_face
        face_set = {canon(f) for f in faces}
        if not face_set:
            raise ValueError("domain has no faces")
        # Row-major deterministic order: by (y, x).
        self.faces: tuple[Face, ...] = tuple(sorted(face_set, key=lambda f: (f[1], f[0])))
        self.face_set = frozenset(face_set)
        self.face_index = {f: i for i, f in enumerate(self.faces)}

        vset: set[Vertex] = set()
        eset: set[Edge] = set()
        for (x, y) in self.faces:
            for v in ((x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)):
                vset.add(self.canon_vertex(v))
            for e in (("v", x, y), ("v", x + 1, y), ("h", x, y), ("h", x, y + 1)):
                eset.add(self.canon_edge(e))
        self.vertices: tuple[Vertex, ...] = tuple(sorted(vset, key=lambda v: (v[1], v[0])))
        self.vertex_set = frozenset(vset)
        self.edges: tuple[Edge, ...] = tuple(sorted(eset))
        self.edge_set = frozenset(eset)

        interior_e = tuple(
            e for e in self.edges if all(f in self.face_set for f in self.edge_faces(e))
        )
        self.interior_edges = interior_e
        self.interior_edge_set = frozenset(interior_e)
        self.interior_edge_index = {e: i for i, e in enumerate(interior_e)}
        interior_v = tuple(
            v
            for v in self.vertices
            if all(f in self.face_set for f in self.vertex_faces(v))
        )
        self.interior_vertices = interior_v
        self.interior_vertex_set = frozenset(interior_v)

        self.boundary_faces: tuple[Face, ...] = tuple(
            f
            for f in self.faces
            if any(
                self.canon_face((f[0] + dx, f[1] + dy)) not in self.face_set
                for dx, dy in _EDGE_OFFSETS
            )
        )
        self._check_parity_coloring()

    # -- canonical coordinates under wrapping --------------------------------

    def canon_face(self, f: Face) -> Face:
        x, y = f
        if self.period_x is not None:
            x %= self.period_x
        if self.period_y is not None:
            y %= self.period_y
        return (x, y)

    def canon_vertex(self, v: Vertex) -> Vertex:
        return self.canon_face(v)  # same wrapping arithmetic

    def canon_edge(self, e: Edge) -> Edge:
        kind, i, j = e
        if self.period_x is not None:
            i %= self.period_x
        if self.period_y is not None:
            j %= self.period_y
        return (kind, i, j)

    # -- incidence -----------------------------------------------------------

    def parity(self, f: Face) -> int:
        x, y = self.canon_face(f)
        return (x + y) % 2

    def edge_faces(self, e: Edge) -> tuple[Face, Face]:
        """The two faces separated by *e*.

        For ``("v", i, j)``: (west, east).  For ``("h", i, j)``:
        (south, north).  Faces are canonical but not membership-filtered.
        """
        kind, i, j = e
        if kind == "v":
            return (self.canon_face((i - 1, j)), self.canon_face((i, j)))
        return (self.canon_face((i, j - 1)), self.canon_face((i, j)))

    def edge_vertices(self, e: Edge) -> tuple[Vertex, Vertex]:
        kind, i, j = e
        if kind == "v":
            return (self.canon_vertex((i, j)), self.canon_vertex((i, j + 1)))
        return (self.canon_vertex((i, j)), self.canon_vertex((i + 1, j)))

    def vertex_faces(self, v: Vertex) -> tuple[Face, Face, Face, Face]:
        """Faces around vertex ``(i, j)`` in (sw, se, nw, ne) order."""
        i, j = v
        c = self.canon_face
        return (c((i - 1, j - 1)), c((i, j - 1)), c((i - 1, j)), c((i, j)))

    def vertex_edges(self, v: Vertex) -> tuple[Edge, Edge, Edge, Edge]:
        """Edges at vertex ``(i, j)`` in (n, e, s, w) order."""
        i, j = v
        c = self.canon_edge
        return (c(("v", i, j)), c(("h", i, j)), c(("v", i, j - 1)), c(("h", i - 1, j)))

    def plaquette(self, v: Vertex) -> Plaquette:
        v = self.canon_vertex(v)
        return Plaquette(vertex=v, faces=self.vertex_faces(v), edges=self.vertex_edges(v))

    def is_interior_vertex(self, v: Vertex) -> bool:
        return self.canon_vertex(v) in self.interior_vertex_set

    # -- adjacency -----------------------------------------------------------

    def neighbors(self, f: Face, mode: Literal["edge", "x"] = "edge") -> set[Face]:
        f = self.canon_face(f)
        if f not in self.face_set:
            raise ValueError(f"face {f} not in domain")
        offsets = _EDGE_OFFSETS if mode == "edge" else _X_OFFSETS
        out = set()
        for dx, dy in offsets:
            g = self.canon_face((f[0] + dx, f[1] + dy))
            if g != f and g in self.face_set:
                out.add(g)
        return out

    def same_parity_x_neighbors(self, f: Face) -> set[Face]:
        """The diagonal x-neighbours; the only same-parity ones."""
        f = self.canon_face(f)
        out = set()
        for dx, dy in _DIAG_OFFSETS:
            g = self.canon_face((f[0] + dx, f[1] + dy))
            if g != f and g in self.face_set:
                out.add(g)
        return out

    def distances_from(self, source: Face) -> dict[Face, int]:
        """Edge-adjacency graph distance from *source* to every reachable face."""
        source = self.canon_face(source)
        if source not in self.face_set:
            raise ValueError(f"face {source} not in domain")
        dist = {source: 0}
        frontier = [source]
        while frontier:
            nxt = []
            for f in frontier:
                for g in self.neighbors(f, "edge"):
                    if g not in dist:
                        dist[g] = dist[f] + 1
                        nxt.append(g)
            frontier = nxt
        return dist

    def graph_distance(self, f: Face, g: Face) -> int:
        d = self.distances_from(f).get(self.canon_face(g))
        if d is None:
            raise ValueError(f"faces {f} and {g} are not connected")
        return d

    # -- internal ------------------------------------------------------------

    def _check_parity_coloring(self) -> None:
        # Adjacent member faces must carry opposite parity; guaranteed by
        # construction for unwrapped axes, and by the even-period guard for
        # wrapped ones, but verified here because everything downstream
        # assumes it.
        for f in self.faces:
            pf = self.parity(f)
            for g in self.neighbors(f, "edge"):
                if self.parity(g) == pf:
                    raise AssertionError(f"parity 2-coloring broken at {f} / {g}")

    def __repr__(self) -> str:  # pragma: no cover
        return (
            f"Domain(shape={self.shape!r}, faces={len(self.faces)}, "
            f"period_x={self.period_x}, period_y={self.period_y})"
        )


# -- shape constructors ------------------------------------------------------


def box(width: int, height: int, x0: int = 0, y0: int = 0) -> Domain:
    """Axis-aligned box of ``width * height`` faces, south-west face at ``(x0, y0)``."""
    if width < 1 or height < 1:
        raise ValueError("box dimensions must be >= 1")
    faces = [(x0 + x, y0 + y) for x in range(width) for y in range(height)]
    return Domain(
        "box", {"width": width, "height": height, "x0": x0, "y0": y0}, faces, None, None
    )


def strip(halfwidth: int, height: int) -> Domain:
    """Box spanning ``x in [-halfwidth, halfwidth]``, ``y in [0, height)``."""
    if halfwidth < 0 or height < 1:
        raise ValueError("strip needs halfwidth >= 0 and height >= 1")
    faces = [(x, y) for x in range(-halfwidth, halfwidth + 1) for y in range(height)]
    return Domain(
        "strip", {"halfwidth": halfwidth, "height": height}, faces, None, None
    )


def cylinder(circumference: int, height: int) -> Domain:
    """x-wrapped band: ``circumference`` (even) faces around, ``height`` rows."""
    if circumference < 2:
        raise ValueError("cylinder circumference must be >= 2")
    if height < 1:
        raise ValueError("cylinder height must be >= 1")
    faces = [(x, y) for x in range(circumference) for y in range(height)]
    return Domain(
        "cylinder",
        {"circumference": circumference, "height": height},
        faces,
        circumference,
        None,
    )


def torus(nx: int, ny: int | None = None) -> Domain:
    """Fully wrapped ``nx * ny`` torus; both periods must be even."""
    if ny is None:
        ny = nx
    if nx < 2 or ny < 2:
        raise ValueError("torus periods must be >= 2")
    faces = [(x, y) for x in range(nx) for y in range(ny)]
    return Domain("torus", {"nx": nx, "ny": ny}, faces, nx, ny)


def annulus(inner: int, outer: int) -> Domain:
    """Box of side *outer* with a centered ``inner * inner`` hole masked out.

    ``outer - inner`` must be even so the hole is exactly centered; the hole
    may be empty (``inner = 0``), in which case this is just a box tagged as
    an annulus.
    """
    if outer < 1 or inner < 0 or inner >= outer:
        raise ValueError("need 0 <= inner < outer")
    if (outer - inner) % 2 != 0:
        raise ValueError("outer - inner must be even to center the hole")
    off = (outer - inner) // 2
    hole = {(off + x, off + y) for x in range(inner) for y in range(inner)}
    faces = [
        (x, y) for x in range(outer) for y in range(outer) if (x, y) not in hole
    ]
    return Domain("annulus", {"inner": inner, "outer": outer}, faces, None, None)


_SHAPES = {
    "box": box,
    "strip": strip,
    "cylinder": cylinder,
    "torus": torus,
    "annulus": annulus,
}


def build_domain(shape: str, **params) -> Domain:
    """Uniform entry point: ``build_domain("torus", nx=4, ny=4)`` etc."""
    try:
        ctor = _SHAPES[shape]
    except KeyError:
        raise ValueError(f"unknown shape {shape!r}; choose from {sorted(_SHAPES)}")
    return ctor(**params)
