"""Finite regions of the hexagonal lattice.

Vertices are integer pairs (p, q) in brick-wall form: (p, q)-(p, q+1) is always
an edge, and (p, q)-(p+1, q) is an edge when p + q is even.  In the drawing the
rung edges are horizontal, so p grows to the right and q grows upwards.

A hexagon is named by its base vertex (P, Q) with P + Q even; its vertices are
(P, Q..Q+2) and (P+1, Q..Q+2).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

HORIZONTAL = "Horizontal"
NWSE = "NWSE"
NESW = "NESW"
CLASSES = (HORIZONTAL, NWSE, NESW)

# face-centre steps in hexagon-base coordinates
NE_STEP = (1, 1)
NW_STEP = (-1, 1)


class LatticeError(ValueError):
    pass


def _canon(u, v):
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Hexagon:
    base: tuple
    vertices: tuple  # cyclic, 6 entries
    edges: tuple  # cyclic edge keys, edges[i] joins vertices[i] and vertices[i+1]


@dataclass(frozen=True, eq=False)
class HexGraph:
    """Immutable lattice region.

    ``edges`` holds both internal and boundary edges in canonical order; a
    configuration is a bitmask over this list.  ``faces`` lists the hexagons
    whose six vertices all lie in the region, as cyclic tuples of edge indices.
    """

    vertices: tuple
    edges: tuple
    classes: tuple
    internal: tuple
    boundary: tuple
    faces: tuple
    face_vertices: tuple
    face_bases: tuple
    topology: str = "planar"
    width: int | None = None
    shape: tuple = field(default=())

    # -- lookups -----------------------------------------------------------
    @cached_property
    def vertex_index(self):
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_index(self):
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def vertex_set(self):
        return frozenset(self.vertices)

    @cached_property
    def incident(self):
        """For each vertex index, the three incident edge indices (sorted)."""
        out = [[] for _ in self.vertices]
        vi = self.vertex_index
        for k, (u, v) in enumerate(self.edges):
            if u in vi:
                out[vi[u]].append(k)
            if v in vi:
                out[vi[v]].append(k)
        return tuple(tuple(sorted(x)) for x in out)

    @cached_property
    def edge_faces(self):
        out = [[] for _ in self.edges]
        for f, cyc in enumerate(self.faces):
            for k in cyc:
                out[k].append(f)
        return tuple(tuple(x) for x in out)

    @cached_property
    def internal_mask(self):
        m = 0
        for k in self.internal:
            m |= 1 << k
        return m

    @cached_property
    def boundary_mask(self):
        m = 0
        for k in self.boundary:
            m |= 1 << k
        return m

    @property
    def n_edges(self):
        return len(self.edges)

    def endpoints_inside(self, k):
        u, v = self.edges[k]
        return [x for x in (u, v) if x in self.vertex_set]

    def other_end(self, k, v):
        a, b = self.edges[k]
        return b if a == v else a

    # -- geometry ----------------------------------------------------------
    def norm(self, v):
        if self.width is None:
            return v
        return (v[0], v[1] % self.width)

    def hexagons_at(self, v):
        """Bases of the three lattice hexagons around vertex v."""
        p, q = v
        if (p + q) % 2 == 0:
            bases = [(p, q), (p, q - 2), (p - 1, q - 1)]
        else:
            bases = [(p, q - 1), (p - 1, q), (p - 1, q - 2)]
        return [self.norm(b) for b in bases]

    def hexagon(self, base):
        return make_hexagon(base, self.width)

    def angle_face(self, v, k1, k2):
        """Base of the hexagon holding the angle formed by edges k1, k2 at v."""
        e1, e2 = self.edges[k1], self.edges[k2]
        for b in self.hexagons_at(v):
            h = self.hexagon(b)
            if e1 in h.edges and e2 in h.edges:
                return b
        raise LatticeError("edges do not form an angle")

    @cached_property
    def face_of_base(self):
        return {b: f for f, b in enumerate(self.face_bases)}

    def to_json(self):
        return {
            "vertices": [list(v) for v in self.vertices],
            "edges": [
                {"u": list(u), "v": list(v), "class": c}
                for (u, v), c in zip(self.edges, self.classes)
            ],
            "faces": [list(f) for f in self.faces],
            "topology": self.topology,
            "boundary": list(self.boundary),
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)


def vertex_xy(v):
    """Integer drawing coordinates (4x, 2y/(sqrt3/2)) of a vertex."""
    p, q = v
    return (6 * p + (1 if (p + q) % 2 == 0 else -1), 2 * q)


def hexagon_xy(base):
    P, Q = base
    return (6 * P + 3, 2 * Q + 2)


def to_plane(xy):
    """Convert integer drawing coordinates to Euclidean ones (unit edges)."""
    return (xy[0] / 4.0, xy[1] * (3 ** 0.5) / 4.0)


def edge_class(u, v):
    if u[0] != v[0]:
        return HORIZONTAL
    lo = u if u[1] < v[1] else v
    # a wrapped seam edge joins q = w-1 to q = 0; the lower end is q = w-1
    if abs(u[1] - v[1]) > 1:
        lo = u if u[1] > v[1] else v
    return NWSE if (lo[0] + lo[1]) % 2 == 0 else NESW


def neighbours(v, width=None):
    p, q = v
    out = [(p, q - 1), (p, q + 1)]
    out.append((p + 1, q) if (p + q) % 2 == 0 else (p - 1, q))
    if width is not None:
        out = [(a, b % width) for a, b in out]
    return out


def make_hexagon(base, width=None):
    P, Q = base
    if (P + Q) % 2:
        raise LatticeError(f"hexagon base {base} must have even parity")
    cyc = [(P, Q), (P, Q + 1), (P, Q + 2), (P + 1, Q + 2), (P + 1, Q + 1), (P + 1, Q)]
    if width is not None:
        cyc = [(a, b % width) for a, b in cyc]
    edges = tuple(_canon(cyc[i], cyc[(i + 1) % 6]) for i in range(6))
    return Hexagon(base, tuple(cyc), edges)


def _assemble(vertex_set, width=None, topology="planar", shape=()):
    vertices = tuple(sorted(vertex_set))
    keys = set()
    for v in vertices:
        for w in neighbours(v, width):
            keys.add(_canon(v, w))
    edges = tuple(sorted(keys))
    eidx = {e: i for i, e in enumerate(edges)}
    internal = tuple(i for i, (u, v) in enumerate(edges) if u in vertex_set and v in vertex_set)
    boundary = tuple(i for i, (u, v) in enumerate(edges) if (u in vertex_set) != (v in vertex_set))
    classes = tuple(edge_class(u, v) for u, v in edges)

    bases = set()
    for v in vertices:
        p, q = v
        cand = [(p, q), (p, q - 2), (p - 1, q - 1)] if (p + q) % 2 == 0 else [
            (p, q - 1), (p - 1, q), (p - 1, q - 2)]
        for b in cand:
            if width is not None:
                b = (b[0], b[1] % width)
            h = make_hexagon(b, width)
            if all(x in vertex_set for x in h.vertices):
                bases.add(b)
    face_bases = tuple(sorted(bases))
    faces, fverts = [], []
    for b in face_bases:
        h = make_hexagon(b, width)
        faces.append(tuple(eidx[e] for e in h.edges))
        fverts.append(h.vertices)
    return HexGraph(
        vertices=vertices,
        edges=edges,
        classes=classes,
        internal=internal,
        boundary=boundary,
        faces=tuple(faces),
        face_vertices=tuple(fverts),
        face_bases=face_bases,
        topology=topology,
        width=width,
        shape=shape,
    )


def box_face_bases(k, n):
    """Hexagon bases of the k-row, n-column rhombic box.

    Rows run north-east, successive rows are stacked north-west.  Entry [j][i]
    is the face in row j and column i.
    """
    p0 = k - 1
    q0 = (k - 1) % 2
    return [[(p0 + i - j, q0 + i + j) for i in range(n)] for j in range(k)]


def build_box(k, n):
    """Rhombic region holding k rows of n hexagonal faces."""
    if int(k) < 1 or int(n) < 1:
        raise LatticeError("box dimensions must be positive")
    verts = set()
    for row in box_face_bases(k, n):
        for b in row:
            verts.update(make_hexagon(b).vertices)
    g = _assemble(verts, shape=("box", k, n))
    if len(g.faces) != k * n:
        raise LatticeError("face count mismatch")  # pragma: no cover
    return g


def build_square(n):
    if int(n) < 1:
        raise LatticeError("square size must be positive")
    g = build_box(n, n)
    return g


def build_cylinder(n, h):
    """Cylinder of circumference n faces and height h rows of faces."""
    if int(n) < 2:
        raise LatticeError("cylinder circumference must be at least 2")
    if int(h) < 1:
        raise LatticeError("cylinder height must be positive")
    width = 2 * n
    verts = set()
    for r in range(h):
        for t in range(n):
            verts.update(make_hexagon((r, (r % 2 + 2 * t) % width), width).vertices)
    g = _assemble(verts, width=width, topology="cylinder", shape=("cylinder", n, h))
    if len(g.faces) != n * h:
        raise LatticeError("face count mismatch")  # pragma: no cover
    return g


def cylinder_rims(g):
    """Boundary edges of a cylinder split by side: (low p side, high p side)."""
    if g.topology != "cylinder":
        raise LatticeError("not a cylinder")
    low, high = [], []
    for k in g.boundary:
        u, v = g.edges[k]
        out, inn = (u, v) if u not in g.vertex_set else (v, u)
        (low if out[0] < inn[0] else high).append(k)
    return tuple(low), tuple(high)


def box_face_grid(g):
    """Face indices of a box arranged as grid[row][column]."""
    if not g.shape or g.shape[0] != "box":
        raise LatticeError("not a box region")
    _, k, n = g.shape
    fb = g.face_of_base
    return [[fb[b] for b in row] for row in box_face_bases(k, n)]


def parse_lattice(text):
    """Parse 'box:k,n', 'square:n' or 'cylinder:n,h'."""
    kind, _, dims = text.partition(":")
    try:
        nums = [int(x) for x in dims.split(",") if x]
    except ValueError as exc:
        raise LatticeError(f"bad lattice spec {text!r}") from exc
    if kind == "box" and len(nums) == 2:
        return build_box(*nums)
    if kind == "square" and len(nums) == 1:
        return build_square(*nums)
    if kind == "cylinder" and len(nums) == 2:
        return build_cylinder(*nums)
    raise LatticeError(f"bad lattice spec {text!r}")


# -- incidence graph ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IncidenceGraph:
    """Vertex/hexagon incidence structure (triangle-contracted dimer graph).

    Node ('v', i) is lattice vertex i; node ('f', base) is a hexagon, either a
    face of the region or a virtual outer hexagon.  Each lattice vertex has one
    incidence edge per angle, stored in ``angles[i]`` as
    (hexagon base, (k1, k2)) with k1 < k2 the two lattice edges of the angle.
    """

    graph: HexGraph
    angles: tuple
    coords: dict

    @cached_property
    def face_nodes(self):
        out = set()
        for lst in self.angles:
            for b, _ in lst:
                out.add(b)
        return sorted(out)

    def is_interior(self, base):
        return base in self.graph.face_of_base

    def degree(self, node):
        kind, key = node
        if kind == "v":
            return len(self.angles[key])
        return sum(1 for lst in self.angles for b, _ in lst if b == key)

    def angle_of(self, vi, base):
        for b, pair in self.angles[vi]:
            if b == base:
                return pair
        raise KeyError(base)


def incidence_graph(g):
    angles = []
    coords = {}
    for i, v in enumerate(g.vertices):
        inc = g.incident[i]
        if len(inc) != 3:
            raise LatticeError("vertex without three incident edges")
        lst = []
        for a in range(3):
            for b in range(a + 1, 3):
                k1, k2 = inc[a], inc[b]
                base = g.angle_face(v, k1, k2)
                lst.append((base, (k1, k2)))
                coords[("f", base)] = hexagon_xy(base)
        lst.sort()
        angles.append(tuple(lst))
        coords[("v", i)] = vertex_xy(v)
    return IncidenceGraph(g, tuple(angles), coords)
