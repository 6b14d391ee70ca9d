"""Perfect-matching counts by Pfaffians, and the dimer form of a boundary condition.

A 1-2 configuration with a fixed boundary is encoded by the hexagon each
region vertex points into (its bisector).  Every hexagon must receive an even
number of bisectors; for a hexagon cut by the region boundary the required
parity of the inside bisectors is fixed by the boundary.  Each hexagon gets a
gadget (a chain of triangles with one terminal per member vertex) accepting
exactly the allowed subsets, so weighted perfect matchings of the resulting
planar graph are in bijection with the interior configurations.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np

from .hexlattice import LatticeError, hexagon_xy, make_hexagon, to_plane, vertex_xy
from .model import GuardError, Weights

MARGINAL_GUARD = 16  # max number of bisector indicators in one marginal


class PlanarityError(ValueError):
    pass


# -- plain weighted graphs ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class PlainGraph:
    """Undirected weighted graph with a straight-line planar drawing."""

    coords: tuple
    edges: tuple  # (u, v, weight) with u < v

    def __post_init__(self):
        seen = set()
        n = len(self.coords)
        for u, v, w in self.edges:
            if not (0 <= u < v < n):
                raise ValueError(f"bad edge ({u}, {v})")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            if not w > 0:
                raise ValueError("edge weights must be positive")
            seen.add((u, v))

    @classmethod
    def build(cls, coords, edges):
        out = []
        for e in edges:
            u, v = e[0], e[1]
            w = e[2] if len(e) > 2 else 1
            out.append((min(u, v), max(u, v), w))
        return cls(tuple(tuple(c) for c in coords), tuple(out))

    @property
    def n(self):
        return len(self.coords)

    @cached_property
    def adjacency(self):
        adj = [[] for _ in self.coords]
        for i, (u, v, _) in enumerate(self.edges):
            adj[u].append((v, i))
            adj[v].append((u, i))
        return adj

    def to_json(self):
        return {
            "vertices": [list(c) for c in self.coords],
            "edges": [{"u": u, "v": v, "w": str(w)} for u, v, w in self.edges],
        }

    def dumps(self):
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, d):
        edges = [(e["u"], e["v"], Fraction(str(e.get("w", 1)))) for e in d["edges"]]
        return cls.build([tuple(map(float, c)) for c in d["vertices"]], edges)


def components(pg):
    comp = [-1] * pg.n
    c = 0
    for s in range(pg.n):
        if comp[s] >= 0:
            continue
        stack = [s]
        comp[s] = c
        while stack:
            x = stack.pop()
            for y, _ in pg.adjacency[x]:
                if comp[y] < 0:
                    comp[y] = c
                    stack.append(y)
        c += 1
    return comp, c


def _rotation(pg):
    """Neighbours of each vertex sorted counter-clockwise by angle."""
    rot = []
    for x, nbrs in enumerate(pg.adjacency):
        x0, y0 = pg.coords[x]
        rot.append(sorted(nbrs, key=lambda t: math.atan2(pg.coords[t[0]][1] - y0, pg.coords[t[0]][0] - x0)))
    pos = [{y: j for j, (y, _) in enumerate(r)} for r in rot]
    return rot, pos


def planar_faces(pg):
    """Faces of the drawing as lists of directed steps (u, v, edge index).

    Bounded faces are traced counter-clockwise.  Raises PlanarityError when
    the face count violates Euler's formula (the drawing has crossings).
    """
    rot, pos = _rotation(pg)
    eid = {}
    for k, (u, v, _) in enumerate(pg.edges):
        eid[(u, v)] = eid[(v, u)] = k
    used = set()
    faces = []
    for u, v, _ in pg.edges:
        for a, b in ((u, v), (v, u)):
            if (a, b) in used:
                continue
            face = []
            x, y = a, b
            while (x, y) not in used:
                used.add((x, y))
                r = rot[y]
                nxt, _ = r[(pos[y][x] + 1) % len(r)]
                face.append((x, y, eid[(x, y)]))
                x, y = y, nxt
            faces.append(face)
    comp, nc = components(pg)
    isolated = sum(1 for a in pg.adjacency if not a)
    # each non-trivial component contributes V - E + F = 2
    nontrivial = nc - isolated
    if pg.n - isolated - len(pg.edges) + len(faces) != 2 * nontrivial:
        raise PlanarityError("drawing is not a plane embedding")
    return faces


def _area(pg, face):
    s = 0.0
    for x, y, _ in face:
        (x1, y1), (x2, y2) = pg.coords[x], pg.coords[y]
        s += x1 * y2 - x2 * y1
    return s / 2


def _outer_faces(pg, faces):
    """Index of the outer face of every component."""
    comp, _ = components(pg)
    best = {}
    for i, f in enumerate(faces):
        c = comp[f[0][0]]
        a = _area(pg, f)
        if c not in best or a < best[c][0]:
            best[c] = (a, i)
    return {i for _, i in best.values()}


def clockwise_count(face, orientation, pg):
    """Steps of a counter-clockwise face walk whose edge points backwards."""
    cnt = 0
    for x, y, k in face:
        u, v, _ = pg.edges[k]
        forward = orientation[k] == ((x, y) == (u, v))
        if not forward:
            cnt += 1
    return cnt


def kasteleyn_orientation(pg):
    """Clockwise-odd orientation by the spanning-tree method.

    Returns a tuple of booleans, True meaning edge (u, v) is oriented u -> v.
    """
    faces = planar_faces(pg)
    outer = _outer_faces(pg, faces)
    ori = [None] * len(pg.edges)
    seen = [False] * pg.n
    for s in range(pg.n):
        if seen[s]:
            continue
        seen[s] = True
        stack = [s]
        while stack:
            x = stack.pop()
            for y, k in pg.adjacency[x]:
                if not seen[y]:
                    seen[y] = True
                    ori[k] = True
                    stack.append(y)
    edge_faces = [[] for _ in pg.edges]
    for i, f in enumerate(faces):
        for _, _, k in f:
            edge_faces[k].append(i)
    pending = [0] * len(faces)
    for i, f in enumerate(faces):
        pending[i] = len({k for _, _, k in f if ori[k] is None})
    queue = [i for i in range(len(faces)) if pending[i] == 1 and i not in outer]
    while queue:
        i = queue.pop()
        if pending[i] != 1:
            continue
        f = faces[i]
        (k,) = {k for _, _, k in f if ori[k] is None}
        ori[k] = True
        if clockwise_count(f, ori, pg) % 2 == 0:
            ori[k] = False
        for j in edge_faces[k]:
            pending[j] = len({kk for _, _, kk in faces[j] if ori[kk] is None})
            if pending[j] == 1 and j not in outer:
                queue.append(j)
    if any(o is None for o in ori):
        raise PlanarityError("could not orient every edge")  # pragma: no cover
    out = tuple(ori)
    if not is_kasteleyn(pg, out, faces):
        raise PlanarityError("orientation check failed")  # pragma: no cover
    return out


def is_kasteleyn(pg, orientation, faces=None):
    faces = planar_faces(pg) if faces is None else faces
    outer = _outer_faces(pg, faces)
    return all(clockwise_count(f, orientation, pg) % 2 == 1
               for i, f in enumerate(faces) if i not in outer)


# -- Pfaffians and determinants ---------------------------------------------

def skew_matrix(pg, orientation, mode="rational"):
    n = pg.n
    if mode == "rational":
        K = [[Fraction(0)] * n for _ in range(n)]
        for (u, v, w), o in zip(pg.edges, orientation):
            w = Fraction(w)
            K[u][v], K[v][u] = (w, -w) if o else (-w, w)
        return K
    K = np.zeros((n, n))
    for (u, v, w), o in zip(pg.edges, orientation):
        w = float(w)
        K[u, v], K[v, u] = (w, -w) if o else (-w, w)
    return K


def pfaffian_exact(A):
    """Pfaffian of a skew-symmetric matrix of Fractions by congruent elimination."""
    A = [list(map(Fraction, row)) for row in A]
    n = len(A)
    if n % 2:
        return Fraction(0)
    res = Fraction(1)
    for k in range(0, n - 1, 2):
        p = next((j for j in range(k + 1, n) if A[k][j] != 0), None)
        if p is None:
            return Fraction(0)
        if p != k + 1:
            A[k + 1], A[p] = A[p], A[k + 1]
            for row in A:
                row[k + 1], row[p] = row[p], row[k + 1]
            res = -res
        piv = A[k][k + 1]
        res *= piv
        rk = A[k + 1]
        for i in range(k + 2, n):
            f = A[k][i] / piv
            if f:
                ri = A[i]
                for j in range(k, n):
                    if rk[j]:
                        ri[j] -= f * rk[j]
                for row in A[k:]:
                    if row[k + 1]:
                        row[i] -= f * row[k + 1]
    return res


def pfaffian_float(A):
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n % 2:
        return 0.0
    res = 1.0
    for k in range(0, n - 1, 2):
        p = k + 1 + int(np.argmax(np.abs(A[k, k + 1:])))
        if A[k, p] == 0:
            return 0.0
        if p != k + 1:
            A[[k + 1, p]] = A[[p, k + 1]]
            A[:, [k + 1, p]] = A[:, [p, k + 1]]
            res = -res
        piv = A[k, k + 1]
        res *= piv
        f = A[k, k + 2:] / piv
        A[k + 2:, :] -= np.outer(f, A[k + 1, :])
        A[:, k + 2:] -= np.outer(A[:, k + 1], f)
    return float(res)


def det_exact(A):
    A = [list(map(Fraction, row)) for row in A]
    n = len(A)
    det = Fraction(1)
    for k in range(n):
        p = next((i for i in range(k, n) if A[i][k] != 0), None)
        if p is None:
            return Fraction(0)
        if p != k:
            A[k], A[p] = A[p], A[k]
            det = -det
        piv = A[k][k]
        det *= piv
        for i in range(k + 1, n):
            f = A[i][k] / piv
            if f:
                for j in range(k, n):
                    A[i][j] -= f * A[k][j]
    return det


class MatchingCount(NamedTuple):
    value: object
    odd: bool = False  # True when the vertex count is odd (no perfect matching)


def pfaffian_count(pg, orientation=None, mode="rational"):
    """Weighted number of perfect matchings as |Pf| of the Kasteleyn matrix."""
    if pg.n % 2:
        return MatchingCount(Fraction(0) if mode == "rational" else 0.0, True)
    if orientation is None:
        orientation = kasteleyn_orientation(pg)
    K = skew_matrix(pg, orientation, mode)
    val = pfaffian_exact(K) if mode == "rational" else pfaffian_float(K)
    return MatchingCount(abs(val), False)


def brute_force_matchings(pg):
    """Weighted perfect-matching count by direct recursion (oracle)."""
    n = pg.n
    adj = [dict() for _ in range(n)]
    for u, v, w in pg.edges:
        adj[u][v] = w
        adj[v][u] = w

    def rec(free):
        if not free:
            return 1
        x = min(free)
        rest = free - {x}
        tot = 0
        for y, w in adj[x].items():
            if y in rest:
                tot += w * rec(rest - {y})
        return tot

    if n % 2:
        return 0
    return rec(frozenset(range(n)))


def random_planar_graph(rng, n, keep=0.75, max_weight=1):
    """Delaunay triangulation of n random points with random edge deletions.

    A random spanning tree is always kept so the graph stays connected.
    """
    from scipy.spatial import Delaunay

    if n < 3:
        pts = rng.random((n, 2))
        edges = [(0, 1)] if n == 2 else []
    else:
        pts = rng.random((n, 2))
        tri = Delaunay(pts)
        es = set()
        for s in tri.simplices:
            a, b, c = map(int, s)
            for u, v in ((a, b), (b, c), (a, c)):
                es.add((min(u, v), max(u, v)))
        es = sorted(es)
        order = rng.permutation(len(es))
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        tree = set()
        for i in order:
            u, v = es[i]
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                tree.add(es[i])
        edges = [e for e in es if e in tree or rng.random() < keep]
    wts = [int(rng.integers(1, max_weight + 1)) for _ in edges]
    return PlainGraph.build([tuple(map(float, p)) for p in pts],
                            [(u, v, Fraction(w)) for (u, v), w in zip(edges, wts)])


# -- boundary hexagons -------------------------------------------------------

@dataclass(frozen=True)
class HexBoundaryClass:
    base: tuple
    type: int
    negative: bool
    inside: tuple  # inside vertices in order along the hexagon
    ends: tuple  # the two boundary edges (indices) closing the inside path

    @property
    def parity(self):
        return "negative" if self.negative else "positive"


def _require_planar(g):
    if g.topology != "planar":
        raise LatticeError("dimer transform needs a planar region")


def crossing_hexagons(g):
    """Bases of the hexagons meeting the region without being faces of it."""
    _require_planar(g)
    out = set()
    for v in g.vertices:
        for b in g.hexagons_at(v):
            if b not in g.face_of_base:
                out.add(b)
    return sorted(out)


def _inside_path(g, base):
    h = make_hexagon(base)
    ins = [x in g.vertex_set for x in h.vertices]
    starts = [i for i in range(6) if ins[i] and not ins[i - 1]]
    if len(starts) != 1:
        raise LatticeError(f"hexagon {base} meets the region in {len(starts)} arcs")
    i = starts[0]
    path = []
    while ins[i % 6]:
        path.append(h.vertices[i % 6])
        i += 1
    first = g.edge_index[h.edges[(starts[0] - 1) % 6]]
    last = g.edge_index[h.edges[(i - 1) % 6]]
    return tuple(path), (first, last)


def classify_boundary(g, tau):
    """Type and parity of every boundary-crossing hexagon under boundary tau.

    The parity of the inside bisectors of a crossing hexagon equals the
    number of its inside vertices minus the number of state changes along the
    inside path, and the latter is fixed by the two boundary edges closing
    the path.  A hexagon is negative when this parity is odd (equivalently
    when an odd number of its outside vertices point into it).
    """
    out = []
    for b in crossing_hexagons(g):
        path, (e1, e2) = _inside_path(g, b)
        m = len(path)
        change = ((tau >> e1) ^ (tau >> e2)) & 1
        neg = bool((m - change) % 2)
        outside = 6 - m
        typ = 1 if outside == 5 else 2 if outside == 4 else 3
        out.append(HexBoundaryClass(b, typ, neg, path, (e1, e2)))
    return out


def parity_vector(g, tau):
    return tuple(int(c.negative) for c in classify_boundary(g, tau))


# -- gadget transform --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DimerGraph:
    """Matching graph of a region with boundary parities.

    Nodes 0..V-1 are the region vertices.  ``port_edge[(i, base)]`` is the
    plain-graph edge used when vertex i points into hexagon ``base`` (absent
    when that choice is forbidden).
    """

    plain: PlainGraph
    region: object
    port_edge: dict
    parities: tuple
    orientation: tuple


@dataclass(frozen=True, eq=False)
class SuperGraph:
    """Gadget graph holding a switch vertex for every crossing hexagon.

    A switch is a pendant vertex hanging off the spare terminal of the
    hexagon's gadget and drawn in the outer face.  Keeping it forces the spare
    terminal out of the gadget; deleting it forces the spare terminal in, which
    flips the accepted parity.  Every parity vector is therefore a vertex
    deletion of one graph, and one Kasteleyn orientation serves them all.
    """

    plain: PlainGraph
    region: object
    port_edge: dict
    crossing: tuple
    switches: tuple  # switch node per crossing hexagon
    keep_parity: tuple  # parity bit for which the switch is kept
    orientation: tuple

    def removed(self, parities):
        return [z for z, p, k in zip(self.switches, parities, self.keep_parity) if p != k]


def _unit(theta):
    return math.cos(theta), math.sin(theta)


def _gadget(coords, edges, centre, members, port_weight, spare):
    """Add the gadget of one hexagon.

    ``members`` are (node, position) pairs in order around the hexagon.  The
    gadget is a chain of triangles over one terminal per member, plus a spare
    terminal with a pendant switch when ``spare`` is set; it accepts the member
    subsets whose size has the parity of the terminal count.  Returns the
    port edge per member and the switch node (or None).
    """
    cx, cy = centre
    m = len(members)
    angles = [math.atan2(y - cy, x - cx) for _, (x, y) in members]
    # unwrap along the path so interpolation stays between neighbours
    for i in range(1, m):
        while angles[i] - angles[i - 1] > math.pi:
            angles[i] -= 2 * math.pi
        while angles[i] - angles[i - 1] < -math.pi:
            angles[i] += 2 * math.pi
    step = (angles[1] - angles[0]) if m > 1 else math.pi / 3

    def node(r, th):
        ux, uy = _unit(th)
        coords.append((cx + r * ux, cy + r * uy))
        return len(coords) - 1

    def link(u, v, w=1):
        edges.append((min(u, v), max(u, v), w))
        return len(edges) - 1

    terms = [node(0.6, a) for a in angles]
    ports = {v: link(v, terms[j], port_weight[j]) for j, (v, _) in enumerate(members)}
    switch = None
    if spare:
        angles = angles + [angles[-1] + step]
        terms.append(node(0.6, angles[-1]))
        # towards the outside vertex, hence in the outer face
        switch = node(0.85, angles[-1])
        link(terms[-1], switch)
    M = len(terms)
    if M == 2:
        link(*terms)
        return ports, switch
    prev = None
    for j in range(M - 2):
        tri = [terms[0], terms[1]] if j == 0 else [prev, terms[j + 1]]
        if j == M - 3:
            tri.append(terms[M - 1])
        else:
            lo, hi = angles[j + 1], angles[j + 2]
            a_out = node(0.3, lo + (hi - lo) / 3)
            b_next = node(0.3, lo + 2 * (hi - lo) / 3)
            tri.append(a_out)
            link(a_out, b_next)
            prev = b_next
        x, y, z = tri
        link(x, y), link(y, z), link(x, z)
    return ports, switch


def _port_weights(g, w, base, verts):
    hedges = set(make_hexagon(base).edges)
    out = []
    for v in verts:
        i = g.vertex_index[v]
        away = [k for k in g.incident[i] if g.edges[k] not in hedges]
        out.append(w.of(g.classes[away[0]]))
    return out


@lru_cache(maxsize=64)
def gadget_supergraph(g, w=None):
    _require_planar(g)
    w = w or Weights()
    coords = [to_plane(vertex_xy(v)) for v in g.vertices]
    edges = []
    port_edge = {}
    vi = g.vertex_index
    cross = crossing_hexagons(g)
    todo = [(b, list(make_hexagon(b).vertices), False) for b in g.face_bases]
    todo += [(b, list(_inside_path(g, b)[0]), True) for b in cross]
    switches, keep = [], []
    for b, verts, spare in todo:
        members = [(vi[v], coords[vi[v]]) for v in verts]
        ports, z = _gadget(coords, edges, to_plane(hexagon_xy(b)), members,
                           _port_weights(g, w, b, verts), spare)
        for i, k in ports.items():
            port_edge[(i, b)] = k
        if spare:
            switches.append(z)
            # with the switch kept the members must supply parity len(verts)
            keep.append(len(verts) % 2)
    pg = PlainGraph.build(coords, edges)
    return SuperGraph(pg, g, port_edge, tuple(cross), tuple(switches), tuple(keep),
                      kasteleyn_orientation(pg))


def _delete_vertices(pg, orientation, drop):
    drop = set(drop)
    keep = [i for i in range(pg.n) if i not in drop]
    new = {old: j for j, old in enumerate(keep)}
    edges, ori, emap = [], [], {}
    for k, ((u, v, wt), o) in enumerate(zip(pg.edges, orientation)):
        if u in new and v in new:
            emap[k] = len(edges)
            edges.append((new[u], new[v], wt))
            ori.append(o)
    return PlainGraph(tuple(pg.coords[i] for i in keep), tuple(edges)), tuple(ori), emap


def gadget_transform(g, tau=None, w=None, parities=None):
    """Matching graph whose weighted perfect matchings are the configurations.

    Either a boundary mask ``tau`` or an explicit ``parities`` vector (one bit
    per crossing hexagon, 1 = negative) must be given.  Only the parities
    matter, so boundaries with equal parity vectors give identical graphs.
    """
    _require_planar(g)
    if parities is None:
        if tau is None:
            raise ValueError("need a boundary or a parity vector")
        parities = parity_vector(g, tau)
    parities = tuple(int(p) for p in parities)
    sg = gadget_supergraph(g, w or Weights())
    if len(parities) != len(sg.crossing):
        raise ValueError("parity vector length mismatch")
    if sum(parities) % 2 != sum(sg.keep_parity) % 2:
        raise ValueError("inadmissible parity vector (odd negative total)")
    pg, ori, emap = _delete_vertices(sg.plain, sg.orientation, sg.removed(parities))
    ports = {key: emap[k] for key, k in sg.port_edge.items()}
    return DimerGraph(pg, g, ports, parities, ori)


# -- marginals through bisector indicators -----------------------------------

def _edge_paths(g, anchor, targets):
    """BFS tree in the line graph; returns per target the list of steps
    (vertex index, hexagon base) from the anchor edge."""
    vi = g.vertex_index
    prev = {anchor: None}
    queue = [anchor]
    for k in queue:
        for x in g.edges[k]:
            if x not in vi:
                continue
            i = vi[x]
            for k2 in g.incident[i]:
                if k2 not in prev:
                    prev[k2] = (k, i)
                    queue.append(k2)
    out = {}
    for t in targets:
        if t not in prev:
            raise ValueError(f"edge {t} not connected to the anchor")
        steps = []
        k = t
        while prev[k] is not None:
            k0, i = prev[k]
            steps.append((i, g.angle_face(g.vertices[i], k0, k)))
            k = k0
        out[t] = steps[::-1]
    return out


def _moebius_down(F, n):
    """Exact-pattern probabilities from 'all of U present' probabilities."""
    P = list(F)
    for j in range(n):
        bit = 1 << j
        for s in range(1 << n):
            if not s & bit:
                P[s] = P[s] - P[s | bit]
    return P


class _Plan:
    """Indicator bookkeeping shared by the exact and float marginal routes."""

    def __init__(self, g, delta, anchor):
        self.delta = list(delta)
        self.anchor = anchor
        paths = _edge_paths(g, anchor, self.delta)
        ind = sorted({s for p in paths.values() for s in p})
        if len(ind) > MARGINAL_GUARD:
            raise GuardError(f"{len(ind)} bisector indicators exceed {MARGINAL_GUARD}")
        self.indicators = ind
        pos = {s: j for j, s in enumerate(ind)}
        self.paths = {t: [pos[s] for s in p] for t, p in paths.items()}

    def restriction(self, pattern, anchor_state):
        out = 0
        for t in self.delta:
            st = anchor_state
            for j in self.paths[t]:
                st ^= 1 ^ ((pattern >> j) & 1)
            if st:
                out |= 1 << t
        return out


def _subset_endpoints(dg, ind, U):
    pg = dg.plain
    used, idx, ws = set(), [], []
    for j in range(len(ind)):
        if not (U >> j) & 1:
            continue
        k = dg.port_edge.get(ind[j])
        if k is None:
            return None
        u, v, wt = pg.edges[k]
        if u in used or v in used:
            return None
        used.update((u, v))
        idx.extend((u, v))
        ws.append(wt)
    return idx, ws


def _all_present_exact(dg, ind):
    K = skew_matrix(dg.plain, dg.orientation, "rational")
    Z = abs(pfaffian_exact(K))
    out = []
    for U in range(1 << len(ind)):
        r = _subset_endpoints(dg, ind, U)
        if r is None:
            out.append(Fraction(0))
            continue
        idx, ws = r
        drop = set(idx)
        keep = [i for i in range(len(K)) if i not in drop]
        sub = [[K[a][b] for b in keep] for a in keep]
        val = abs(pfaffian_exact(sub))
        for wt in ws:
            val *= Fraction(wt)
        out.append(val / Z)
    return out, Z


def _all_present_float(dg, ind, K=None):
    if K is None:
        K = skew_matrix(dg.plain, dg.orientation, "float")
    nodes = sorted({x for s in ind if s in dg.port_edge for x in dg.plain.edges[dg.port_edge[s]][:2]})
    pos = {x: i for i, x in enumerate(nodes)}
    E = np.zeros((K.shape[0], len(nodes)))
    for x, i in pos.items():
        E[x, i] = 1.0
    X = np.linalg.solve(K, E)  # columns of K^{-1}
    Kinv = X[nodes, :]
    out = []
    for U in range(1 << len(ind)):
        r = _subset_endpoints(dg, ind, U)
        if r is None:
            out.append(0.0)
            continue
        idx, ws = r
        if not idx:
            out.append(1.0)
            continue
        ii = [pos[x] for x in idx]
        val = math.sqrt(abs(np.linalg.det(Kinv[np.ix_(ii, ii)])))
        for wt in ws:
            val *= float(wt)
        out.append(val)
    return out


def _default_anchor(g, delta):
    if not g.boundary:
        raise ValueError("region has no boundary edge to anchor on")
    dist = _edge_paths(g, delta[0], list(g.boundary)) if delta else {}
    return min(g.boundary, key=lambda k: (len(dist.get(k, ())), k))


def boundary_marginal(g, w, tau, delta, mode="float", modulo=False, dg=None):
    """Law of the restriction to edge set ``delta`` under boundary ``tau``.

    Probabilities come from Pfaffians of the gadget graph with bisector
    indicators pinned.  Keys are edge masks; with ``modulo`` a restriction and
    its complement on ``delta`` are merged under the smaller mask.
    """
    delta = sorted(delta)
    if not delta:
        return {0: Fraction(1) if mode == "rational" else 1.0}
    if dg is None:
        dg = gadget_transform(g, tau, w)
    if modulo:
        anchor, a_state = delta[0], 0
    else:
        anchor = _default_anchor(g, delta)
        a_state = (tau >> anchor) & 1
    plan = _Plan(g, delta, anchor)
    ind = plan.indicators
    if mode == "rational":
        F, _ = _all_present_exact(dg, ind)
    else:
        F = _all_present_float(dg, ind)
    P = _moebius_down(F, len(ind))
    full = sum(1 << k for k in delta)
    out = {}
    for s, p in enumerate(P):
        if (mode == "rational" and p == 0) or (mode != "rational" and abs(p) < 1e-15):
            continue
        key = plan.restriction(s, a_state)
        if modulo:
            key = min(key, key ^ full)
        out[key] = out.get(key, 0) + p
    return out


def partition_function(g, w, tau, mode="rational"):
    """Z(tau) as a Pfaffian (0 when tau is inadmissible)."""
    dg = gadget_transform(g, tau, w)
    return pfaffian_count(dg.plain, dg.orientation, mode).value


def parity_classes(sg):
    """All parity vectors with the admissible total parity."""
    B = len(sg.crossing)
    want = sum(sg.keep_parity) % 2
    for bits in range(1 << B):
        vec = tuple((bits >> j) & 1 for j in range(B))
        if sum(vec) % 2 == want:
            yield vec


def class_laws(g, w, delta, rel_tol=1e-9):
    """Modulo-complement law on ``delta`` for every admissible parity class.

    One skew matrix serves all classes: a class deletes the switch rows and
    columns it removes.  Classes whose matrix is singular (relative to the
    largest determinant seen) admit no configuration and are dropped.
    Returns (laws, parity vectors).
    """
    delta = sorted(delta)
    sg = gadget_supergraph(g, w)
    K = skew_matrix(sg.plain, sg.orientation, "float")
    plan = _Plan(g, delta, delta[0])
    ind = plan.indicators
    nodes = sorted({x for s in ind if s in sg.port_edge for x in sg.plain.edges[sg.port_edge[s]][:2]})
    pos = {x: i for i, x in enumerate(nodes)}
    # subsets grouped by size: endpoint index arrays and weight products
    groups = {}
    for U in range(1, 1 << len(ind)):
        r = _subset_endpoints(sg, ind, U)
        if r is None:
            continue
        idx, ws = r
        groups.setdefault(len(idx), []).append((U, [pos[x] for x in idx], math.prod(float(x) for x in ws)))
    packed = [(np.array([u for u, _, _ in grp]), np.array([ii for _, ii, _ in grp]),
               np.array([p for _, _, p in grp])) for grp in groups.values()]
    full = sum(1 << k for k in delta)
    n = K.shape[0]
    laws, vecs, logdets = [], [], []
    for vec in parity_classes(sg):
        drop = set(sg.removed(vec))
        keep = np.array([i for i in range(n) if i not in drop])
        sign, ld = np.linalg.slogdet(K[np.ix_(keep, keep)])
        if sign == 0:
            continue
        where = np.searchsorted(keep, nodes)
        Kc = K[np.ix_(keep, keep)]
        E = np.zeros((len(keep), len(nodes)))
        E[where, np.arange(len(nodes))] = 1.0
        X = np.linalg.solve(Kc, E)[where, :]
        F = np.zeros(1 << len(ind))
        F[0] = 1.0
        for Us, II, W in packed:
            sub = X[II[:, :, None], II[:, None, :]]
            F[Us] = np.sqrt(np.abs(np.linalg.det(sub))) * W
        P = _moebius_down(list(F), len(ind))
        law = {}
        for s, p in enumerate(P):
            if abs(p) < 1e-15:
                continue
            key = plan.restriction(s, 0)
            key = min(key, key ^ full)
            law[key] = law.get(key, 0.0) + p
        laws.append(law)
        vecs.append(vec)
        logdets.append(ld)
    if not logdets:
        return [], []
    # det K = Z^2, so a relative tolerance on Z is a doubled one on the log scale
    top = max(logdets)
    cut = top + 2 * math.log(rel_tol)
    keep_i = [i for i, ld in enumerate(logdets) if ld >= cut]
    return [laws[i] for i in keep_i], [vecs[i] for i in keep_i]
