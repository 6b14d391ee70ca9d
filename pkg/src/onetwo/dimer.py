"""Dimer view of 1-2 configurations on the triangle-contracted incidence graph.

Each lattice vertex picks the one angle whose two sides share a state.  Two
configurations are compared through the cycles formed by the vertices where
their picks differ; the distance is the number of lattice edges enclosed by
those cycles.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache

from .hexlattice import hexagon_xy, incidence_graph, make_hexagon, vertex_xy
from .model import is_valid


class DimerError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Move:
    kind: str  # "edge" or "face"
    index: int

    def to_json(self):
        return {"kind": self.kind, "index": self.index}

    @classmethod
    def from_json(cls, d):
        return cls(d["kind"], int(d["index"]))


# -- legality ----------------------------------------------------------------

def _edge_ends(g, k):
    vi = g.vertex_index
    return [vi[x] for x in g.edges[k] if x in vi]


def other_present(g, cfg, k, vi):
    return [j for j in g.incident[vi] if j != k and (cfg >> j) & 1]


def edge_flip_legal(g, cfg, k):
    if not 0 <= k < g.n_edges or k in _boundary_set(g):
        return False
    return all(len(other_present(g, cfg, k, i)) == 1 for i in _edge_ends(g, k))


@lru_cache(maxsize=None)
def _boundary_set_cached(g):
    return frozenset(g.boundary)


def _boundary_set(g):
    return _boundary_set_cached(g)


@lru_cache(maxsize=None)
def face_spokes(g):
    """For each face, the six external edges g_i at its vertices, in cycle order."""
    out = []
    for f, verts in enumerate(g.face_vertices):
        cyc = set(g.faces[f])
        sp = []
        for v in verts:
            vi = g.vertex_index[v]
            (k,) = [j for j in g.incident[vi] if j not in cyc]
            sp.append(k)
        out.append(tuple(sp))
    return tuple(out)


@lru_cache(maxsize=None)
def _face_masks(g):
    """Per face: (mask of face edges, odd-position mask, spoke masks)."""
    out = []
    for f, cyc in enumerate(g.faces):
        even = (1 << cyc[0]) | (1 << cyc[2]) | (1 << cyc[4])
        odd = (1 << cyc[1]) | (1 << cyc[3]) | (1 << cyc[5])
        sp = face_spokes(g)[f]
        s_even = (1 << sp[0]) | (1 << sp[2]) | (1 << sp[4])
        s_odd = (1 << sp[1]) | (1 << sp[3]) | (1 << sp[5])
        out.append((even, odd, s_even, s_odd))
    return tuple(out)


def face_alternating(g, cfg, f):
    even, odd, _, _ = _face_masks(g)[f]
    x = cfg & (even | odd)
    return x == even or x == odd


def face_rotate_legal(g, cfg, f):
    """Face edges alternate and the external edges alternate around the face."""
    if not 0 <= f < len(g.faces):
        return False
    even, odd, s_even, s_odd = _face_masks(g)[f]
    x = cfg & (even | odd)
    if x != even and x != odd:
        return False
    s = cfg & (s_even | s_odd)
    return s == s_even or s == s_odd


def move_mask(g, m):
    if m.kind == "edge":
        return 1 << m.index
    if m.kind == "face":
        even, odd, _, _ = _face_masks(g)[m.index]
        return even | odd
    raise DimerError(f"unknown move kind {m.kind!r}")


def is_legal(g, cfg, m):
    if m.kind == "edge":
        return 0 <= m.index < g.n_edges and edge_flip_legal(g, cfg, m.index)
    if m.kind == "face":
        return face_rotate_legal(g, cfg, m.index)
    return False


def apply_move(g, cfg, m):
    if not is_legal(g, cfg, m):
        raise DimerError(f"illegal move {m} at this configuration")
    return cfg ^ move_mask(g, m)


def legal_moves(g, cfg):
    out = [Move("edge", k) for k in g.internal if edge_flip_legal(g, cfg, k)]
    out += [Move("face", f) for f in range(len(g.faces)) if face_rotate_legal(g, cfg, f)]
    return out


# -- bisector correspondence -------------------------------------------------

@lru_cache(maxsize=None)
def _incidence(g):
    return incidence_graph(g)


def to_bisector(g, cfg):
    """Tuple giving, per vertex, the base of the hexagon holding its selected angle."""
    ig = _incidence(g)
    out = []
    for i, angles in enumerate(ig.angles):
        pick = None
        for base, (k1, k2) in angles:
            if ((cfg >> k1) & 1) == ((cfg >> k2) & 1):
                if pick is not None:
                    raise DimerError("configuration violates the degree constraint")
                pick = base
        if pick is None:
            raise DimerError("configuration violates the degree constraint")
        out.append(pick)
    return tuple(out)


def from_bisector(g, bis, anchor):
    """Rebuild the configuration from bisector picks and one known edge state.

    ``anchor`` is either ``(edge_index, state)`` or a boundary mask; in the
    latter case every boundary edge must come out matching.
    """
    ig = _incidence(g)
    if len(bis) != len(g.vertices):
        raise DimerError("bisector length mismatch")
    # relation[k] = list of (j, flip) meaning state(j) = state(k) ^ flip
    rel = [[] for _ in g.edges]
    for i, base in enumerate(bis):
        try:
            k1, k2 = ig.angle_of(i, base)
        except KeyError:
            raise DimerError(f"vertex {i} has no angle in hexagon {base}") from None
        (k3,) = [k for k in g.incident[i] if k not in (k1, k2)]
        for a, b, flip in ((k1, k2, 0), (k1, k3, 1), (k2, k3, 1)):
            rel[a].append((b, flip))
            rel[b].append((a, flip))
    if isinstance(anchor, tuple):
        k0, s0 = anchor
        check = {}
    else:
        if not g.boundary:
            raise DimerError("boundary anchor on a region without boundary")
        k0 = g.boundary[0]
        s0 = (anchor >> k0) & 1
        check = {k: (anchor >> k) & 1 for k in g.boundary}
    state = {k0: s0}
    dq = deque([k0])
    while dq:
        k = dq.popleft()
        for j, flip in rel[k]:
            s = state[k] ^ flip
            if j in state:
                if state[j] != s:
                    raise DimerError("inconsistent bisector configuration")
            else:
                state[j] = s
                dq.append(j)
    if len(state) != g.n_edges:
        raise DimerError("anchor does not reach every edge")
    for k, s in check.items():
        if state[k] != s:
            raise DimerError("anchor contradiction on boundary")
    cfg = 0
    for k, s in state.items():
        if s:
            cfg |= 1 << k
    return cfg


# -- cycles and enclosed edges -----------------------------------------------

@dataclass(frozen=True)
class QuotientCycle:
    """Closed alternating walk of vertex and face nodes.

    ``nodes`` alternates ('v', index) and ('f', base); ``polygon`` holds the
    lifted integer coordinates of the nodes and ``shift`` the vertical offset
    accumulated around the walk (non-zero only for cycles winding a cylinder).
    """

    nodes: tuple
    polygon: tuple
    shift: int = 0

    def __len__(self):
        return len(self.nodes)

    @property
    def winding(self):
        return 0 if self.shift == 0 else (1 if self.shift > 0 else -1)


@lru_cache(maxsize=None)
def _hex_positions(g, base):
    h = make_hexagon(base, g.width)
    return {v: i for i, v in enumerate(h.vertices)}


def _pair_at_face(g, base, members):
    """Non-crossing pairing of the disagreement vertices around one hexagon."""
    pos = _hex_positions(g, base)
    items = sorted(members, key=lambda vi: pos[g.vertices[vi]])
    m = len(items)
    if m % 2:
        raise DimerError("odd number of disagreement incidences at a hexagon")
    if m == 2:
        return [(items[0], items[1])]
    ps = [pos[g.vertices[vi]] for vi in items]

    def cost(shift):
        total = 0
        for t in range(0, m, 2):
            a, b = (t + shift) % m, (t + 1 + shift) % m
            total += (ps[b] - ps[a]) % 6
        return total

    shift = 0 if cost(0) <= cost(1) else 1
    return [(items[(t + shift) % m], items[(t + 1 + shift) % m]) for t in range(0, m, 2)]


def _vertex_lift(g, v, ref_y):
    x, y = vertex_xy(v)
    return x, _lift_y(g, y, ref_y)


def _lift_y(g, y, ref_y):
    if g.width is None:
        return y
    period = 2 * g.width
    k = round((ref_y - y) / period)
    return y + k * period


def _walks(g, b1, b2):
    diff = [i for i in range(len(b1)) if b1[i] != b2[i]]
    if not diff:
        return []
    at_face = {}
    for i in diff:
        at_face.setdefault(b1[i], []).append(i)
        at_face.setdefault(b2[i], []).append(i)
    partner = {}
    for base in sorted(at_face):
        for u, v in _pair_at_face(g, base, at_face[base]):
            partner[(base, u)] = v
            partner[(base, v)] = u
    used = set()
    walks = []
    for i0 in diff:
        if i0 in used:
            continue
        nodes = []
        i, f = i0, b1[i0]
        while True:
            used.add(i)
            nodes.append(("v", i))
            nodes.append(("f", f))
            j = partner[(f, i)]
            f = b2[j] if b1[j] == f else b1[j]
            i = j
            if i == i0:
                break
        walks.append(nodes)
    return walks


def _polygon(g, nodes):
    pts = []
    ref = None
    for kind, key in nodes:
        if kind == "v":
            x, y = vertex_xy(g.vertices[key])
        else:
            x, y = hexagon_xy(key)
        if ref is not None:
            y = _lift_y(g, y, ref)
        pts.append((x, y))
        ref = y
    shift = 0
    if g.width is not None:
        kind, key = nodes[0]
        x0, y0 = pts[0]
        closing = _lift_y(g, y0, pts[-1][1])
        shift = closing - y0
    return tuple(pts), shift


def symmetric_difference_cycles(g, b1, b2):
    if len(b1) != len(b2) or len(b1) != len(g.vertices):
        raise DimerError("bisector configurations on different graphs")
    out = []
    # A walk may pass a face node twice.  The face pairing is non-crossing, so
    # the walk only touches itself there; cutting it at the repeat would re-pair
    # the face and make the result depend on the traversal direction.
    for walk in _walks(g, b1, b2):
        poly, shift = _polygon(g, walk)
        out.append(QuotientCycle(tuple(walk), poly, shift))
    return out


@lru_cache(maxsize=None)
def _midpoints(g):
    """Midpoints of every lattice edge on the hexagons touching the region."""
    keys = {}
    for v in g.vertices:
        for base in g.hexagons_at(v):
            h = make_hexagon(base)  # unwrapped geometry
            P, Q = base
            for u, w in h.edges:
                xu, yu = vertex_xy(u)
                xw, yw = vertex_xy(w)
                keys[(u, w)] = ((xu + xw) // 2, (yu + yw) // 2)
    return tuple(sorted(keys.items()))


def _inside(px, py, poly):
    c = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            # exact test of whether the crossing lies to the right of px
            t = (x2 - x1) * (py - y1) - (px - x1) * (y2 - y1)
            if (y2 - y1) > 0:
                if t > 0:
                    c = not c
            elif t < 0:
                c = not c
    return c


def _on_segment(px, py, poly):
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (x2 - x1) * (py - y1) - (px - x1) * (y2 - y1) == 0:
            if min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2):
                return True
    return False


def _planar_enclosed(g, poly):
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    out = []
    if g.width is None:
        cands = _midpoints(g)
    else:
        cands = _cyl_midpoints(g, y0, y1)
    for key, (mx, my) in cands:
        if x0 < mx < x1 and y0 < my < y1 and _inside(mx, my, poly):
            if _on_segment(mx, my, poly):
                raise DimerError("edge midpoint on cycle polygon")
            out.append(key)
    return out


def _cyl_midpoints(g, y0, y1):
    """Lifted midpoints of cylinder edges with lifted y in [y0, y1]."""
    period = 2 * g.width
    out = []
    for (u, w), (mx, my) in _cyl_base_midpoints(g):
        k = (y0 - my) // period
        yy = my + k * period
        while yy <= y1:
            if yy >= y0:
                out.append(((u, w), (mx, yy)))
            yy += period
    return out


@lru_cache(maxsize=None)
def _cyl_base_midpoints(g):
    keys = {}
    for v in g.vertices:
        for base in g.hexagons_at(v):
            h = make_hexagon(base, g.width)
            hu = make_hexagon(base)
            for (u, w), (uu, ww) in zip(h.edges, hu.edges):
                xu, yu = vertex_xy(uu)
                xw, yw = vertex_xy(ww)
                keys[(u, w)] = ((xu + xw) // 2, (yu + yw) // 2)
    return tuple(sorted(keys.items()))


def _winding_enclosed(g, c):
    """Edges between a winding cycle and the p-minimal rim of the cylinder."""
    period = 2 * g.width
    poly = c.polygon
    segs = []
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if i == n - 1:
            y2 = poly[0][1] + c.shift
        segs.append((x1, y1, x2, y2))
    out = []
    for (u, w), (mx, my) in _cyl_base_midpoints(g):
        crossings = 0
        for x1, y1, x2, y2 in segs:
            lo, hi = min(y1, y2), max(y1, y2)
            k0 = (lo - my) // period - 1
            for k in range(k0, k0 + 3):
                py = my + k * period
                if (y1 > py) != (y2 > py):
                    # does the segment cross the leftward ray from (mx, py)?
                    t = (x2 - x1) * (py - y1) - (mx - x1) * (y2 - y1)
                    if (t < 0) if (y2 - y1) > 0 else (t > 0):
                        crossings += 1
        if crossings % 2:
            out.append((u, w))
    return out


def enclosed_edges(g, c):
    if len(c.polygon) < 3:
        return []
    if c.shift:
        return _winding_enclosed(g, c)
    return _planar_enclosed(g, c.polygon)


def enclosed_edge_count(g, c):
    """N(C): lattice edges whose midpoint lies strictly inside the cycle.

    The walk may touch itself at a face centre (never crossing there); vertex
    nodes are distinct, so the even-odd rule sees a simple curve.
    """
    verts = [nd for nd in c.nodes if nd[0] == "v"]
    if len(set(verts)) != len(verts):
        raise DimerError("cycle repeats a vertex node")
    return len(enclosed_edges(g, c))


def distance(g, b1, b2):
    return sum(enclosed_edge_count(g, c) for c in symmetric_difference_cycles(g, b1, b2))


def config_distance(g, cfg1, cfg2):
    return distance(g, to_bisector(g, cfg1), to_bisector(g, cfg2))


# -- path construction -------------------------------------------------------

class PathPlanner:
    """Builds move sequences between configurations sharing a boundary.

    Each round applies one legal move that strictly lowers the distance to the
    target, taking the largest drop and breaking ties by move order.  When no
    single move helps, a breadth-first search over short move sequences looks
    for a block of m moves lowering the distance by at least m.  Distances and
    bisectors are cached, so one planner serves many pairs efficiently.
    """

    def __init__(self, g, max_lookahead=4):
        self.g = g
        self.max_lookahead = max_lookahead
        self._bis = {}
        self._dist = {}
        self._moves = {}

    def bisector(self, cfg):
        b = self._bis.get(cfg)
        if b is None:
            b = self._bis[cfg] = to_bisector(self.g, cfg)
        return b

    def distance(self, cfg, dst):
        key = (cfg, dst)
        d = self._dist.get(key)
        if d is None:
            d = self._dist[key] = distance(self.g, self.bisector(cfg), self.bisector(dst))
        return d

    def moves(self, cfg):
        m = self._moves.get(cfg)
        if m is None:
            m = self._moves[cfg] = legal_moves(self.g, cfg)
        return m

    def rounds(self, src, dst):
        """List of rounds (each a list of moves), or None if unreachable."""
        g = self.g
        if src == dst:
            return []
        if (src & g.boundary_mask) != (dst & g.boundary_mask):
            raise DimerError("configurations have different boundary conditions")
        if g.topology != "planar" and not self.reachable(src, dst):
            return None
        out = []
        cur = src
        d = self.distance(cur, dst)
        while cur != dst:
            best = None
            for m in self.moves(cur):
                nxt = cur ^ move_mask(g, m)
                dn = self.distance(nxt, dst)
                if dn < d and (best is None or dn < best[0]):
                    best = (dn, m, nxt)
            if best is not None:
                d, m, cur = best
                out.append([m])
                continue
            seq = self._lookahead(cur, dst, d)
            if seq is None:
                if self.reachable(cur, dst):
                    raise DimerError("path search stalled on a reachable pair")
                return None
            for m in seq:
                cur ^= move_mask(g, m)
            d = self.distance(cur, dst)
            out.append(seq)
        return out

    def _lookahead(self, cur, dst, d):
        g = self.g
        frontier = [(cur, [])]
        seen = {cur}
        for depth in range(1, self.max_lookahead + 1):
            nxt_frontier = []
            for cfg, seq in frontier:
                for m in self.moves(cfg):
                    nxt = cfg ^ move_mask(g, m)
                    if nxt in seen:
                        continue
                    seen.add(nxt)
                    s2 = seq + [m]
                    if self.distance(nxt, dst) <= d - depth:
                        return s2
                    nxt_frontier.append((nxt, s2))
            frontier = nxt_frontier
        return None

    def path(self, src, dst):
        r = self.rounds(src, dst)
        if r is None:
            return None
        return [m for rnd in r for m in rnd]

    def reachable(self, src, dst):
        g = self.g
        seen = {src}
        dq = deque([src])
        while dq:
            cfg = dq.popleft()
            if cfg == dst:
                return True
            for m in self.moves(cfg):
                nxt = cfg ^ move_mask(g, m)
                if nxt not in seen:
                    seen.add(nxt)
                    dq.append(nxt)
        return False


def build_path(g, src, dst, planner=None):
    """Moves taking src to dst, or None when no path exists (cylinder case)."""
    if not (is_valid(g, src) and is_valid(g, dst)):
        raise DimerError("invalid configuration")
    planner = planner or PathPlanner(g)
    return planner.path(src, dst)


def replay(g, cfg, moves):
    out = [cfg]
    for m in moves:
        cfg = apply_move(g, cfg, m)
        out.append(cfg)
    return out


def canonical_paths(g, space, pairs, planner=None):
    """State-index paths {(i, j): [i, ..., j]} built from dimer-derived moves."""
    planner = planner or PathPlanner(g)
    idx = space.index
    out = {}
    for i, j in pairs:
        moves = planner.path(space[i], space[j])
        if moves is None:
            raise DimerError(f"no path between states {i} and {j}")
        out[(i, j)] = [idx[s] for s in replay(g, space[i], moves)]
    return out
