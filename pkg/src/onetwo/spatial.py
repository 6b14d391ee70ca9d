"""Spin form of the 1-2 model, boundary influence and condition F(n, eps).

Each lattice edge carries a spin (+1 present, -1 absent); spins live on the
vertices of the Kagome lattice (edge midpoints).  At a lattice vertex with
NESW, NWSE and horizontal edges the potential couples the three spins in the
order (NESW, NWSE, horizontal).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.spatial.distance import cdist

from .hexlattice import HORIZONTAL, NESW, NWSE, build_box, hexagon_xy, to_plane, vertex_xy
from .model import (
    GuardError,
    InadmissibleError,
    Weights,
    _backtrack,
    config_weight,
    enumerate_states,
    measure,
)

F_GUARD_N = 1
SAW_GUARD = 9
THEOREM_PRESET = Fraction(1, 15)
SPLIT_GUARD = 12


class SpatialError(RuntimeError):
    pass


# -- potential ---------------------------------------------------------------

@dataclass(frozen=True)
class PotentialCoeffs:
    A: object
    B: object
    C: object

    def __post_init__(self):
        if self.A + self.B + self.C != -1 and abs(self.A + self.B + self.C + 1) > 1e-12:
            raise ValueError("coefficients must sum to -1")

    @classmethod
    def from_weights(cls, w):
        s = w.a + w.b + w.c
        return cls((w.a - w.b - w.c) / s, (w.b - w.a - w.c) / s, (w.c - w.a - w.b) / s)


def potential_arg(coeffs, s1, s2, s3):
    """1 + A s1 s2 + B s1 s3 + C s2 s3, i.e. exp(-U)."""
    for s in (s1, s2, s3):
        if s not in (1, -1):
            raise ValueError("spins must be +1 or -1")
    return 1 + coeffs.A * s1 * s2 + coeffs.B * s1 * s3 + coeffs.C * s2 * s3


def potential_u(coeffs, s1, s2, s3):
    x = potential_arg(coeffs, s1, s2, s3)
    if x == 0:
        return math.inf
    if x < 0:
        raise AssertionError("negative potential argument")  # pragma: no cover
    return -math.log(x)


def vertex_triple(g, vi):
    """Edge indices (NESW, NWSE, horizontal) at vertex index vi."""
    by = {g.classes[k]: k for k in g.incident[vi]}
    return by[NESW], by[NWSE], by[HORIZONTAL]


def spins(g, cfg):
    return tuple(1 if (cfg >> k) & 1 else -1 for k in range(g.n_edges))


def from_spins(sig):
    cfg = 0
    for k, s in enumerate(sig):
        if s == 1:
            cfg |= 1 << k
    return cfg


def spins_valid(g, sig):
    for i in range(len(g.vertices)):
        if sum(sig[k] for k in g.incident[i]) not in (1, -1):
            return False
    return True


def boltzmann_factor(g, w, cfg):
    """exp(-H) as an exact product of potential arguments."""
    co = PotentialCoeffs.from_weights(w)
    sig = spins(g, cfg)
    out = 1
    for i in range(len(g.vertices)):
        e1, e2, e3 = vertex_triple(g, i)
        out = out * potential_arg(co, sig[e1], sig[e2], sig[e3])
    return out


def hamiltonian(g, w, cfg):
    co = PotentialCoeffs.from_weights(w.floats())
    sig = spins(g, cfg)
    tot = 0.0
    for i in range(len(g.vertices)):
        e1, e2, e3 = vertex_triple(g, i)
        u = potential_u(co, sig[e1], sig[e2], sig[e3])
        if u == math.inf:
            return math.inf
        tot += u
    return tot


def gibbs_measure(g, w, tau, space=None, mode="float", check=True):
    """exp(-H)/Z over the state space; checked against the product-weight law."""
    if space is None:
        space = enumerate_states(g, tau)
    if not space.admissible:
        raise InadmissibleError("boundary condition admits no configuration")
    if mode == "rational":
        wr = w.rational()
        vals = [boltzmann_factor(g, wr, s) for s in space.states]
        z = sum(vals)
        mu = [v / z for v in vals]
        if check and mu != measure(g, wr, tau, space):
            raise SpatialError("Gibbs measure differs from the product-weight measure")
        return mu
    H = np.array([hamiltonian(g, w, s) for s in space.states])
    m = H.min()
    p = np.exp(-(H - m))
    mu = p / p.sum()
    if check:
        ref = np.array(measure(g, w, tau, space, mode="float"))
        if np.abs(mu - ref).max() > 1e-12:
            raise SpatialError("Gibbs measure differs from the product-weight measure")
    return [float(x) for x in mu]


# -- Kagome view -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KagomeGraph:
    points: tuple  # midpoint (integer drawing coordinates, doubled) per lattice edge
    adjacency: tuple  # sorted neighbour lists per lattice edge

    @cached_property
    def index(self):
        return {p: k for k, p in enumerate(self.points)}

    def degree(self, k):
        return len(self.adjacency[k])


def kagome_index(g, edges=None):
    """Kagome vertices (edge midpoints) and their adjacency through shared vertices.

    With ``edges`` only those lattice edges are kept.
    """
    keep = set(range(g.n_edges) if edges is None else edges)
    pts = []
    for u, v in g.edges:
        (x1, y1), (x2, y2) = vertex_xy(u), vertex_xy(v)
        pts.append((x1 + x2, y1 + y2))
    adj = [set() for _ in g.edges]
    for i in range(len(g.vertices)):
        inc = [k for k in g.incident[i] if k in keep]
        for a in inc:
            for b in inc:
                if a != b:
                    adj[a].add(b)
    return KagomeGraph(tuple(pts), tuple(tuple(sorted(a)) if k in keep else () for k, a in enumerate(adj)))


# -- marginals ---------------------------------------------------------------

def _fold(key, full, modulo):
    return min(key, key ^ full) if modulo else key


def marginal_law(g, w, tau, delta, space=None, modulo=False, mode=None):
    """Law of the restriction to ``delta`` (edge mask keys) by enumeration."""
    if space is None:
        space = enumerate_states(g, tau)
    mu = measure(g, w, tau, space, mode=mode)
    full = sum(1 << k for k in delta)
    out = {}
    for s, p in zip(space.states, mu):
        key = _fold(s & full, full, modulo)
        out[key] = out.get(key, 0) + p
    return out


def marginal_law_split(g, w, tau, delta, modulo=False, mode=None):
    """Same law by conditional splitting: one partition function per pinned
    assignment of ``delta``."""
    delta = sorted(delta)
    if len(delta) > SPLIT_GUARD:
        raise GuardError(f"{len(delta)} pinned edges exceed {SPLIT_GUARD}")
    if mode is not None:
        w = w.in_mode(mode)
    free = [k for k in g.internal if k not in set(delta)]
    parts = {}
    for bits in itertools.product((0, 1), repeat=len(delta)):
        pin = 0
        for k, b in zip(delta, bits):
            if b:
                pin |= 1 << k
        z = 0
        for cfg in _backtrack(g, tau | pin, free):
            z = z + config_weight(g, w, cfg)
        if z:
            parts[pin] = z
    tot = sum(parts.values())
    if not tot:
        raise InadmissibleError("boundary condition admits no configuration")
    full = sum(1 << k for k in delta)
    out = {}
    for key, z in parts.items():
        key = _fold(key, full, modulo)
        out[key] = out.get(key, 0) + z / tot
    return out


def law_tv(p, q):
    keys = set(p) | set(q)
    return sum(abs(p.get(k, 0) - q.get(k, 0)) for k in keys) / 2


def marginal_tv(g, w, delta, tau1, tau2, modulo=False, mode=None):
    return law_tv(marginal_law(g, w, tau1, delta, modulo=modulo, mode=mode),
                  marginal_law(g, w, tau2, delta, modulo=modulo, mode=mode))


# -- box geometry ------------------------------------------------------------

def _box_frame(g):
    if not g.shape or g.shape[0] != "box":
        raise ValueError("not a box region")
    _, k, n = g.shape
    from .hexlattice import box_face_bases

    c00 = np.array(to_plane(hexagon_xy(box_face_bases(k, n)[0][0])))
    u = np.array(to_plane((6, 2)))  # one column step
    v = np.array(to_plane((-6, 2)))  # one row step
    return c00, u, v, k, n


def rhombus_coords(g, vertex):
    """(column, row) coordinates of a vertex in units of face steps."""
    c00, u, v, _, _ = _box_frame(g)
    p = np.array(to_plane(vertex_xy(vertex))) - c00
    a, b = np.linalg.solve(np.column_stack([u, v]), p)
    return float(a), float(b)


def boundary_sides(g):
    """Boundary edge indices per side of a box, keyed NE, SW, NW, SE.

    An edge goes to the side its outside endpoint overshoots the most; a tie
    (the left and right corners) puts it on both.
    """
    _, _, _, k, n = _box_frame(g)
    sides = {"NE": set(), "SW": set(), "NW": set(), "SE": set()}
    for e in g.boundary:
        (out,) = [x for x in g.edges[e] if x not in g.vertex_set]
        a, b = rhombus_coords(g, out)
        excess = {"SW": -0.5 - a, "NE": a - (n - 0.5), "SE": -0.5 - b, "NW": b - (k - 0.5)}
        top = max(excess.values())
        for side, x in excess.items():
            if x > top - 1e-9:
                sides[side].add(e)
    return {s: tuple(sorted(x)) for s, x in sides.items()}


def center_line(g, which):
    """Internal edges crossed by the central line of a box.

    M1 runs parallel to the NE side (along the row direction), M2 parallel to
    the NW side (along the column direction).
    """
    c00, u, v, k, n = _box_frame(g)
    centre = c00 + (n - 1) / 2 * u + (k - 1) / 2 * v
    d = {"M1": v, "M2": u}[which]

    def side(x):
        p = np.array(to_plane(vertex_xy(x))) - centre
        return d[0] * p[1] - d[1] * p[0]

    out = []
    for e in g.internal:
        a, b = g.edges[e]
        if side(a) * side(b) < -1e-12:
            out.append(e)
    return tuple(out)


AGREEMENT = {"M1": ("NW", "SE"), "M2": ("NE", "SW")}


def agreement_edges(g, which):
    sides = boundary_sides(g)
    return tuple(sorted(set().union(*(sides[s] for s in AGREEMENT[which]))))


def center_box(big, n):
    """Vertex set and internal edges of the central n x n box of ``big``."""
    from .hexlattice import box_face_bases, make_hexagon

    _, k, m = big.shape
    bases = box_face_bases(k, m)
    off = (m - n) // 2
    verts = set()
    for j in range(off, off + n):
        for i in range(off, off + n):
            verts.update(make_hexagon(bases[j][i]).vertices)
    edges = tuple(e for e in big.internal if all(x in verts for x in big.edges[e]))
    return frozenset(verts), edges


# -- exact evaluation by tensor contraction ----------------------------------

def _contract(tensors):
    """Greedy pairwise contraction of (array, labels) pairs; labels shared by
    two tensors are summed, the rest stay open."""
    ts = list(tensors)
    while len(ts) > 1:
        best = None
        for i in range(len(ts)):
            li = set(ts[i][1])
            for j in range(i + 1, len(ts)):
                sh = li & set(ts[j][1])
                if not sh:
                    continue
                size = len(li) + len(ts[j][1]) - 2 * len(sh)
                key = (size, -len(sh))
                if best is None or key < best[0]:
                    best = (key, i, j, sh)
        if best is None:
            i, j, sh = 0, 1, set()
        else:
            _, i, j, sh = best
        (A, la), (B, lb) = ts[i], ts[j]
        sh = sorted(sh, key=repr)
        ax = ([la.index(s) for s in sh], [lb.index(s) for s in sh])
        C = np.tensordot(A, B, axes=ax)
        lc = [x for x in la if x not in sh] + [x for x in lb if x not in sh]
        ts = [t for k, t in enumerate(ts) if k not in (i, j)] + [(C, lc)]
    return ts[0]


def joint_partition(g, w, delta):
    """Array Z[tau, x] over raw boundary masks (bit j = g.boundary[j]) and
    restrictions x to ``delta`` (bit j = delta[j])."""
    wf = w.floats()
    delta = list(delta)
    dset = set(delta)
    tensors = []
    seen = set()
    for i in range(len(g.vertices)):
        inc = list(g.incident[i])
        T = np.zeros((2, 2, 2))
        for bits in itertools.product((0, 1), repeat=3):
            s = sum(bits)
            if s in (1, 2):
                odd = 1 if s == 1 else 0
                k = next(k for k, b in zip(inc, bits) if b == odd)
                T[bits] = wf.of(g.classes[k])
        labels = []
        for k in inc:
            if k in dset and k in seen:
                labels.append(("copy", k))
            else:
                labels.append(k)
            seen.add(k)
        tensors.append((T, labels))
    for k in delta:
        D = np.zeros((2, 2, 2))
        D[0, 0, 0] = D[1, 1, 1] = 1
        tensors.append((D, [k, ("copy", k), ("out", k)]))
    T, labels = _contract(tensors)
    # highest bit first in C order: x bits above tau bits
    order = [labels.index(("out", k)) for k in reversed(delta)]
    order += [labels.index(k) for k in reversed(g.boundary)]
    T = np.transpose(T, order)
    return T.reshape(1 << len(delta), 1 << len(g.boundary)).T.copy()


def _fold_matrix(nd, modulo):
    """Columns: class representatives; returns (reps, index array per x)."""
    full = (1 << nd) - 1
    keys = sorted({min(x, x ^ full) if modulo else x for x in range(1 << nd)})
    pos = {k: i for i, k in enumerate(keys)}
    idx = np.array([pos[min(x, x ^ full) if modulo else x] for x in range(1 << nd)])
    return keys, idx


# -- condition F ---------------------------------------------------------------

@dataclass
class FResult:
    value: float
    threshold: float
    holds: bool
    terms: dict
    argmax: dict = field(default_factory=dict)
    route: str = "enumeration"

    def to_json(self):
        return {
            "value": self.value,
            "threshold": self.threshold,
            "holds": self.holds,
            "terms": self.terms,
            "argmax_pair": self.argmax,
            "route": self.route,
        }


def _max_pair_tv(V, groups=None, block=1024):
    """max over row pairs of half the L1 distance (optionally within groups)."""
    V = np.asarray(V, dtype=float)
    best, arg = 0.0, None
    if groups is None:
        groups = [np.arange(len(V))]
    for grp in groups:
        X = V[grp]
        for s in range(0, len(X), block):
            D = cdist(X[s:s + block], X[s:], "cityblock")
            i, j = np.unravel_index(int(np.argmax(D)), D.shape)
            if D[i, j] / 2 > best:
                best, arg = float(D[i, j] / 2), (int(grp[s + i]), int(grp[s + j]))
    return best, arg


def _term_center(n, w, route):
    """max over boundary pairs of the modulo-complement tv on the centre box."""
    big = build_box(3 * n, 3 * n)
    _, delta = center_box(big, n)
    nb = len(big.boundary)
    if route == "enumeration":
        Z = joint_partition(big, w, delta)
        keys, idx = _fold_matrix(len(delta), True)
        Q = np.zeros((1 << nb, len(keys)))
        for x in range(1 << len(delta)):
            Q[:, idx[x]] += Z[:, x]
        # tau and its complement give the same folded law; keep bit 0 clear
        taus = np.array([t for t in range(0, 1 << nb, 2) if Q[t].sum() > 0])
        V = Q[taus] / Q[taus].sum(axis=1, keepdims=True)
        val, (i, j) = _max_pair_tv(V)
        pair = [_mask_edges(big, int(taus[i])), _mask_edges(big, int(taus[j]))]
        return val, pair
    from .pfaffian import class_laws

    laws, vecs = class_laws(big, w, delta)
    keys = sorted({k for law in laws for k in law})
    V = np.array([[law.get(k, 0.0) for k in keys] for law in laws])
    val, (i, j) = _max_pair_tv(V)
    return val, [list(vecs[i]), list(vecs[j])]


def _mask_edges(g, bits):
    return [g.boundary[j] for j in range(len(g.boundary)) if (bits >> j) & 1]


def _boundary_masks(g):
    for bits in range(1 << len(g.boundary)):
        tau = 0
        for j, k in enumerate(g.boundary):
            if (bits >> j) & 1:
                tau |= 1 << k
        yield tau


def _term_line(n, w, which, route):
    g = build_box(n, n)
    delta = center_line(g, which)
    agree = agreement_edges(g, which)
    amask = sum(1 << k for k in agree)
    laws, taus = [], []
    for tau in _boundary_masks(g):
        space = enumerate_states(g, tau)
        if not space.admissible:
            continue
        if route == "enumeration":
            law = marginal_law(g, w.floats(), tau, delta, space=space, modulo=True)
        else:
            from .pfaffian import boundary_marginal

            law = boundary_marginal(g, w, tau, delta, modulo=True)
        laws.append(law)
        taus.append(tau)
    keys = sorted({k for law in laws for k in law})
    V = np.array([[float(law.get(k, 0)) for k in keys] for law in laws])
    groups = {}
    for i, tau in enumerate(taus):
        groups.setdefault(tau & amask, []).append(i)
    val, arg = _max_pair_tv(V, [np.array(x) for x in groups.values()])
    pair = [] if arg is None else [
        [k for k in g.boundary if (taus[arg[0]] >> k) & 1],
        [k for k in g.boundary if (taus[arg[1]] >> k) & 1],
    ]
    return val, pair


def condition_F(n, w, eps, route="enumeration", max_n=F_GUARD_N):
    """Evaluate the three-term boundary-influence sum of condition F(n, eps).

    Boundary conditions enter through their parity classes, so every marginal
    is taken modulo the global complement of the configuration.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > max_n:
        raise GuardError(f"condition F at n={n} exceeds the level guard {max_n}")
    if route not in ("enumeration", "pfaffian"):
        raise ValueError(f"unknown route {route!r}")
    t1, p1 = _term_center(n, w, route)
    t2, p2 = _term_line(n, w, "M1", route)
    t3, p3 = _term_line(n, w, "M2", route)
    value = t1 + 2 * t2 + 2 * t3
    eps = float(eps)
    return FResult(
        value=value,
        threshold=eps,
        holds=value < eps,
        terms={"center": t1, "M1": t2, "M2": t3},
        argmax={"center": p1, "M1": p2, "M2": p3},
        route=route,
    )


# -- self-avoiding walks -----------------------------------------------------

SAW_OFFSETS = tuple(sorted({
    (0, 2), (0, -2), (2, 0), (-2, 0),
    (1, 2), (1, -2), (-1, 2), (-1, -2),
    (2, 2), (2, -2), (-2, 2), (-2, -2),
    (2, 1), (2, -1), (-2, 1), (-2, -1),
}))


@dataclass(frozen=True)
class SAWGraph:
    offsets: tuple = SAW_OFFSETS

    def neighbours(self, p):
        return [(p[0] + a, p[1] + b) for a, b in self.offsets]

    @property
    def degree(self):
        return len(self.offsets)


def _saw_python(offsets, kmax):
    counts = [0] * (kmax + 1)
    path = [(0, 0)]
    seen = {(0, 0)}

    def rec(depth):
        counts[depth] += 1
        if depth == kmax:
            return
        x, y = path[-1]
        for a, b in offsets:
            q = (x + a, y + b)
            if q not in seen:
                seen.add(q)
                path.append(q)
                rec(depth + 1)
                path.pop()
                seen.discard(q)

    rec(0)
    return counts[1:]


def _saw_numba(offsets, kmax):
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        return None

    @njit(cache=False)
    def run(dx, dy, kmax, first):
        counts = np.zeros(kmax + 1, dtype=np.int64)
        px = np.zeros(kmax + 1, dtype=np.int64)
        py = np.zeros(kmax + 1, dtype=np.int64)
        choice = np.zeros(kmax + 1, dtype=np.int64)
        nd = dx.shape[0]
        px[1] = dx[first]
        py[1] = dy[first]
        counts[1] = 1
        depth = 1
        choice[1] = 0
        while depth >= 1:
            if depth == kmax or choice[depth] >= nd:
                depth -= 1
                if depth >= 1:
                    choice[depth] += 1
                continue
            c = choice[depth]
            nx = px[depth] + dx[c]
            ny = py[depth] + dy[c]
            ok = True
            for t in range(depth + 1):
                if px[t] == nx and py[t] == ny:
                    ok = False
                    break
            if not ok:
                choice[depth] += 1
                continue
            depth += 1
            px[depth] = nx
            py[depth] = ny
            counts[depth] += 1
            choice[depth] = 0
        return counts

    dx = np.array([a for a, _ in offsets], dtype=np.int64)
    dy = np.array([b for _, b in offsets], dtype=np.int64)
    # first steps in one orbit of the square's symmetry group give equal counts
    orbits = {}
    for i, (a, b) in enumerate(offsets):
        key = tuple(sorted((abs(a), abs(b))))
        orbits.setdefault(key, []).append(i)
    sym = set(offsets) == {(s * a, t * b) for a, b in offsets for s in (1, -1) for t in (1, -1)} and \
        set(offsets) == {(b, a) for a, b in offsets}
    total = np.zeros(kmax + 1, dtype=np.int64)
    if sym:
        for members in orbits.values():
            total += len(members) * run(dx, dy, kmax, members[0])
    else:
        for i in range(len(offsets)):
            total += run(dx, dy, kmax, i)
    return [int(x) for x in total[1:]]


def saw_counts(kmax, graph=None, guard=SAW_GUARD, engine="auto"):
    """[nu_1, ..., nu_kmax]: k-step self-avoiding walks from the origin."""
    graph = graph or SAWGraph()
    if kmax < 1:
        raise ValueError("kmax must be positive")
    if kmax > guard:
        raise GuardError(f"SAW depth {kmax} exceeds guard {guard}")
    if engine == "python" or (engine == "auto" and kmax <= 4):
        return _saw_python(graph.offsets, kmax)
    out = _saw_numba(graph.offsets, kmax)
    return out if out is not None else _saw_python(graph.offsets, kmax)


def connective_estimate(counts):
    """(heuristic lower anchor, rigorous upper anchor) for the connective constant.

    Submultiplicativity gives nu <= nu_k^(1/k) for every k.  The lower anchor
    is the last ratio nu_k / nu_(k-1), an estimate rather than a bound.
    """
    roots = [c ** (1.0 / k) for k, c in enumerate(counts, start=1)]
    upper = min(roots)
    lower = counts[-1] / counts[-2] if len(counts) > 1 else roots[-1]
    return min(lower, upper), upper


def threshold_from_counts(counts):
    """Conservative epsilon 1/upper-anchor (smaller than 1/nu)."""
    return 1.0 / connective_estimate(counts)[1]
