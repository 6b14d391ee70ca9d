"""1-2 model configurations, local weights and exhaustive state spaces.

A configuration is an ``int`` bitmask over ``g.edges`` (bit k set means edge k
is present).  A boundary condition is the same kind of mask restricted to the
boundary edges.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

from .hexlattice import HORIZONTAL, NESW, NWSE, _assemble, make_hexagon

DEFAULT_MAX_FREE = 26


class GuardError(RuntimeError):
    """Raised when a desk-scale size guard would be exceeded."""

    def __init__(self, msg):
        super().__init__(f"desk-scale guard: {msg}")


class InadmissibleError(ValueError):
    pass


@dataclass(frozen=True)
class Weights:
    a: object = 1
    b: object = 1
    c: object = 1

    def __post_init__(self):
        for x in (self.a, self.b, self.c):
            if not x > 0:
                raise ValueError("weights must be positive")

    def of(self, cls):
        if cls == HORIZONTAL:
            return self.a
        if cls == NWSE:
            return self.b
        if cls == NESW:
            return self.c
        raise KeyError(cls)

    def rational(self):
        return Weights(*(Fraction(x) if not isinstance(x, float) else Fraction(x).limit_denominator(10**9)
                         for x in (self.a, self.b, self.c)))

    def floats(self):
        return Weights(float(self.a), float(self.b), float(self.c))

    def in_mode(self, mode):
        if mode == "rational":
            return self.rational()
        if mode == "float":
            return self.floats()
        raise ValueError(f"unknown arithmetic mode {mode!r}")

    def scaled(self, lam):
        return Weights(self.a * lam, self.b * lam, self.c * lam)

    def as_tuple(self):
        return (self.a, self.b, self.c)

    @classmethod
    def parse(cls, text):
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 3:
            raise ValueError("weights need three comma separated values")
        return cls(*(Fraction(p) for p in parts))


# -- bit helpers -------------------------------------------------------------

def mask_from_edges(edges):
    m = 0
    for k in edges:
        m |= 1 << k
    return m


def present_edges(mask):
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return out


def full_mask(g):
    return (1 << g.n_edges) - 1


def complement(g, cfg):
    return cfg ^ full_mask(g)


def boundary_of(g, cfg):
    return cfg & g.boundary_mask


def degree(g, cfg, vi):
    return sum((cfg >> k) & 1 for k in g.incident[vi])


def is_valid(g, cfg):
    return all(1 <= degree(g, cfg, i) <= 2 for i in range(len(g.vertices)))


# -- weights -----------------------------------------------------------------

def _local(g, w, cfg, vi):
    inc = g.incident[vi]
    bits = [(cfg >> k) & 1 for k in inc]
    s = bits[0] + bits[1] + bits[2]
    if s == 0 or s == 3:
        return 0
    odd = 1 if s == 1 else 0
    for k, bit in zip(inc, bits):
        if bit == odd:
            return w.of(g.classes[k])
    raise AssertionError  # pragma: no cover


def local_weight(g, w, cfg, v):
    """Weight of the local pattern at vertex v (a tuple (p, q) or index)."""
    if isinstance(v, tuple):
        if v not in g.vertex_index:
            raise KeyError(f"unknown vertex {v}")
        v = g.vertex_index[v]
    if not 0 <= v < len(g.vertices):
        raise KeyError(f"unknown vertex {v}")
    return _local(g, w, cfg, v)


def config_weight(g, w, cfg):
    out = 1
    for i in range(len(g.vertices)):
        x = _local(g, w, cfg, i)
        if x == 0:
            return 0 * out
        out = out * x
    return out


# -- state spaces ------------------------------------------------------------

class StateSpace:
    """All valid configurations with a fixed boundary, in lexicographic order."""

    def __init__(self, g, boundary, states):
        self.graph = g
        self.boundary = boundary
        self.states = list(states)

    @cached_property
    def index(self):
        return {s: i for i, s in enumerate(self.states)}

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def admissible(self):
        return bool(self.states)

    def weights(self, w):
        return [config_weight(self.graph, w, s) for s in self.states]

    def to_json(self):
        return {
            "boundary": present_edges(self.boundary),
            "states": [present_edges(s) for s in self.states],
        }


def _backtrack(g, fixed, order, limit=None, value_order=None):
    """Yield valid configurations extending ``fixed`` over the edges in ``order``.

    Edges are assigned in the given order, absent before present unless
    ``value_order`` supplies a per-edge callable returning the order.
    """
    nv = len(g.vertices)
    vidx = g.vertex_index
    cnt = [0] * nv
    rem = [0] * nv
    free = set(order)
    for i in range(nv):
        for k in g.incident[i]:
            if k in free:
                rem[i] += 1
            elif (fixed >> k) & 1:
                cnt[i] += 1
    for i in range(nv):
        if cnt[i] > 2 or cnt[i] + rem[i] < 1:
            return
    ends = []
    for k in order:
        ends.append([vidx[x] for x in g.edges[k] if x in vidx])
    n = len(order)
    found = 0

    def rec(pos, cfg):
        nonlocal found
        if pos == n:
            found += 1
            yield cfg
            return
        k = order[pos]
        vs = ends[pos]
        vals = (0, 1) if value_order is None else value_order()
        for bit in vals:
            ok = True
            for i in vs:
                rem[i] -= 1
                cnt[i] += bit
            for i in vs:
                if cnt[i] > 2 or cnt[i] + rem[i] < 1:
                    ok = False
            if ok:
                yield from rec(pos + 1, cfg | (bit << k))
            for i in vs:
                rem[i] += 1
                cnt[i] -= bit
            if limit is not None and found >= limit:
                return

    yield from rec(0, fixed)


def _check_boundary(g, b):
    if b & ~g.boundary_mask:
        raise ValueError("boundary mask sets non-boundary edges")


def enumerate_states(g, b, max_free=DEFAULT_MAX_FREE):
    """Exhaustive state space for boundary mask b (empty if inadmissible)."""
    _check_boundary(g, b)
    if len(g.internal) > max_free:
        raise GuardError(f"{len(g.internal)} free edges exceeds limit {max_free}")
    return StateSpace(g, b, _backtrack(g, b, list(g.internal)))


def is_admissible(g, b):
    _check_boundary(g, b)
    for _ in _backtrack(g, b, list(g.internal), limit=1):
        return True
    return False


def partition_function(g, w, b, space=None, max_free=DEFAULT_MAX_FREE):
    if space is None:
        space = enumerate_states(g, b, max_free)
    if not space.admissible:
        raise InadmissibleError("boundary condition admits no configuration")
    return sum(space.weights(w))


def measure(g, w, b, space=None, mode=None, max_free=DEFAULT_MAX_FREE):
    """Probability vector over ``space`` (rational when weights are rational)."""
    if mode is not None:
        w = w.in_mode(mode)
    if space is None:
        space = enumerate_states(g, b, max_free)
    if not space.admissible:
        raise InadmissibleError("boundary condition admits no configuration")
    ws = space.weights(w)
    z = sum(ws)
    return [x / z for x in ws]


def brute_force_states(g, b):
    """Second enumerator: test every interior assignment directly."""
    out = []
    internal = list(g.internal)
    for bits in itertools.product((0, 1), repeat=len(internal)):
        cfg = b
        for k, bit in zip(internal, bits):
            if bit:
                cfg |= 1 << k
        if is_valid(g, cfg):
            out.append(cfg)
    return out


# -- random admissible boundaries -------------------------------------------

def _padded(g):
    verts = set(g.vertices)
    for v in g.vertices:
        for base in g.hexagons_at(v):
            verts.update(make_hexagon(base, g.width).vertices)
    return _assemble(verts, width=g.width, topology=g.topology)


def random_valid_config(g, rng, fixed=0, free=None):
    """A valid configuration found by randomized backtracking (not uniform)."""
    # a sweep order keeps backtracking local; randomness enters via the values
    order = sorted(g.internal + g.boundary) if free is None else sorted(free)
    vo = lambda: (0, 1) if rng.random() < 0.5 else (1, 0)
    for cfg in _backtrack(g, fixed, order, limit=1, value_order=vo):
        return cfg
    return None


def random_boundary(g, rng=None, seed=None):
    """Boundary obtained by restricting a valid configuration on a padded region.

    The padding adds every hexagon touching the region, so the returned
    boundary extends at least one ring beyond the region.
    """
    rng = rng or random.Random(seed)
    big = _padded(g)
    cfg = random_valid_config(big, rng)
    b = 0
    for k in g.boundary:
        if (cfg >> big.edge_index[g.edges[k]]) & 1:
            b |= 1 << k
    return b


def restrict(g, cfg):
    return cfg & g.boundary_mask


def alternating_boundary(g, phase=0):
    """On a one-face region, every other boundary edge around the face present.

    Boundary edges are taken in the cyclic vertex order of the face; ``phase``
    picks which alternate set is present.
    """
    if len(g.faces) != 1 or len(g.boundary) != 6:
        raise ValueError("needs a single-hexagon region")
    b = 0
    bset = set(g.boundary)
    for j, v in enumerate(g.face_vertices[0]):
        (k,) = [k for k in g.incident[g.vertex_index[v]] if k in bset]
        if j % 2 == phase:
            b |= 1 << k
    return b
