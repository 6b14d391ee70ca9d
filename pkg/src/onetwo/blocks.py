"""Block dynamics on strips and square boxes, with the coupled block update."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hexlattice import box_face_grid, build_box
from .model import GuardError, _backtrack, _local

COND_GUARD = 1 << 24


@dataclass(frozen=True)
class Block:
    faces: tuple
    vertices: frozenset
    edges: tuple  # internal edges with both endpoints in the block
    subblocks: tuple = ()  # partition of ``edges`` into update groups
    label: tuple = ()

    @property
    def mask(self):
        m = 0
        for k in self.edges:
            m |= 1 << k
        return m


@dataclass(frozen=True, eq=False)
class BlockSet:
    graph: object
    blocks: tuple
    kind: str
    ell: int

    def __len__(self):
        return len(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    def __iter__(self):
        return iter(self.blocks)


def _block_from_faces(g, faces, label=(), groups=None):
    verts = set()
    for f in faces:
        verts.update(g.face_vertices[f])
    edges = tuple(k for k in g.internal if all(x in verts for x in g.edges[k]))
    sub = ()
    if groups is not None:
        gverts = []
        for grp in groups:
            s = set()
            for f in grp:
                s.update(g.face_vertices[f])
            gverts.append(s)
        parts = [[] for _ in groups]
        for k in edges:
            u, v = g.edges[k]
            owner = next((i for i, s in enumerate(gverts) if u in s and v in s), None)
            if owner is None:
                owner = next(i for i, s in enumerate(gverts) if u in s or v in s)
            parts[owner].append(k)
        sub = tuple(tuple(p) for p in parts)
    return Block(tuple(faces), frozenset(verts), edges, sub, label)


def strip_columns(n, ell):
    """1-based face-column ranges of the n strip blocks."""
    if n % 2 or ell % 2 or ell <= 0:
        raise ValueError("n and ell must be even and ell positive")
    if ell >= n:
        raise ValueError("ell must be smaller than n")
    h = ell // 2
    out = []
    for j in range(1, n + 1):
        if j <= h:
            lo, hi = 1, 2 * j
        elif j <= n - h:
            lo, hi = j - h + 1, j + h
        else:
            lo, hi = 2 * j - n - 1, n
        out.append((lo, hi))
    return out


def strip_blocks(k, n, ell, g=None):
    """The n blocks of the k-row strip; sub-blocks are pairs of face columns."""
    g = g or build_box(k, n)
    grid = box_face_grid(g)
    blocks = []
    for j, (lo, hi) in enumerate(strip_columns(n, ell), start=1):
        cols = list(range(lo - 1, hi))
        faces = [grid[r][c] for c in cols for r in range(k)]
        groups = [[grid[r][c] for c in cols[t:t + 2] for r in range(k)] for t in range(0, len(cols), 2)]
        blocks.append(_block_from_faces(g, faces, (j,), groups))
    return BlockSet(g, tuple(blocks), "strip", ell)


def square_blocks(n, ell, g=None):
    """The (n+ell-1)^2 clamped windows of side ell over the face grid."""
    if not 1 <= ell <= n:
        raise ValueError("need 1 <= ell <= n")
    g = g or build_box(n, n)
    grid = box_face_grid(g)
    blocks = []
    for i in range(1, n + ell):
        for j in range(1, n + ell):
            rows = range(max(i - ell + 1, 1) - 1, min(i, n))
            cols = range(max(j - ell + 1, 1) - 1, min(j, n))
            faces = [grid[r][c] for r in rows for c in cols]
            blocks.append(_block_from_faces(g, faces, (i, j)))
    return BlockSet(g, tuple(blocks), "square", ell)


def face_blocks(g, groups, subgroups=False):
    """Blocks made of arbitrary face groups (lists of face indices).

    With ``subgroups`` each entry is a list of face groups and becomes a block
    whose sub-blocks are those groups.
    """
    blocks = []
    for i, grp in enumerate(groups):
        if subgroups:
            faces = [f for part in grp for f in part]
            blocks.append(_block_from_faces(g, faces, (i,), grp))
        else:
            blocks.append(_block_from_faces(g, list(grp), (i,)))
    return BlockSet(g, tuple(blocks), "strip" if subgroups else "faces", 0)


def whole_block(g):
    """A single block holding every internal edge."""
    return BlockSet(g, (_block_from_faces(g, range(len(g.faces)), (0,)),), "whole", 0)


# -- conditional laws --------------------------------------------------------

def _weight_on(g, w, cfg, verts):
    out = 1
    for i in verts:
        out = out * _local(g, w, cfg, i)
    return out


class BlockKernel:
    """Block dynamics for weights w on the blocks of ``blockset``."""

    def __init__(self, blockset, w, boundary=0, guard=COND_GUARD):
        self.blockset = blockset
        self.graph = blockset.graph
        self.weights = w
        self.boundary = boundary
        self.guard = guard
        self._cond = {}
        g = self.graph
        self._touch = []
        for blk in blockset:
            vs = set()
            for k in blk.edges:
                for x in g.edges[k]:
                    if x in g.vertex_index:
                        vs.add(g.vertex_index[x])
            self._touch.append(sorted(vs))

    def __len__(self):
        return len(self.blockset)

    def conditional(self, sigma, bi):
        """List of (configuration, weight) agreeing with sigma off block bi."""
        blk = self.blockset[bi]
        ext = sigma & ~blk.mask
        key = (bi, ext)
        hit = self._cond.get(key)
        if hit is not None:
            return hit
        if (1 << len(blk.edges)) > self.guard:
            raise GuardError(f"block with {len(blk.edges)} edges exceeds conditional guard")
        g = self.graph
        out = []
        for cfg in _backtrack(g, ext, list(blk.edges)):
            out.append((cfg, _weight_on(g, self.weights, cfg, self._touch[bi])))
        self._cond[key] = out
        return out

    def conditional_law(self, sigma, bi):
        items = self.conditional(sigma, bi)
        z = sum(wt for _, wt in items)
        return {cfg: wt / z for cfg, wt in items}


def _draw(items, rng):
    """Draw a key from (key, weight) pairs proportionally to weight."""
    tot = float(sum(wt for _, wt in items))
    u = rng.random() * tot
    acc = 0.0
    for key, wt in items:
        acc += float(wt)
        if u < acc:
            return key
    return items[-1][0]


def conditional_sample(kernel, sigma, bi, rng):
    items = kernel.conditional(sigma, bi)
    if not items:
        raise ValueError("sigma is not a valid configuration")
    return _draw(items, rng)


def _group(items, mask):
    out = {}
    for cfg, wt in items:
        key = cfg & mask
        out[key] = out.get(key, 0) + wt
    return out


def _sub_order(blk, start=None):
    n = len(blk.subblocks)
    if start is None:
        return list(range(n))
    return sorted(range(n), key=lambda i: (abs(i - start), i))


def _masks(edges):
    m = 0
    for k in edges:
        m |= 1 << k
    return m


def sequential_update(kernel, sigma, bi, rng, start=None):
    """Chain-rule update of a strip block, one sub-block at a time.

    Each sub-block is drawn from its law given the block exterior and the
    sub-blocks already drawn, so the composite equals the whole-block law.
    """
    blk = kernel.blockset[bi]
    if not blk.subblocks:
        return conditional_sample(kernel, sigma, bi, rng)
    items = kernel.conditional(sigma, bi)
    for si in _sub_order(blk, start):
        m = _masks(blk.subblocks[si])
        marg = list(_group(items, m).items())
        val = _draw(marg, rng)
        items = [(c, wt) for c, wt in items if c & m == val]
    return items[0][0]


def sequential_law(kernel, sigma, bi, start=None):
    """Exact law of ``sequential_update`` (for testing the chain-rule claim)."""
    blk = kernel.blockset[bi]
    items = kernel.conditional(sigma, bi)
    order = _sub_order(blk, start) if blk.subblocks else []
    out = {}

    def rec(items, pos, prob):
        if pos == len(order):
            z = sum(wt for _, wt in items)
            for c, wt in items:
                out[c] = out.get(c, 0) + prob * wt / z
            return
        m = _masks(blk.subblocks[order[pos]])
        marg = _group(items, m)
        z = sum(marg.values())
        for val, wt in marg.items():
            rec([(c, x) for c, x in items if c & m == val], pos + 1, prob * wt / z)

    rec(items, 0, 1)
    return out


def block_step(kernel, sigma, rng):
    bi = int(rng.integers(len(kernel)))
    if kernel.blockset.kind == "strip":
        return sequential_update(kernel, sigma, bi, rng)
    return conditional_sample(kernel, sigma, bi, rng)


def block_projection(kernel, space, bi, mode="float"):
    """Matrix of P_{E_i} on an enumerated space."""
    n = len(space)
    blk = kernel.blockset[bi]
    mask = ~blk.mask
    g = kernel.graph
    w = kernel.weights.in_mode(mode) if mode else kernel.weights
    classes = {}
    for i, s in enumerate(space.states):
        classes.setdefault(s & mask, []).append(i)
    wts = [_weight_on(g, w, s, kernel._touch[bi]) for s in space.states]
    if mode == "rational":
        P = [[Fraction(0)] * n for _ in range(n)]
        for idx in classes.values():
            z = sum(wts[j] for j in idx)
            for i in idx:
                for j in idx:
                    P[i][j] = wts[j] / z
        return P
    P = np.zeros((n, n))
    for idx in classes.values():
        v = np.array([float(wts[j]) for j in idx])
        v = v / v.sum()
        ix = np.array(idx)
        P[np.ix_(ix, ix)] = v[None, :]
    return P


def block_matrix(kernel, space, mode="float", guard=20000):
    n = len(space)
    if n > guard:
        raise GuardError(f"state space of {n} exceeds {guard}")
    nb = len(kernel)
    if mode == "rational":
        out = [[Fraction(0)] * n for _ in range(n)]
        for bi in range(nb):
            P = block_projection(kernel, space, bi, "rational")
            for i in range(n):
                for j in range(n):
                    if P[i][j]:
                        out[i][j] += P[i][j] / nb
        return out
    out = np.zeros((n, n))
    for bi in range(nb):
        out += block_projection(kernel, space, bi, "float")
    return out / nb


# -- coupling ----------------------------------------------------------------

def _maximal_coupling_draw(p, q, rng):
    keys = sorted(set(p) | set(q))
    common = [(k, min(p.get(k, 0), q.get(k, 0))) for k in keys]
    overlap = float(sum(x for _, x in common))
    if rng.random() < overlap:
        k = _draw([c for c in common if c[1] > 0], rng)
        return k, k
    rp = [(k, p.get(k, 0) - m) for k, m in common if p.get(k, 0) - m > 0]
    rq = [(k, q.get(k, 0) - m) for k, m in common if q.get(k, 0) - m > 0]
    return _draw(rp, rng), _draw(rq, rng)


def _maximal_coupling_law(p, q):
    keys = set(p) | set(q)
    common = {k: min(p.get(k, 0), q.get(k, 0)) for k in keys}
    ov = sum(common.values())
    out = {(k, k): m for k, m in common.items() if m}
    if ov != 1:
        rp = {k: p.get(k, 0) - common[k] for k in keys if p.get(k, 0) - common[k] > 0}
        rq = {k: q.get(k, 0) - common[k] for k in keys if q.get(k, 0) - common[k] > 0}
        r = 1 - ov
        for x, px in rp.items():
            for y, qy in rq.items():
                out[(x, y)] = out.get((x, y), 0) + px * qy / r
    return out


def _normalise(d):
    z = sum(d.values())
    return {k: v / z for k, v in d.items()}


def _start_sub(kernel, bi, sigma, tau):
    """Sub-block nearest the disagreement, if it touches the block."""
    blk = kernel.blockset[bi]
    g = kernel.graph
    diff = sigma ^ tau
    if not blk.subblocks or not diff:
        return None
    verts = set()
    for k in range(g.n_edges):
        if (diff >> k) & 1:
            verts.update(g.edges[k])
    for si, part in enumerate(blk.subblocks):
        for k in part:
            if verts & set(g.edges[k]):
                return si
    return None


def coupled_step(kernel, sigma, tau, rng, bi=None):
    """One step of the grand coupling; both chains update the same block."""
    if bi is None:
        bi = int(rng.integers(len(kernel)))
    blk = kernel.blockset[bi]
    if (sigma ^ tau) & ~blk.mask == 0:
        s = (sequential_update if blk.subblocks else conditional_sample)(kernel, sigma, bi, rng)
        return s, s
    if not blk.subblocks:
        p = kernel.conditional_law(sigma, bi)
        q = kernel.conditional_law(tau, bi)
        return _maximal_coupling_draw(p, q, rng)
    start = _start_sub(kernel, bi, sigma, tau)
    a = kernel.conditional(sigma, bi)
    b = kernel.conditional(tau, bi)
    for si in _sub_order(blk, start):
        m = _masks(blk.subblocks[si])
        p = _normalise(_group(a, m))
        q = _normalise(_group(b, m))
        va, vb = _maximal_coupling_draw(p, q, rng)
        a = [(c, wt) for c, wt in a if c & m == va]
        b = [(c, wt) for c, wt in b if c & m == vb]
    return a[0][0], b[0][0]


def coupled_law(kernel, sigma, tau):
    """Exact joint law of ``coupled_step`` averaged over the block choice."""
    nb = len(kernel)
    out = {}

    def add(key, pr):
        out[key] = out.get(key, 0) + pr / nb

    for bi in range(nb):
        blk = kernel.blockset[bi]
        if (sigma ^ tau) & ~blk.mask == 0:
            law = sequential_law(kernel, sigma, bi) if blk.subblocks else kernel.conditional_law(sigma, bi)
            for c, pr in law.items():
                add((c, c), pr)
            continue
        if not blk.subblocks:
            joint = _maximal_coupling_law(kernel.conditional_law(sigma, bi), kernel.conditional_law(tau, bi))
            for key, pr in joint.items():
                add(key, pr)
            continue
        order = _sub_order(blk, _start_sub(kernel, bi, sigma, tau))

        def rec(a, b, pos, prob):
            if pos == len(order):
                add((a[0][0], b[0][0]), prob)
                return
            m = _masks(blk.subblocks[order[pos]])
            joint = _maximal_coupling_law(_normalise(_group(a, m)), _normalise(_group(b, m)))
            for (va, vb), pr in joint.items():
                rec([(c, x) for c, x in a if c & m == va], [(c, x) for c, x in b if c & m == vb],
                    pos + 1, prob * pr)

        rec(kernel.conditional(sigma, bi), kernel.conditional(tau, bi), 0, 1)
    return out


def hamming(x, y):
    return bin(x ^ y).count("1")


def contraction_estimate(kernel, pairs, rng, trials=1000):
    """Monte Carlo E[rho(X1,Y1)]/rho(x,y) per pair, rho = Hamming distance.

    ``mean_ratio`` is the largest per-pair mean and ``stderr`` belongs to that
    pair.
    """
    per = []
    for sigma, tau in pairs:
        d0 = hamming(sigma, tau)
        if d0 == 0:
            raise ValueError("pair at distance zero")
        vals = np.empty(trials)
        for t in range(trials):
            x, y = coupled_step(kernel, sigma, tau, rng)
            vals[t] = hamming(x, y) / d0
        mean = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        per.append({"pair": [sigma, tau], "distance": d0, "mean_ratio": mean, "stderr": se})
    worst = max(per, key=lambda r: r["mean_ratio"]) if per else {"mean_ratio": 0.0, "stderr": 0.0}
    return {
        "pairs": len(per),
        "trials": trials,
        "mean_ratio": worst["mean_ratio"],
        "stderr": worst["stderr"],
        "per_pair": per,
    }
