"""Single-edge / single-face Markov chain for the 1-2 model."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dimer import _face_masks, edge_flip_legal, face_rotate_legal, other_present
from .hexlattice import HORIZONTAL, NESW, NWSE
from .model import GuardError, Weights

DENSE_GUARD = 20000
RATIONAL_GUARD = 5000

SAME = "Same"
NONE = "None"
FACE = "FaceRotate"

# (class of e, class of both flankers) -> (case when e present in w1, case when absent)
_PARALLEL = {
    (HORIZONTAL, NWSE): ("2b", "2c"),
    (HORIZONTAL, NESW): ("2d", "2e"),
    (NWSE, HORIZONTAL): ("2f", "2g"),
    (NWSE, NESW): ("2h", "2i"),
    (NESW, NWSE): ("2j", "2k"),
    (NESW, HORIZONTAL): ("2l", "2m"),
}

REVERSE = {"2a": "2a", FACE: FACE, SAME: SAME, NONE: NONE}
for _x, _y in _PARALLEL.values():
    REVERSE[_x] = _y
    REVERSE[_y] = _x


def case_rate(case, w):
    """Rate of a move case relative to C_Lambda."""
    a, b, c = w.a, w.b, w.c
    table = {
        FACE: 1, "2a": 1,
        "2b": b / c, "2e": b / c,
        "2c": c / b, "2d": c / b,
        "2f": a / c, "2i": a / c,
        "2g": c / a, "2h": c / a,
        "2j": b / a, "2m": b / a,
        "2k": a / b, "2l": a / b,
    }
    return table[case]


def c_lambda(g, w):
    lo = min(w.a, w.b, w.c)
    hi = max(w.a, w.b, w.c)
    return lo / (2 * (len(g.internal) + len(g.faces)) * hi)


def edge_case(g, cfg, k):
    """Case label of flipping internal edge k at cfg, or None if illegal."""
    if not edge_flip_legal(g, cfg, k):
        return None
    u, v = [g.vertex_index[x] for x in g.edges[k]]
    (e1,) = other_present(g, cfg, k, u)
    (e2,) = other_present(g, cfg, k, v)
    c1, c2 = g.classes[e1], g.classes[e2]
    if c1 != c2:
        return "2a"
    present = (cfg >> k) & 1
    pair = _PARALLEL[(g.classes[k], c1)]
    return pair[0] if present else pair[1]


def classify_move(g, w1, w2):
    if (w1 ^ w2) & g.boundary_mask:
        raise ValueError("configurations have different boundary conditions")
    if w1 == w2:
        return SAME
    diff = w1 ^ w2
    if diff & (diff - 1) == 0:
        k = diff.bit_length() - 1
        return edge_case(g, w1, k) or NONE
    for f, (even, odd, _, _) in enumerate(_face_masks(g)):
        if diff == even | odd:
            return FACE if face_rotate_legal(g, w1, f) else NONE
    return NONE


@dataclass(frozen=True, eq=False)
class Kernel:
    graph: object
    weights: Weights
    boundary: int = 0

    @property
    def C(self):
        return c_lambda(self.graph, self.weights)

    @property
    def n_sites(self):
        return len(self.graph.internal) + len(self.graph.faces)

    @property
    def accept_scale(self):
        w = self.weights
        return min(w.a, w.b, w.c) / (2 * max(w.a, w.b, w.c))

    def in_mode(self, mode):
        return Kernel(self.graph, self.weights.in_mode(mode), self.boundary)

    def moves(self, cfg):
        """(next configuration, probability) for each legal move from cfg."""
        g = self.graph
        C = self.C
        out = []
        for k in g.internal:
            case = edge_case(g, cfg, k)
            if case is not None:
                out.append((cfg ^ (1 << k), C * case_rate(case, self.weights)))
        for f, (even, odd, _, _) in enumerate(_face_masks(g)):
            if face_rotate_legal(g, cfg, f):
                out.append((cfg ^ (even | odd), C))
        return out

    def row(self, cfg):
        moves = self.moves(cfg)
        out = dict(moves)
        out[cfg] = 1 - sum(p for _, p in moves)
        return out


def transition_prob(kernel, w1, w2):
    g = kernel.graph
    case = classify_move(g, w1, w2)
    if case == SAME:
        return kernel.row(w1)[w1]
    if case == NONE:
        return 0 * kernel.C
    return kernel.C * case_rate(case, kernel.weights)


def step(kernel, cfg, rng):
    """One exact draw from P(cfg, .)."""
    g = kernel.graph
    n_int = len(g.internal)
    site = int(rng.integers(kernel.n_sites))
    u = rng.random()
    scale = float(kernel.accept_scale)
    if site < n_int:
        k = g.internal[site]
        case = edge_case(g, cfg, k)
        if case is not None and u < float(case_rate(case, kernel.weights)) * scale:
            return cfg ^ (1 << k)
        return cfg
    f = site - n_int
    if face_rotate_legal(g, cfg, f) and u < scale:
        even, odd, _, _ = _face_masks(g)[f]
        return cfg ^ (even | odd)
    return cfg


def run(kernel, cfg, n_steps, rng, batch=65536):
    """Generator of successive states (n_steps of them) starting after cfg."""
    g = kernel.graph
    n_int = len(g.internal)
    scale = float(kernel.accept_scale)
    rates = {}
    masks = _face_masks(g)
    done = 0
    while done < n_steps:
        m = min(batch, n_steps - done)
        sites = rng.integers(kernel.n_sites, size=m)
        us = rng.random(m)
        for site, u in zip(sites.tolist(), us.tolist()):
            if site < n_int:
                k = g.internal[site]
                key = (cfg, k)
                r = rates.get(key)
                if r is None:
                    case = edge_case(g, cfg, k)
                    r = rates[key] = 0.0 if case is None else float(case_rate(case, kernel.weights)) * scale
                if u < r:
                    cfg ^= 1 << k
            else:
                f = site - n_int
                if u < scale and face_rotate_legal(g, cfg, f):
                    even, odd, _, _ = masks[f]
                    cfg ^= even | odd
            yield cfg
        done += m


def sparse_rows(kernel, space, guard=DENSE_GUARD):
    """Rows as dicts {column: probability}; exact when weights are rational."""
    if len(space) > guard:
        raise GuardError(f"state space of {len(space)} exceeds {guard}")
    idx = space.index
    rows = []
    for s in space.states:
        row = {}
        for t, p in kernel.row(s).items():
            if t not in idx:
                raise ValueError("move leaves the state space")
            row[idx[t]] = p
        rows.append(row)
    return rows


def transition_matrix(kernel, space, mode="float", guard=DENSE_GUARD):
    """Dense float matrix, or (rational mode) a list of lists of Fractions."""
    n = len(space)
    if mode == "rational":
        if n > RATIONAL_GUARD:
            raise GuardError(f"rational matrix of {n} states exceeds {RATIONAL_GUARD}")
        rows = sparse_rows(kernel.in_mode("rational"), space, guard)
        out = [[Fraction(0)] * n for _ in range(n)]
        for i, row in enumerate(rows):
            for j, p in row.items():
                out[i][j] = p
        return out
    if n > guard:
        raise GuardError(f"state space of {n} exceeds {guard}")
    rows = sparse_rows(kernel.in_mode("float"), space, guard)
    P = np.zeros((n, n))
    for i, row in enumerate(rows):
        for j, p in row.items():
            P[i, j] = p
    return P


def transition_sparse(kernel, space, guard=10**6):
    """scipy CSR matrix in float mode, for large connectivity audits."""
    import scipy.sparse as sps

    rows = sparse_rows(kernel.in_mode("float"), space, guard)
    ii, jj, vv = [], [], []
    for i, row in enumerate(rows):
        for j, p in row.items():
            ii.append(i)
            jj.append(j)
            vv.append(p)
    n = len(space)
    return sps.csr_matrix((vv, (ii, jj)), shape=(n, n))
