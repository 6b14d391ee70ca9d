"""Mixing-time toolkit for chains given as dense matrices on enumerated spaces."""
from __future__ import annotations

import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

STEP_CAP = 10**6


class AnalysisError(ValueError):
    pass


def tv(mu, nu):
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise AnalysisError("distributions on different spaces")
    return 0.5 * float(np.abs(mu - nu).sum())


def tv_exact(mu, nu):
    if len(mu) != len(nu):
        raise AnalysisError("distributions on different spaces")
    return sum(abs(x - y) for x, y in zip(mu, nu)) / 2


def _check_stationary(P, pi, tol=1e-9):
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if np.abs(pi @ P - pi).max() > tol:
        raise AnalysisError("pi is not stationary for P")
    return P, pi


def _dist_rows(M, pi):
    return float(0.5 * np.abs(M - pi[None, :]).sum(axis=1).max())


def worst_case_distance(P, pi, t):
    P, pi = _check_stationary(P, pi)
    M = np.linalg.matrix_power(P, int(t))
    return _dist_rows(M, pi)


def d_curve(P, pi, t_max):
    """[d(0), d(1), ..., d(t_max)] by direct iteration."""
    P, pi = _check_stationary(P, pi)
    M = np.eye(len(pi))
    out = [_dist_rows(M, pi)]
    for _ in range(int(t_max)):
        M = M @ P
        out.append(_dist_rows(M, pi))
    return out


def mixing_time(P, pi, eps=0.25, cap=STEP_CAP):
    """min{t : d(t) <= eps} via repeated squaring then bisection."""
    P, pi = _check_stationary(P, pi)
    if _dist_rows(np.eye(len(pi)), pi) <= eps:
        return 0
    powers = [P]  # powers[j] = P^(2^j)
    t = 1
    while _dist_rows(powers[-1], pi) > eps:
        if 2 * t > cap:
            raise AnalysisError(f"t_mix exceeds step cap {cap}")
        powers.append(powers[-1] @ powers[-1])
        t *= 2
    # answer lies in (t/2, t]; build it bit by bit from below
    if t == 1:
        return 1
    lo_t = t // 2
    lo_M = powers[-2]
    for j in range(len(powers) - 3, -1, -1):
        cand = lo_M @ powers[j]
        if _dist_rows(cand, pi) > eps:
            lo_M = cand
            lo_t += 1 << j
    return lo_t + 1


def symmetrized(P, pi):
    P = np.asarray(P, dtype=float)
    s = np.sqrt(np.asarray(pi, dtype=float))
    S = (s[:, None] * P) / s[None, :]
    return S


def reversibility_residual(P, pi):
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    Q = pi[:, None] * P
    return float(np.abs(Q - Q.T).max())


def eigenvalues(P, pi, tol=1e-9):
    if reversibility_residual(P, pi) > tol:
        raise AnalysisError("P is not reversible with respect to pi")
    S = symmetrized(P, pi)
    S = 0.5 * (S + S.T)
    return np.sort(np.linalg.eigvalsh(S))[::-1]


def spectral_gap(P, pi, tol=1e-9):
    """(gamma, gamma_star) of a reversible kernel."""
    lam = eigenvalues(P, pi, tol)
    if len(lam) == 1:
        return 1.0, 1.0
    gamma = float(1 - lam[1])
    gamma_star = float(1 - np.abs(lam[1:]).max())
    P = np.asarray(P, dtype=float)
    if np.diag(P).min() >= 0.5 and abs(gamma - gamma_star) > tol:
        raise AnalysisError("lazy chain with gamma != gamma_star")
    return gamma, gamma_star


def relaxation_bounds(P, pi, eps=0.25, gamma_star=None):
    """(lower, upper) bounds on t_mix(eps) from the relaxation time."""
    if gamma_star is None:
        _, gamma_star = spectral_gap(P, pi)
    if gamma_star <= 1e-15:
        raise AnalysisError("chain is reducible or periodic")
    t_rel = 1.0 / gamma_star
    pmin = float(np.min(pi))
    upper = math.log(1.0 / (eps * pmin)) * t_rel
    lower = (t_rel - 1.0) * math.log(1.0 / (2.0 * eps))
    return lower, upper


def congestion_ratio(P, pi, P2, pi2, paths):
    """Congestion ratio of a path family.

    ``paths`` maps (x, y) support pairs of P2 to state-index sequences
    [x, ..., y] whose steps lie in the support of P.
    """
    P = np.asarray(P, dtype=float)
    P2 = np.asarray(P2, dtype=float)
    load = {}
    for (x, y), seq in paths.items():
        if seq[0] != x or seq[-1] != y:
            raise AnalysisError("path endpoints do not match")
        L = len(seq) - 1
        q2 = pi2[x] * P2[x, y]
        for a, b in zip(seq, seq[1:]):
            if P[a, b] <= 0:
                raise AnalysisError("path leaves the support of the base chain")
            load[(a, b)] = load.get((a, b), 0.0) + q2 * L
    if not load:
        return 0.0
    return max(v / (pi[a] * P[a, b]) for (a, b), v in load.items())


def comparison_bound(pi, pi2, B, gamma):
    """Upper bound on the gap of the compared chain."""
    ratio = float(np.max(np.asarray(pi, float) / np.asarray(pi2, float)))
    return ratio * B * gamma


def support_graph(P):
    P = np.asarray(P, dtype=float) if not hasattr(P, "tocsr") else P
    A = csr_matrix(P) if not hasattr(P, "tocsr") else P.tocsr()
    A = A.copy()
    A.setdiag(0)
    A.eliminate_zeros()
    A = ((A + A.T) > 0).astype(np.int8)
    return A


def support_components(P):
    """Component label per state of the support graph."""
    n, labels = connected_components(support_graph(P), directed=False)
    return n, labels


def diameter_lower_bound(P):
    """Diameter L of the support graph (inf if disconnected)."""
    A = support_graph(P)
    if A.shape[0] <= 1:
        return 0
    D = shortest_path(A, unweighted=True, directed=False)
    L = D.max()
    return int(L) if np.isfinite(L) else math.inf


def contraction_gap_bound(theta):
    if not 0 <= theta < 1:
        raise AnalysisError("theta must lie in [0, 1)")
    return 1.0 - theta


def contraction_tmix_bound(theta, diameter_rho, eps=0.25):
    """Path-coupling bound ceil((log D + log 1/eps) / -log theta)."""
    if not 0 < theta < 1:
        raise AnalysisError("theta must lie in (0, 1)")
    return math.ceil((math.log(diameter_rho) + math.log(1 / eps)) / -math.log(theta))


def report(P, pi, eps=0.25, curve_len=0):
    gamma, gamma_star = spectral_gap(P, pi)
    t = mixing_time(P, pi, eps)
    lower, upper = relaxation_bounds(P, pi, eps, gamma_star)
    ncomp, _ = support_components(P)
    out = {
        "gamma": gamma,
        "gamma_star": gamma_star,
        "t_rel": 1.0 / gamma_star,
        "t_mix": t,
        "diameter": diameter_lower_bound(P),
        "components": int(ncomp),
        "sandwich": {"lower": lower, "upper": upper},
    }
    if curve_len:
        out["d_curve"] = d_curve(P, pi, curve_len)
    return out
