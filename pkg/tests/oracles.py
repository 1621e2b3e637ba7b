"""Slow, obviously-correct reference implementations used as test oracles."""

from itertools import combinations

import numpy as np


def left_point(F: np.ndarray, S: np.ndarray, idx) -> np.ndarray:
    """Running Σ F_{u_k}·(S_{u_{k+1}∧t} − S_{u_k∧t}), one grid time at a time."""
    idx = list(idx)
    out = np.zeros(S.shape[0])
    for t in range(S.shape[0]):
        total = 0.0
        for u, v in zip(idx[:-1], idx[1:]):
            if u >= t:
                break
            w = min(v, t)
            total += float(np.dot(F[u], S[w] - S[u]))
        out[t] = total
    return out


def area(S: np.ndarray, idx, s: int, t: int) -> np.ndarray:
    """∫_s^t (S^n_u − S^n_s) ⊗ dS_u by walking the grid one step at a time."""
    idx = sorted(idx)
    d = S.shape[1]
    out = np.zeros((d, d))
    left = S[max(k for k in idx if k <= s)]
    for j in range(s, t):
        start = max(k for k in idx if k <= j)
        out += np.outer(S[start] - left, S[j + 1] - S[j])
    return out


def discrete_qv(S: np.ndarray, idx, t: int) -> np.ndarray:
    idx = list(idx)
    d = S.shape[1]
    out = np.zeros((d, d))
    for u, v in zip(idx[:-1], idx[1:]):
        if u >= t:
            break
        inc = S[min(v, t)] - S[u]
        out += np.outer(inc, inc)
    return out


def p_variation_power(x: np.ndarray, p: float) -> float:
    """max over all sub-sequences containing both ends of Σ|x_{k+1} − x_k|^p.

    Terms are summed left to right with the same per-term arithmetic as the
    dynamic program, so the two agree bitwise.
    """
    m = x.shape[0]
    best = 0.0
    for r in range(0, m - 1):
        for inner in combinations(range(1, m - 1), r):
            chain = (0,) + inner + (m - 1,)
            total = 0.0
            for i, j in zip(chain[:-1], chain[1:]):
                acc = 0.0
                for q in range(x.shape[1]):
                    diff = x[j, q] - x[i, q]
                    acc += diff * diff
                total = total + acc ** (0.5 * p)
            best = max(best, total)
    return best


def chen_gap(XX, Z: np.ndarray, X: np.ndarray) -> float:
    """Triple loop over s < u < t of the Chen defect (dense XX)."""
    m = Z.shape[0]
    worst = 0.0
    for s in range(m):
        for u in range(s + 1, m):
            for t in range(u + 1, m):
                gap = XX[s, t] - XX[s, u] - XX[u, t] - np.outer(Z[u] - Z[s], X[t] - X[u])
                worst = max(worst, float(np.linalg.norm(gap)))
    return worst


def crossing_level(S: np.ndarray, n: int, base: float = 1.0) -> list[int]:
    """Union over m <= n of first-passage indices at threshold base·2^-m.

    Only valid for paths without exactly flat stretches.
    """
    points = {0, S.shape[0] - 1}
    for m in range(1, n + 1):
        h = base * 2.0**-m
        tau = 0
        for j in range(1, S.shape[0]):
            if np.linalg.norm(S[j] - S[tau]) >= h:
                points.add(j)
                tau = j
    return sorted(points)
