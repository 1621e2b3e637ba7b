"""Compiled inner loops for variation dynamic programs and two-parameter functions.

Two-parameter "area form" functions are stored as L weighted terms sharing a
grid subset of size M; term l contributes

    coef[l] * (J_j - J_i + (a_j - a_i) ⊗ (b_j - c_j) - a_i ⊗ (c_j - c_i))

with J of shape (L, M, d, e) and a (L, M, d), b and c (L, M, e).
"""

from __future__ import annotations

import math

import numba
import numpy as np


@numba.njit(cache=True, inline="always")
def _area_sq(J, a, b, c, coef, i, j):
    L, _, d, e = J.shape
    acc = 0.0
    for p in range(d):
        for q in range(e):
            v = 0.0
            for l in range(L):
                v += coef[l] * (
                    J[l, j, p, q]
                    - J[l, i, p, q]
                    + (a[l, j, p] - a[l, i, p]) * (b[l, j, q] - c[l, j, q])
                    - a[l, i, p] * (c[l, j, q] - c[l, i, q])
                )
            acc += v * v
    return acc


@numba.njit(cache=True)
def area_values(J, a, b, c, coef, ii, jj):
    L, _, d, e = J.shape
    out = np.zeros((ii.size, d, e))
    for k in range(ii.size):
        i = ii[k]
        j = jj[k]
        for p in range(d):
            for q in range(e):
                v = 0.0
                for l in range(L):
                    v += coef[l] * (
                        J[l, j, p, q]
                        - J[l, i, p, q]
                        + (a[l, j, p] - a[l, i, p]) * (b[l, j, q] - c[l, j, q])
                        - a[l, i, p] * (c[l, j, q] - c[l, i, q])
                    )
                out[k, p, q] = v
    return out


@numba.njit(cache=True)
def area_sup(J, a, b, c, coef):
    m = J.shape[1]
    best = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            s = _area_sq(J, a, b, c, coef, i, j)
            if s > best:
                best = s
    return math.sqrt(best)


@numba.njit(cache=True)
def dp_area(J, a, b, c, coef, p):
    m = J.shape[1]
    V = np.zeros(m)
    half = 0.5 * p
    for j in range(1, m):
        best = -1.0
        for i in range(j):
            v = V[i] + _area_sq(J, a, b, c, coef, i, j) ** half
            if v > best:
                best = v
        V[j] = best
    return V[m - 1]


@numba.njit(cache=True)
def dp_area_table(J, a, b, c, coef, p):
    m = J.shape[1]
    half = 0.5 * p
    cost = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            cost[i, j] = _area_sq(J, a, b, c, coef, i, j) ** half
    return _table_from_cost(cost)


@numba.njit(cache=True)
def _table_from_cost(cost):
    m = cost.shape[0]
    W = np.zeros((m, m))
    for s in range(m):
        for j in range(s + 1, m):
            best = -1.0
            for i in range(s, j):
                v = W[s, i] + cost[i, j]
                if v > best:
                    best = v
            W[s, j] = best
    return W


@numba.njit(cache=True)
def dp_path(x, p):
    m = x.shape[0]
    d = x.shape[1]
    V = np.zeros(m)
    half = 0.5 * p
    for j in range(1, m):
        best = -1.0
        for i in range(j):
            acc = 0.0
            for q in range(d):
                diff = x[j, q] - x[i, q]
                acc += diff * diff
            v = V[i] + acc**half
            if v > best:
                best = v
        V[j] = best
    return V[m - 1]


@numba.njit(cache=True)
def dp_path_table(x, p):
    m = x.shape[0]
    d = x.shape[1]
    half = 0.5 * p
    cost = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            acc = 0.0
            for q in range(d):
                diff = x[j, q] - x[i, q]
                acc += diff * diff
            cost[i, j] = acc**half
    return _table_from_cost(cost)


@numba.njit(cache=True)
def dp_dense(norms, p):
    m = norms.shape[0]
    V = np.zeros(m)
    for j in range(1, m):
        best = -1.0
        for i in range(j):
            v = V[i] + norms[i, j] ** p
            if v > best:
                best = v
        V[j] = best
    return V[m - 1]


@numba.njit(cache=True)
def dp_dense_table(norms, p):
    m = norms.shape[0]
    cost = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            cost[i, j] = norms[i, j] ** p
    return _table_from_cost(cost)


@numba.njit(cache=True, inline="always")
def _remainder_sq(F, Fp, Z, i, j):
    m = F.shape[1]
    d = Z.shape[1]
    acc = 0.0
    for a in range(m):
        v = F[j, a] - F[i, a]
        for b in range(d):
            v -= Fp[i, a, b] * (Z[j, b] - Z[i, b])
        acc += v * v
    return acc


@numba.njit(cache=True)
def dp_remainder(F, Fp, Z, r):
    n = F.shape[0]
    V = np.zeros(n)
    half = 0.5 * r
    for j in range(1, n):
        best = -1.0
        for i in range(j):
            v = V[i] + _remainder_sq(F, Fp, Z, i, j) ** half
            if v > best:
                best = v
        V[j] = best
    return V[n - 1]


@numba.njit(cache=True)
def superadditivity_defect(W):
    m = W.shape[0]
    best = -np.inf
    for s in range(m):
        for u in range(s + 1, m):
            for t in range(u + 1, m):
                v = W[s, u] + W[u, t] - W[s, t]
                if v > best:
                    best = v
    if best == -np.inf:
        return 0.0
    return best
