"""Pure-numpy implementations of the hot kernels.

Reference semantics for the compiled extension: both backends must return
the same values (tested to float tolerance). Tensors are (n, m, t) float64,
C-contiguous; n indexes ground vehicles, m aerial relays, t slots.
"""
from __future__ import annotations

import math

import numpy as np

LN2 = math.log(2.0)


def interference(a: np.ndarray, pr: np.ndarray) -> np.ndarray:
    """Cross power at relay j in slot t from every transmitter other than i.

    out[i,j,t] = sum_{p != i} (sum_q a[p,q,t]) * pr[p,j,t]. Linear in a.
    """
    c = a.sum(axis=1)                                 # (n, t) transmit mass
    total = np.einsum("pt,pjt->jt", c, pr)            # (m, t)
    return total[None, :, :] - c[:, None, :] * pr


def rates(a: np.ndarray, pr: np.ndarray, n0: float) -> np.ndarray:
    """Per-link spectral efficiency log2(1 + a*pr / (interference + n0))."""
    inter = interference(a, pr)
    return np.log2(1.0 + a * pr / (inter + n0))


def denominators(a: np.ndarray, pr: np.ndarray, n0: float) -> np.ndarray:
    """Total received power at each link: a*pr + interference + n0."""
    return a * pr + interference(a, pr) + n0


def concave_grad(a: np.ndarray, pr: np.ndarray, n0: float) -> np.ndarray:
    """Gradient of sum_ijt log2(a*pr + interference + n0) w.r.t. a."""
    d = denominators(a, pr, n0)
    inv = 1.0 / d
    colsum = inv.sum(axis=0)                          # (m, t)
    rowterm = (pr * (colsum[None, :, :] - inv)).sum(axis=1)   # (n, t)
    return (pr * inv + rowterm[:, None, :]) / LN2


def tangent_row_slopes(a_prev: np.ndarray, pr: np.ndarray, n0: float) -> np.ndarray:
    """Row-constant gradient of sum_ijt log2(interference + n0), taken at a_prev.

    Returns an (n, t) array; the gradient w.r.t. a[u,v,t] does not depend on v.
    """
    e = interference(a_prev, pr) + n0
    inv = 1.0 / e
    colsum = inv.sum(axis=0)
    return (pr * (colsum[None, :, :] - inv)).sum(axis=1) / LN2


def fw_line_search(d0: np.ndarray, ed: np.ndarray, lin_slope: float) -> float:
    """Step maximizing sum log2(d0 + s*ed) + s*lin_slope over s in [0, 1].

    The objective is concave in s; bisection on its derivative. d0 + s*ed
    must stay positive on [0, 1] (guaranteed when both endpoints are
    feasible link power totals).
    """
    def dphi(s: float) -> float:
        return float((ed / (d0 + s * ed)).sum()) / LN2 + lin_slope

    if dphi(1.0) >= 0.0:
        return 1.0
    if dphi(0.0) <= 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if dphi(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def max_weight_matching(w: np.ndarray) -> np.ndarray:
    """Max-weight bipartite partial matching of an (n, m) weight matrix.

    Returns row_to_col, int64 (n,), -1 for unmatched rows. Nonpositive-weight
    assignments are dropped, so the empty matching is returned when no weight
    is positive. Exact (Hungarian on the zero-padded square problem).
    """
    w = np.asarray(w, dtype=np.float64)
    n, m = w.shape
    k = max(n, m)
    cost = np.zeros((k + 1, k + 1))
    cost[1:n + 1, 1:m + 1] = -np.maximum(w, 0.0)

    # Potentials-based assignment on the square cost matrix (minimization).
    u = np.zeros(k + 1)
    v = np.zeros(k + 1)
    p = np.zeros(k + 1, dtype=np.int64)       # p[j] = row matched to column j
    way = np.zeros(k + 1, dtype=np.int64)
    for i in range(1, k + 1):
        p[0] = i
        j0 = 0
        minv = np.full(k + 1, np.inf)
        used = np.zeros(k + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            free[0] = False
            cur = cost[i0, :] - u[i0] - v
            better = free & (cur < minv)
            minv[better] = cur[better]
            way[better] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(masked.argmin())
            delta = masked[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    row_to_col = np.full(n, -1, dtype=np.int64)
    for j in range(1, m + 1):
        i = p[j]
        if 1 <= i <= n and w[i - 1, j - 1] > 0.0:
            row_to_col[i - 1] = j - 1
    return row_to_col


def max_weight_matching_batch(w: np.ndarray) -> np.ndarray:
    """max_weight_matching applied per slot; w is (n, m, t), result (n, t)."""
    n, _, t = w.shape
    out = np.empty((n, t), dtype=np.int64)
    for s in range(t):
        out[:, s] = max_weight_matching(w[:, :, s])
    return out
