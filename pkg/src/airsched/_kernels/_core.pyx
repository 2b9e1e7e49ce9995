# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Semantics match _fallback.py exactly; see that module for the contracts.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, log2

cnp.import_array()

cdef double LN2 = 0.6931471805599453


cdef void _row_mass(const double[:, :, ::1] a, double[:, ::1] c) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], t = a.shape[2]
    cdef Py_ssize_t i, j, s
    cdef double acc
    for i in range(n):
        for s in range(t):
            acc = 0.0
            for j in range(m):
                acc += a[i, j, s]
            c[i, s] = acc


cdef void _interference(const double[:, :, ::1] a, const double[:, :, ::1] pr,
                        double[:, ::1] c, double[:, :, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], t = a.shape[2]
    cdef Py_ssize_t i, j, s, p
    cdef double acc
    _row_mass(a, c)
    for j in range(m):
        for s in range(t):
            acc = 0.0
            for p in range(n):
                acc += c[p, s] * pr[p, j, s]
            for i in range(n):
                out[i, j, s] = acc
    for i in range(n):
        for j in range(m):
            for s in range(t):
                out[i, j, s] -= c[i, s] * pr[i, j, s]


def interference(const double[:, :, ::1] a, const double[:, :, ::1] pr):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], t = a.shape[2]
    out_arr = np.empty((n, m, t))
    c_arr = np.empty((n, t))
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] c = c_arr
    with nogil:
        _interference(a, pr, c, out)
    return out_arr


def rates(const double[:, :, ::1] a, const double[:, :, ::1] pr, double n0):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], t = a.shape[2]
    out_arr = np.empty((n, m, t))
    c_arr = np.empty((n, t))
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] c = c_arr
    cdef Py_ssize_t i, j, s
    with nogil:
        _interference(a, pr, c, out)
        for i in range(n):
            for j in range(m):
                for s in range(t):
                    out[i, j, s] = log2(1.0 + a[i, j, s] * pr[i, j, s]
                                        / (out[i, j, s] + n0))
    return out_arr


def denominators(const double[:, :, ::1] a, const double[:, :, ::1] pr, double n0):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], t = a.shape[2]
    out_arr = np.empty((n, m, t))
    c_arr = np.empty((n, t))
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] c = c_arr
    cdef Py_ssize_t i, j, s
    with nogil:
        _interference(a, pr, c, out)
        for i in range(n):
            for j in range(m):
                for s in range(t):
                    out[i, j, s] += a[i, j, s] * pr[i, j, s] + n0
    return out_arr


cdef void _excluded_response(const double[:, :, ::1] pr, const double[:, :, ::1] d,
                             double[:, ::1] rowterm) noexcept nogil:
    # rowterm[i,s] = sum_j pr[i,j,s] * (sum_{p != i} 1/d[p,j,s])
    cdef Py_ssize_t n = d.shape[0], m = d.shape[1], t = d.shape[2]
    cdef Py_ssize_t i, j, s
    cdef double colsum
    for i in range(n):
        for s in range(t):
            rowterm[i, s] = 0.0
    for j in range(m):
        for s in range(t):
            colsum = 0.0
            for i in range(n):
                colsum += 1.0 / d[i, j, s]
            for i in range(n):
                rowterm[i, s] += pr[i, j, s] * (colsum - 1.0 / d[i, j, s])


def concave_grad(const double[:, :, ::1] a, const double[:, :, ::1] pr, double n0):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], t = a.shape[2]
    d_arr = np.empty((n, m, t))
    out_arr = np.empty((n, m, t))
    c_arr = np.empty((n, t))
    row_arr = np.empty((n, t))
    cdef double[:, :, ::1] d = d_arr
    cdef double[:, :, ::1] out = out_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] rowterm = row_arr
    cdef Py_ssize_t i, j, s
    with nogil:
        _interference(a, pr, c, d)
        for i in range(n):
            for j in range(m):
                for s in range(t):
                    d[i, j, s] += a[i, j, s] * pr[i, j, s] + n0
        _excluded_response(pr, d, rowterm)
        for i in range(n):
            for j in range(m):
                for s in range(t):
                    out[i, j, s] = (pr[i, j, s] / d[i, j, s] + rowterm[i, s]) / LN2
    return out_arr


def tangent_row_slopes(const double[:, :, ::1] a_prev, const double[:, :, ::1] pr, double n0):
    cdef Py_ssize_t n = a_prev.shape[0], m = a_prev.shape[1], t = a_prev.shape[2]
    e_arr = np.empty((n, m, t))
    c_arr = np.empty((n, t))
    row_arr = np.empty((n, t))
    cdef double[:, :, ::1] e = e_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] rowterm = row_arr
    cdef Py_ssize_t i, j, s
    with nogil:
        _interference(a_prev, pr, c, e)
        for i in range(n):
            for j in range(m):
                for s in range(t):
                    e[i, j, s] += n0
        _excluded_response(pr, e, rowterm)
        for i in range(n):
            for s in range(t):
                rowterm[i, s] /= LN2
    return row_arr


def fw_line_search(const double[::1] d0, const double[::1] ed, double lin_slope):
    cdef Py_ssize_t k = d0.shape[0]
    cdef Py_ssize_t q, it
    cdef double lo, hi, mid, acc, result
    with nogil:
        acc = 0.0
        for q in range(k):
            acc += ed[q] / (d0[q] + ed[q])
        if acc / LN2 + lin_slope >= 0.0:
            result = 1.0
        else:
            acc = 0.0
            for q in range(k):
                acc += ed[q] / d0[q]
            if acc / LN2 + lin_slope <= 0.0:
                result = 0.0
            else:
                lo = 0.0
                hi = 1.0
                for it in range(60):
                    mid = 0.5 * (lo + hi)
                    acc = 0.0
                    for q in range(k):
                        acc += ed[q] / (d0[q] + mid * ed[q])
                    if acc / LN2 + lin_slope > 0.0:
                        lo = mid
                    else:
                        hi = mid
                result = 0.5 * (lo + hi)
    return result


cdef void _hungarian(const double[:, ::1] cost, Py_ssize_t k, double[::1] u, double[::1] v,
                     long long[::1] p, long long[::1] way, double[::1] minv,
                     unsigned char[::1] used) noexcept nogil:
    # Potentials-based assignment on a (k+1, k+1) cost matrix, row 0 / col 0
    # are sentinels; fills p[j] = row matched to column j.
    cdef Py_ssize_t i, j, j0, j1, i0
    cdef double delta, cur
    for j in range(k + 1):
        u[j] = 0.0
        v[j] = 0.0
        p[j] = 0
        way[j] = 0
    for i in range(1, k + 1):
        p[0] = i
        j0 = 0
        for j in range(k + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            delta = INFINITY
            j1 = 0
            for j in range(1, k + 1):
                if used[j] == 0:
                    cur = cost[i0, j] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(k + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1


def max_weight_matching(const double[:, ::1] w):
    cdef Py_ssize_t n = w.shape[0], m = w.shape[1]
    cdef Py_ssize_t k = n if n > m else m
    cost_arr = np.zeros((k + 1, k + 1))
    cdef double[:, ::1] cost = cost_arr
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(m):
            if w[i, j] > 0.0:
                cost[i + 1, j + 1] = -w[i, j]
    u_arr = np.empty(k + 1)
    v_arr = np.empty(k + 1)
    p_arr = np.empty(k + 1, dtype=np.int64)
    way_arr = np.empty(k + 1, dtype=np.int64)
    minv_arr = np.empty(k + 1)
    used_arr = np.empty(k + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef long long[::1] p = p_arr
    cdef long long[::1] way = way_arr
    cdef double[::1] minv = minv_arr
    cdef unsigned char[::1] used = used_arr
    with nogil:
        _hungarian(cost, k, u, v, p, way, minv, used)
    out_arr = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] out = out_arr
    for j in range(1, m + 1):
        i = p[j]
        if 1 <= i <= n and w[i - 1, j - 1] > 0.0:
            out[i - 1] = j - 1
    return out_arr


def max_weight_matching_batch(const double[:, :, ::1] w):
    cdef Py_ssize_t n = w.shape[0], m = w.shape[1], t = w.shape[2]
    cdef Py_ssize_t k = n if n > m else m
    cost_arr = np.empty((k + 1, k + 1))
    u_arr = np.empty(k + 1)
    v_arr = np.empty(k + 1)
    p_arr = np.empty(k + 1, dtype=np.int64)
    way_arr = np.empty(k + 1, dtype=np.int64)
    minv_arr = np.empty(k + 1)
    used_arr = np.empty(k + 1, dtype=np.uint8)
    out_arr = np.full((n, t), -1, dtype=np.int64)
    cdef double[:, ::1] cost = cost_arr
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef long long[::1] p = p_arr
    cdef long long[::1] way = way_arr
    cdef double[::1] minv = minv_arr
    cdef unsigned char[::1] used = used_arr
    cdef long long[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, s
    with nogil:
        for s in range(t):
            for i in range(k + 1):
                for j in range(k + 1):
                    cost[i, j] = 0.0
            for i in range(n):
                for j in range(m):
                    if w[i, j, s] > 0.0:
                        cost[i + 1, j + 1] = -w[i, j, s]
            _hungarian(cost, k, u, v, p, way, minv, used)
            for j in range(1, m + 1):
                i = p[j]
                if 1 <= i <= n and w[i - 1, j - 1, s] > 0.0:
                    out[i - 1, s] = j - 1
    return out_arr
