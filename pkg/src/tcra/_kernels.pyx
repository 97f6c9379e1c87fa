# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Semantics are mirrored line-for-line by _pykernels.py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, exp, log, lgamma, floor
from libc.stdint cimport uint64_t, int64_t, int8_t, int32_t

cnp.import_array()


cdef inline double _node(const double[::1] c, double x) noexcept nogil:
    cdef Py_ssize_t i = c.shape[0] - 1
    cdef double acc = 0.0
    while i >= 0:
        acc = acc * x + c[i]
        i -= 1
    return acc


cdef inline double _edge(const double[::1] c, double x) noexcept nogil:
    cdef Py_ssize_t i = c.shape[0] - 1
    cdef double acc = 0.0
    while i >= 1:
        acc = acc * x + c[i]
        i -= 1
    return acc


cdef inline double _time_tf(double eps, int n_users, double q, double p) noexcept nogil:
    return 1.0 - (1.0 - eps) * pow(1.0 - q * p * 0.5, n_users - 1)


def ldpc_de(const double[::1] g_node, const double[::1] g_edge,
            const double[::1] l_node, const double[::1] l_edge,
            const double[::1] rho, double eps, int n_users, double q,
            int max_iter, double succ_tol, double stall_tol):
    cdef double pvc = 1.0, pcv, pvt, ptv, gt, pe_old = 1.0, pe = 1.0
    cdef int it = 0
    with nogil:
        pcv = 1.0 - _edge(rho, 1.0 - pvc)
        pvt = _node(l_node, pcv) * _edge(g_edge, 1.0)
        ptv = _time_tf(eps, n_users, q, pvt)
        for it in range(1, max_iter + 1):
            gt = _node(g_node, ptv)
            pe = gt * _node(l_node, pcv)
            pvc = gt * _edge(l_edge, pcv)
            pcv = 1.0 - _edge(rho, 1.0 - pvc)
            pvt = _node(l_node, pcv) * _edge(g_edge, ptv)
            ptv = _time_tf(eps, n_users, q, pvt)
            if pe < succ_tol:
                break
            if fabs(pe - pe_old) < stall_tol:
                break
            pe_old = pe
    return pe < succ_tol, it, pe, ptv, pcv


def bec_de(const double[::1] l_node, const double[::1] l_edge,
           const double[::1] rho, double delta,
           int max_iter, double succ_tol, double stall_tol):
    cdef double x = delta, y, pe = delta, pe_old = delta
    cdef int it = 0
    if delta < succ_tol:
        return True, 0, delta
    with nogil:
        for it in range(1, max_iter + 1):
            y = 1.0 - _edge(rho, 1.0 - x)
            pe = delta * _node(l_node, y)
            x = delta * _edge(l_edge, y)
            if pe < succ_tol:
                break
            if fabs(pe - pe_old) < stall_tol:
                break
            pe_old = pe
    return pe < succ_tol, it, pe


cdef double _map_fail(const double[::1] prof, const double[::1] logfact, int n, double p) noexcept nogil:
    # sum_{E=1}^{n} C(n-1,E-1) p^(E-1) (1-p)^(n-E) P_E, terms grown outward from the mode
    cdef int m = n - 1, j0, j
    cdef double t0, t, ratio, acc
    if p <= 0.0:
        return prof[1]
    if p >= 1.0:
        return prof[n]
    j0 = <int>floor((m + 1) * p)
    if j0 > m:
        j0 = m
    t0 = exp(logfact[m] - logfact[j0] - logfact[m - j0] + j0 * log(p) + (m - j0) * log(1.0 - p))
    acc = t0 * prof[j0 + 1]
    ratio = p / (1.0 - p)
    t = t0
    for j in range(j0, m):
        t = t * (m - j) / (j + 1.0) * ratio
        if t == 0.0:
            break
        acc += t * prof[j + 2]
    t = t0
    for j in range(j0, 0, -1):
        t = t * j / (m - j + 1.0) / ratio
        if t == 0.0:
            break
        acc += t * prof[j]
    return acc


def map_de(const double[::1] g_node, const double[::1] v2c, bint v2c_edge,
           const double[::1] prof, int n, double eps, int n_users, double q,
           int max_iter, double succ_tol, double stall_tol, double pct0=1.0):
    cdef double pct = pct0, ptv, pvc, fail, pe = 1.0, pe_old = 1.0
    cdef int it = 0, i
    cdef double[::1] logfact = np.empty(n + 1)
    for i in range(n + 1):
        logfact[i] = lgamma(i + 1.0)
    with nogil:
        ptv = _time_tf(eps, n_users, q, pct)
        pvc = _edge(v2c, ptv) if v2c_edge else _node(v2c, ptv)
        for it in range(1, max_iter + 1):
            fail = _map_fail(prof, logfact, n, pvc)
            pct = pvc * fail
            pe = _node(g_node, ptv) * fail
            ptv = _time_tf(eps, n_users, q, pct)
            pvc = _edge(v2c, ptv) if v2c_edge else _node(v2c, ptv)
            if pe < succ_tol:
                break
            if fabs(pe - pe_old) < stall_tol:
                break
            pe_old = pe
    return pe < succ_tol, it, pe, pct


cdef inline void _resolve(int v, int8_t b, int8_t[::1] value,
                          const int32_t[::1] vs_ptr, const int32_t[::1] vs_idx,
                          const int32_t[::1] vc_ptr, const int32_t[::1] vc_idx,
                          int32_t[::1] s_unk, int32_t[::1] s_sum,
                          int32_t[::1] c_unk, int8_t[::1] c_xor,
                          int8_t[::1] s_flag, int32_t* s_next, int* ns_next,
                          int8_t[::1] c_flag, int32_t* c_next, int* nc_next,
                          int64_t* ops) noexcept nogil:
    cdef int k, s, c
    value[v] = b
    for k in range(vs_ptr[v], vs_ptr[v + 1]):
        s = vs_idx[k]
        s_unk[s] -= 1
        s_sum[s] += b
        ops[0] += 1
        if not s_flag[s]:
            s_flag[s] = 1
            s_next[ns_next[0]] = s
            ns_next[0] += 1
    for k in range(vc_ptr[v], vc_ptr[v + 1]):
        c = vc_idx[k]
        c_unk[c] -= 1
        c_xor[c] ^= b
        ops[0] += 1
        if not c_flag[c]:
            c_flag[c] = 1
            c_next[nc_next[0]] = c
            nc_next[0] += 1


def peel(int8_t[::1] value, const int32_t[::1] r,
         const int32_t[::1] vs_ptr, const int32_t[::1] vs_idx,
         const int32_t[::1] sv_ptr, const int32_t[::1] sv_idx,
         const int32_t[::1] vc_ptr, const int32_t[::1] vc_idx,
         const int32_t[::1] cv_ptr, const int32_t[::1] cv_idx,
         bint use_time, bint use_checks, int max_iters):
    """Scheduled peeling: per iteration one time-node round then one check round."""
    cdef int nv = value.shape[0]
    cdef int ns = r.shape[0]
    cdef int nc = cv_ptr.shape[0] - 1
    cdef int32_t[::1] s_unk = np.zeros(max(ns, 1), dtype=np.int32)
    cdef int32_t[::1] s_sum = np.zeros(max(ns, 1), dtype=np.int32)
    cdef int32_t[::1] c_unk = np.zeros(max(nc, 1), dtype=np.int32)
    cdef int8_t[::1] c_xor = np.zeros(max(nc, 1), dtype=np.int8)
    cdef int8_t[::1] s_flag = np.zeros(max(ns, 1), dtype=np.int8)
    cdef int8_t[::1] c_flag = np.zeros(max(nc, 1), dtype=np.int8)
    cdef int32_t[::1] s_buf_a = np.empty(max(ns, 1), dtype=np.int32)
    cdef int32_t[::1] s_buf_b = np.empty(max(ns, 1), dtype=np.int32)
    cdef int32_t[::1] c_buf_a = np.empty(max(nc, 1), dtype=np.int32)
    cdef int32_t[::1] c_buf_b = np.empty(max(nc, 1), dtype=np.int32)
    cdef int32_t* s_cur = &s_buf_a[0]
    cdef int32_t* s_next = &s_buf_b[0]
    cdef int32_t* c_cur = &c_buf_a[0]
    cdef int32_t* c_next = &c_buf_b[0]
    cdef int8_t[::1] s_val = np.empty(max(ns, 1), dtype=np.int8)
    cdef int64_t[::1] hist = np.zeros(max(max_iters, 1), dtype=np.int64)
    cdef int ns_cur = 0, ns_next = 0, nc_cur = 0, nc_next = 0, nres
    cdef int i, k, s, c, v, it = 0, unknown = 0, iters = 0, newly
    cdef int32_t gap
    cdef int8_t b
    cdef int64_t ops = 0
    cdef int32_t* tmp

    with nogil:
        for v in range(nv):
            if value[v] < 0:
                unknown += 1
        for s in range(ns):
            for k in range(sv_ptr[s], sv_ptr[s + 1]):
                v = sv_idx[k]
                if value[v] < 0:
                    s_unk[s] += 1
                else:
                    s_sum[s] += value[v]
            if r[s] >= 0 and s_unk[s] > 0:
                s_flag[s] = 1
                s_next[ns_next] = s
                ns_next += 1
        for c in range(nc):
            for k in range(cv_ptr[c], cv_ptr[c + 1]):
                v = cv_idx[k]
                if value[v] < 0:
                    c_unk[c] += 1
                else:
                    c_xor[c] ^= value[v]
            c_flag[c] = 1
            c_next[nc_next] = c
            nc_next += 1

        while it < max_iters and unknown > 0:
            newly = 0
            if use_time:
                tmp = s_cur; s_cur = s_next; s_next = tmp
                ns_cur = ns_next
                ns_next = 0
                nres = 0
                for i in range(ns_cur):
                    s = s_cur[i]
                    s_flag[s] = 0
                # snapshot: which slots resolve, and to which value
                for i in range(ns_cur):
                    s = s_cur[i]
                    ops += 1
                    if r[s] < 0 or s_unk[s] == 0:
                        continue
                    gap = r[s] - s_sum[s]
                    if gap == 0:
                        s_val[s] = 0
                    elif gap == s_unk[s]:
                        s_val[s] = 1
                    else:
                        continue
                    s_cur[nres] = s
                    nres += 1
                for i in range(nres):
                    s = s_cur[i]
                    b = s_val[s]
                    for k in range(sv_ptr[s], sv_ptr[s + 1]):
                        v = sv_idx[k]
                        ops += 1
                        if value[v] < 0:
                            _resolve(v, b, value, vs_ptr, vs_idx, vc_ptr, vc_idx,
                                     s_unk, s_sum, c_unk, c_xor,
                                     s_flag, s_next, &ns_next, c_flag, c_next, &nc_next, &ops)
                            newly += 1
                            unknown -= 1
            if use_checks and nc > 0:
                tmp = c_cur; c_cur = c_next; c_next = tmp
                nc_cur = nc_next
                nc_next = 0
                nres = 0
                for i in range(nc_cur):
                    c = c_cur[i]
                    c_flag[c] = 0
                for i in range(nc_cur):
                    c = c_cur[i]
                    ops += 1
                    if c_unk[c] == 1:
                        c_cur[nres] = c
                        nres += 1
                for i in range(nres):
                    c = c_cur[i]
                    if c_unk[c] != 1:
                        continue
                    for k in range(cv_ptr[c], cv_ptr[c + 1]):
                        v = cv_idx[k]
                        ops += 1
                        if value[v] < 0:
                            _resolve(v, c_xor[c], value, vs_ptr, vs_idx, vc_ptr, vc_idx,
                                     s_unk, s_sum, c_unk, c_xor,
                                     s_flag, s_next, &ns_next, c_flag, c_next, &nc_next, &ops)
                            newly += 1
                            unknown -= 1
                            break
            if newly == 0:
                break
            hist[it] = newly
            it += 1
    return it, np.asarray(hist[:it]).copy(), ops


cdef bint _reduce(uint64_t* v, uint64_t* basis, int* piv, int t, int W) noexcept nogil:
    """Reduce v against t echelon basis vectors; returns True if v stays nonzero."""
    cdef int i, w, p
    for i in range(t):
        p = piv[i]
        if (v[p >> 6] >> (p & 63)) & 1:
            for w in range(W):
                v[w] ^= basis[i * W + w]
    for w in range(W):
        if v[w]:
            return True
    return False


cdef int _lowbit(uint64_t* v, int W) noexcept nogil:
    cdef int w, b
    for w in range(W):
        if v[w]:
            b = 0
            while not ((v[w] >> b) & 1):
                b += 1
            return w * 64 + b
    return -1


cdef void _dfs(const uint64_t[:, ::1] cols, int n, int W, int start, int t, int max_size,
               uint64_t* basis, int* piv, int64_t[::1] counts) noexcept nogil:
    cdef int j, w
    cdef uint64_t* v = basis + t * W
    for j in range(start, n):
        for w in range(W):
            v[w] = cols[j, w]
        if _reduce(v, basis, piv, t, W):
            counts[t + 1] += 1
            piv[t] = _lowbit(v, W)
            if t + 1 < max_size:
                _dfs(cols, n, W, j + 1, t + 1, max_size, basis, piv, counts)


def count_independent(const uint64_t[:, ::1] cols, int max_size):
    """Number of linearly independent column subsets of each size 0..max_size."""
    cdef int n = cols.shape[0], W = cols.shape[1]
    cdef int64_t[::1] counts = np.zeros(max_size + 1, dtype=np.int64)
    cdef uint64_t[::1] basis = np.zeros((max_size + 1) * W, dtype=np.uint64)
    cdef int[::1] piv = np.zeros(max_size + 1, dtype=np.intc)
    counts[0] = 1
    if max_size > 0 and n > 0:
        with nogil:
            _dfs(cols, n, W, 0, 0, max_size, &basis[0], &piv[0], counts)
    return np.asarray(counts)


def first_dependency(const uint64_t[:, ::1] cols, const int32_t[:, ::1] orders):
    """For each column ordering, the prefix length at which the columns first
    become linearly dependent (``orders.shape[1] + 1`` if never)."""
    cdef int S = orders.shape[0], L = orders.shape[1], W = cols.shape[1]
    cdef uint64_t[::1] basis = np.zeros((L + 1) * W, dtype=np.uint64)
    cdef int[::1] piv = np.zeros(L + 1, dtype=np.intc)
    cdef int32_t[::1] out = np.full(S, L + 1, dtype=np.int32)
    cdef int s, t, w
    cdef uint64_t* v
    with nogil:
        for s in range(S):
            for t in range(L):
                v = &basis[t * W]
                for w in range(W):
                    v[w] = cols[orders[s, t], w]
                if not _reduce(v, &basis[0], &piv[0], t, W):
                    out[s] = t + 1
                    break
                piv[t] = _lowbit(v, W)
    return np.asarray(out)
