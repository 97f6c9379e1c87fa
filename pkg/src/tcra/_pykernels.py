"""Pure-Python versions of the hot loops in ``_kernels.pyx``.

Same signatures, same update order and same termination rules, so either
backend may be selected at import without changing results beyond float
rounding.
"""

from __future__ import annotations

import math

import numpy as np


def _node(c, x):
    acc = 0.0
    for a in reversed(c):
        acc = acc * x + a
    return acc


def _edge(c, x):
    acc = 0.0
    for a in reversed(c[1:]):
        acc = acc * x + a
    return acc


def _time_tf(eps, n_users, q, p):
    return 1.0 - (1.0 - eps) * (1.0 - q * p * 0.5) ** (n_users - 1)


def ldpc_de(g_node, g_edge, l_node, l_edge, rho, eps, n_users, q,
            max_iter, succ_tol, stall_tol):
    g_node, g_edge, l_node, l_edge, rho = (
        list(map(float, a)) for a in (g_node, g_edge, l_node, l_edge, rho)
    )
    pvc = 1.0
    pcv = 1.0 - _edge(rho, 1.0 - pvc)
    pvt = _node(l_node, pcv) * _edge(g_edge, 1.0)
    ptv = _time_tf(eps, n_users, q, pvt)
    pe = pe_old = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        gt = _node(g_node, ptv)
        pe = gt * _node(l_node, pcv)
        pvc = gt * _edge(l_edge, pcv)
        pcv = 1.0 - _edge(rho, 1.0 - pvc)
        pvt = _node(l_node, pcv) * _edge(g_edge, ptv)
        ptv = _time_tf(eps, n_users, q, pvt)
        if pe < succ_tol or abs(pe - pe_old) < stall_tol:
            break
        pe_old = pe
    return pe < succ_tol, it, pe, ptv, pcv


def bec_de(l_node, l_edge, rho, delta, max_iter, succ_tol, stall_tol):
    l_node, l_edge, rho = (list(map(float, a)) for a in (l_node, l_edge, rho))
    if delta < succ_tol:
        return True, 0, delta
    x = pe = pe_old = delta
    it = 0
    for it in range(1, max_iter + 1):
        y = 1.0 - _edge(rho, 1.0 - x)
        pe = delta * _node(l_node, y)
        x = delta * _edge(l_edge, y)
        if pe < succ_tol or abs(pe - pe_old) < stall_tol:
            break
        pe_old = pe
    return pe < succ_tol, it, pe


def map_fail(prof, logfact, n, p):
    """``sum_E C(n-1,E-1) p^(E-1) (1-p)^(n-E) P_E`` evaluated outward from the mode."""
    m = n - 1
    if p <= 0.0:
        return prof[1]
    if p >= 1.0:
        return prof[n]
    j0 = min(int(math.floor((m + 1) * p)), m)
    t0 = math.exp(logfact[m] - logfact[j0] - logfact[m - j0]
                  + j0 * math.log(p) + (m - j0) * math.log(1.0 - p))
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


def map_de(g_node, v2c, v2c_edge, prof, n, eps, n_users, q,
           max_iter, succ_tol, stall_tol, pct0=1.0):
    g_node, v2c, prof = (list(map(float, a)) for a in (g_node, v2c, prof))
    logfact = [math.lgamma(i + 1.0) for i in range(n + 1)]
    v2c_eval = _edge if v2c_edge else _node
    pct = pct0
    ptv = _time_tf(eps, n_users, q, pct)
    pvc = v2c_eval(v2c, ptv)
    pe = pe_old = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        fail = map_fail(prof, logfact, n, pvc)
        pct = pvc * fail
        pe = _node(g_node, ptv) * fail
        ptv = _time_tf(eps, n_users, q, pct)
        pvc = v2c_eval(v2c, ptv)
        if pe < succ_tol or abs(pe - pe_old) < stall_tol:
            break
        pe_old = pe
    return pe < succ_tol, it, pe, pct


def peel(value, r, vs_ptr, vs_idx, sv_ptr, sv_idx, vc_ptr, vc_idx, cv_ptr, cv_idx,
         use_time, use_checks, max_iters):
    """Scheduled peeling: per iteration one time-node round then one check round."""
    nv = len(value)
    ns = len(r)
    nc = len(cv_ptr) - 1
    r = [int(x) for x in r]
    vs_ptr, vs_idx, sv_ptr, sv_idx = (a.tolist() for a in (vs_ptr, vs_idx, sv_ptr, sv_idx))
    vc_ptr, vc_idx, cv_ptr, cv_idx = (a.tolist() for a in (vc_ptr, vc_idx, cv_ptr, cv_idx))
    val = [int(x) for x in value]
    s_unk = [0] * ns
    s_sum = [0] * ns
    c_unk = [0] * nc
    c_xor = [0] * nc
    s_flag = [False] * ns
    c_flag = [False] * nc
    s_next = []
    c_next = []
    ops = 0
    unknown = sum(1 for x in val if x < 0)
    for s in range(ns):
        for v in sv_idx[sv_ptr[s]:sv_ptr[s + 1]]:
            if val[v] < 0:
                s_unk[s] += 1
            else:
                s_sum[s] += val[v]
        if r[s] >= 0 and s_unk[s] > 0:
            s_flag[s] = True
            s_next.append(s)
    for c in range(nc):
        for v in cv_idx[cv_ptr[c]:cv_ptr[c + 1]]:
            if val[v] < 0:
                c_unk[c] += 1
            else:
                c_xor[c] ^= val[v]
        c_flag[c] = True
        c_next.append(c)

    def resolve(v, b):
        nonlocal ops
        val[v] = b
        for s in vs_idx[vs_ptr[v]:vs_ptr[v + 1]]:
            s_unk[s] -= 1
            s_sum[s] += b
            ops += 1
            if not s_flag[s]:
                s_flag[s] = True
                s_next.append(s)
        for c in vc_idx[vc_ptr[v]:vc_ptr[v + 1]]:
            c_unk[c] -= 1
            c_xor[c] ^= b
            ops += 1
            if not c_flag[c]:
                c_flag[c] = True
                c_next.append(c)

    hist = []
    it = 0
    while it < max_iters and unknown > 0:
        newly = 0
        if use_time:
            cur, s_next = s_next, []
            for s in cur:
                s_flag[s] = False
            ready = []
            for s in cur:
                ops += 1
                if r[s] < 0 or s_unk[s] == 0:
                    continue
                gap = r[s] - s_sum[s]
                if gap == 0:
                    ready.append((s, 0))
                elif gap == s_unk[s]:
                    ready.append((s, 1))
            for s, b in ready:
                for v in sv_idx[sv_ptr[s]:sv_ptr[s + 1]]:
                    ops += 1
                    if val[v] < 0:
                        resolve(v, b)
                        newly += 1
                        unknown -= 1
        if use_checks and nc > 0:
            cur, c_next = c_next, []
            for c in cur:
                c_flag[c] = False
            ready = []
            for c in cur:
                ops += 1
                if c_unk[c] == 1:
                    ready.append(c)
            for c in ready:
                if c_unk[c] != 1:
                    continue
                for v in cv_idx[cv_ptr[c]:cv_ptr[c + 1]]:
                    ops += 1
                    if val[v] < 0:
                        resolve(v, c_xor[c])
                        newly += 1
                        unknown -= 1
                        break
        if newly == 0:
            break
        hist.append(newly)
        it += 1
    value[:] = val
    return it, np.asarray(hist, dtype=np.int64), ops


def count_independent(cols, max_size):
    """Number of linearly independent column subsets of each size 0..max_size."""
    cols = np.asarray(cols, dtype=np.uint64)
    n = cols.shape[0]
    ints = [sum(int(w) << (64 * i) for i, w in enumerate(row)) for row in cols]
    counts = np.zeros(max_size + 1, dtype=np.int64)
    counts[0] = 1
    if max_size == 0:
        return counts

    def dfs(start, basis):
        t = len(basis)
        for j in range(start, n):
            v = ints[j]
            for b, low in basis:
                if v & low:
                    v ^= b
            if v:
                counts[t + 1] += 1
                if t + 1 < max_size:
                    basis.append((v, v & -v))
                    dfs(j + 1, basis)
                    basis.pop()

    dfs(0, [])
    return counts


def first_dependency(cols, orders):
    """For each column ordering, the prefix length at which the columns first
    become linearly dependent (``orders.shape[1] + 1`` if never)."""
    cols = np.asarray(cols, dtype=np.uint64)
    orders = np.asarray(orders)
    ints = [sum(int(w) << (64 * i) for i, w in enumerate(row)) for row in cols]
    out = np.full(orders.shape[0], orders.shape[1] + 1, dtype=np.int32)
    for s, order in enumerate(orders):
        basis = []
        for t, j in enumerate(order):
            v = ints[int(j)]
            for b, low in basis:
                if v & low:
                    v ^= b
            if not v:
                out[s] = t + 1
                break
            basis.append((v, v & -v))
    return out
