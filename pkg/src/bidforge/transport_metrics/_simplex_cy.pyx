# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transportation-simplex kernel.

Direct port of ``_simplex_py.solve_dense`` with identical pivot rules and
arithmetic order, so the two kernels return bit-identical flows; change the
two files together.
"""

import numpy as np

from ..errors import NumericalFailure

from libc.math cimport INFINITY


def solve_dense(supply, demand, cost, double eps=1e-12, double opt_tol=1e-11,
                Py_ssize_t max_iter=0):
    """Return (flow, objective, pivot count) for a balanced problem."""
    a0_arr = np.ascontiguousarray(supply, dtype=np.float64)
    b0_arr = np.ascontiguousarray(demand, dtype=np.float64)
    c_arr = np.ascontiguousarray(cost, dtype=np.float64)
    cdef double[::1] a0 = a0_arr
    cdef double[::1] b0 = b0_arr
    cdef double[:, ::1] c = c_arr
    cdef Py_ssize_t m = c.shape[0]
    cdef Py_ssize_t n = c.shape[1]

    flow_arr = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] flow = flow_arr
    cdef double obj = 0.0
    cdef Py_ssize_t i, j, k, s, kk, e, ei, ej, node, other, ii, jj

    # single-row/column problems have a forced flow
    if m == 1 or n == 1:
        if m == 1:
            for j in range(n):
                flow[0, j] = b0[j]
                obj += b0[j] * c[0, j]
        else:
            for i in range(m):
                flow[i, 0] = a0[i]
                obj += a0[i] * c[i, 0]
        return flow_arr, obj, 0

    cdef Py_ssize_t nb = m + n - 1
    cdef Py_ssize_t n_nodes = m + n

    a_arr = a0_arr + eps
    b_arr = b0_arr.copy()
    b_arr[n - 1] += m * eps
    cdef double[::1] a = a_arr
    cdef double[::1] b = b_arr

    # north-west corner start: exactly m+n-1 basic cells
    cdef Py_ssize_t[::1] cell_i = np.empty(nb, dtype=np.intp)
    cdef Py_ssize_t[::1] cell_j = np.empty(nb, dtype=np.intp)
    cdef double[::1] x = np.empty(nb, dtype=np.float64)
    ra_arr = a_arr.copy()
    rb_arr = b_arr.copy()
    cdef double[::1] ra = ra_arr
    cdef double[::1] rb = rb_arr
    cdef double q
    i = 0
    j = 0
    for k in range(nb):
        q = ra[i] if ra[i] <= rb[j] else rb[j]
        cell_i[k] = i
        cell_j[k] = j
        x[k] = q
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if i < m - 1 and (j == n - 1 or ra[i] <= rb[j]):
            i += 1
        else:
            j += 1

    # adjacency over basis edges: nodes are rows 0..m-1 and cols m..m+n-1;
    # edge k occupies slots 2k (row end) and 2k+1 (col end)
    cdef Py_ssize_t[::1] head = np.empty(n_nodes, dtype=np.intp)
    cdef Py_ssize_t[::1] nxt = np.empty(2 * nb, dtype=np.intp)
    cdef Py_ssize_t[::1] slot_edge = np.empty(2 * nb, dtype=np.intp)

    cdef double[::1] u = np.empty(m, dtype=np.float64)
    cdef double[::1] v = np.empty(n, dtype=np.float64)
    cdef unsigned char[::1] seen = np.empty(n_nodes, dtype=np.uint8)
    cdef Py_ssize_t[::1] queue = np.empty(n_nodes, dtype=np.intp)
    cdef Py_ssize_t[::1] par = np.empty(n_nodes, dtype=np.intp)
    cdef Py_ssize_t[::1] par_edge = np.empty(n_nodes, dtype=np.intp)
    cdef Py_ssize_t[::1] path_buf = np.empty(nb, dtype=np.intp)

    if max_iter <= 0:
        max_iter = 200 * m * n + 1000
    cdef Py_ssize_t pivots = 0
    cdef Py_ssize_t qhead, qtail, target, path_len, idx, leave, li, lj
    cdef double red, theta, val

    while True:
        # rebuild adjacency
        for node in range(n_nodes):
            head[node] = -1
        for k in range(nb):
            s = 2 * k
            slot_edge[s] = k
            nxt[s] = head[cell_i[k]]
            head[cell_i[k]] = s
            s += 1
            slot_edge[s] = k
            nxt[s] = head[m + cell_j[k]]
            head[m + cell_j[k]] = s

        # duals from the basis tree, anchored at row 0
        for node in range(n_nodes):
            seen[node] = 0
        u[0] = 0.0
        seen[0] = 1
        queue[0] = 0
        qhead = 0
        qtail = 1
        while qhead < qtail:
            node = queue[qhead]
            qhead += 1
            s = head[node]
            while s != -1:
                k = slot_edge[s]
                s = nxt[s]
                ii = cell_i[k]
                jj = cell_j[k]
                other = (m + jj) if node == ii else ii
                if not seen[other]:
                    if other >= m:
                        v[jj] = c[ii, jj] - u[ii]
                    else:
                        u[ii] = c[ii, jj] - v[jj]
                    seen[other] = 1
                    queue[qtail] = other
                    qtail += 1
        if qtail != n_nodes:
            raise NumericalFailure("basis lost the spanning-tree property")

        # Bland entering rule: first row-major cell with negative reduced
        # cost; basic cells have reduced cost exactly zero by construction
        e = -1
        for i in range(m):
            for j in range(n):
                red = (c[i, j] - u[i]) - v[j]
                if red < -opt_tol:
                    e = i * n + j
                    break
            if e != -1:
                break
        if e == -1:
            break
        ei = e // n
        ej = e % n

        # unique tree path from row ei to col node m+ej
        for node in range(n_nodes):
            par[node] = -2
        par[ei] = -1
        queue[0] = ei
        qhead = 0
        qtail = 1
        target = m + ej
        while qhead < qtail and par[target] == -2:
            node = queue[qhead]
            qhead += 1
            s = head[node]
            while s != -1:
                k = slot_edge[s]
                s = nxt[s]
                ii = cell_i[k]
                jj = cell_j[k]
                other = (m + jj) if node == ii else ii
                if par[other] == -2:
                    par[other] = node
                    par_edge[other] = k
                    queue[qtail] = other
                    qtail += 1
        path_len = 0
        node = target
        while node != ei:
            path_buf[path_len] = par_edge[node]
            path_len += 1
            node = par[node]

        # entering edge takes +theta; walking the path back from the
        # entering column, signs alternate starting at minus
        theta = INFINITY
        leave = -1
        li = m
        lj = n
        for idx in range(0, path_len, 2):
            k = path_buf[idx]
            val = x[k]
            if val < theta or (val == theta and (cell_i[k] < li or
                               (cell_i[k] == li and cell_j[k] < lj))):
                theta = val
                leave = k
                li = cell_i[k]
                lj = cell_j[k]
        for idx in range(path_len):
            k = path_buf[idx]
            if idx % 2 == 0:
                x[k] -= theta
            else:
                x[k] += theta
        cell_i[leave] = ei
        cell_j[leave] = ej
        x[leave] = theta
        pivots += 1
        if pivots > max_iter:
            raise NumericalFailure(f"pivot limit {max_iter} exceeded")

    # re-solve the optimal basis against the unperturbed marginals
    for node in range(n_nodes):
        head[node] = -1
    for k in range(nb):
        s = 2 * k
        slot_edge[s] = k
        nxt[s] = head[cell_i[k]]
        head[cell_i[k]] = s
        s += 1
        slot_edge[s] = k
        nxt[s] = head[m + cell_j[k]]
        head[m + cell_j[k]] = s

    cdef Py_ssize_t[::1] deg = np.zeros(n_nodes, dtype=np.intp)
    for k in range(nb):
        deg[cell_i[k]] += 1
        deg[m + cell_j[k]] += 1
    rem_arr = np.concatenate([a0_arr, b0_arr])
    cdef double[::1] rem = rem_arr
    cdef unsigned char[::1] used = np.zeros(nb, dtype=np.uint8)
    cdef double[::1] xf = np.zeros(nb, dtype=np.float64)
    cdef Py_ssize_t[::1] stack = np.empty(n_nodes + nb + 8, dtype=np.intp)
    cdef Py_ssize_t top = 0
    cdef Py_ssize_t assigned = 0
    cdef double f
    for node in range(n_nodes):
        if deg[node] == 1:
            stack[top] = node
            top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        if deg[node] != 1:
            continue
        s = head[node]
        k = -1
        while s != -1:
            kk = slot_edge[s]
            s = nxt[s]
            if not used[kk]:
                k = kk
                break
        if k == -1:
            continue
        used[k] = 1
        assigned += 1
        ii = cell_i[k]
        jj = cell_j[k]
        other = (m + jj) if node == ii else ii
        f = rem[node]
        xf[k] = f
        rem[node] = 0.0
        rem[other] -= f
        deg[node] -= 1
        deg[other] -= 1
        if deg[other] == 1:
            stack[top] = other
            top += 1
    if assigned != nb:
        raise NumericalFailure("flow recovery left unassigned basic cells")

    cdef double neg_min = 0.0
    for k in range(nb):
        val = xf[k]
        if val < neg_min:
            neg_min = val
        if val < 0.0:
            val = 0.0
        flow[cell_i[k], cell_j[k]] += val
        obj += val * c[cell_i[k], cell_j[k]]
    if neg_min < -1e-9:
        raise NumericalFailure(f"negative basic flow {neg_min:.3e}")
    return flow_arr, obj, pivots
