"""Pure-Python transportation-simplex kernel.

Solves the balanced transportation problem exactly: north-west-corner start,
Bland (lowest-index) entering rule so degenerate pivots cannot cycle, and a
tiny virtual-mass perturbation of the marginals that keeps the start basis
nondegenerate. The final basis is re-solved against the unperturbed
marginals, so reported flows satisfy the original constraints.

This file and ``_simplex_cy.pyx`` implement the same algorithm step for
step, in the same arithmetic order, so their results match bit for bit;
change them together.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalFailure

EPSILON_MASS = 1e-12
OPT_TOL = 1e-11


def solve_dense(
    supply: np.ndarray,
    demand: np.ndarray,
    cost: np.ndarray,
    eps: float = EPSILON_MASS,
    opt_tol: float = OPT_TOL,
    max_iter: int = 0,
) -> tuple[np.ndarray, float, int]:
    """Return (flow, objective, pivot count) for a balanced problem."""
    a0 = np.ascontiguousarray(supply, dtype=np.float64)
    b0 = np.ascontiguousarray(demand, dtype=np.float64)
    c = np.ascontiguousarray(cost, dtype=np.float64)
    m, n = c.shape

    # single-row/column problems have a forced flow
    if m == 1 or n == 1:
        flow = np.zeros((m, n))
        obj = 0.0
        if m == 1:
            for j in range(n):
                flow[0, j] = b0[j]
                obj += b0[j] * c[0, j]
        else:
            for i in range(m):
                flow[i, 0] = a0[i]
                obj += a0[i] * c[i, 0]
        return flow, obj, 0

    a = a0 + eps
    b = b0.copy()
    b[n - 1] += m * eps

    # north-west corner start: exactly m+n-1 basic cells
    nb = m + n - 1
    cell_i = np.empty(nb, dtype=np.intp)
    cell_j = np.empty(nb, dtype=np.intp)
    x = np.empty(nb, dtype=np.float64)
    ra = a.copy()
    rb = b.copy()
    i = j = 0
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
    n_nodes = m + n
    head = np.empty(n_nodes, dtype=np.intp)
    nxt = np.empty(2 * nb, dtype=np.intp)
    slot_edge = np.empty(2 * nb, dtype=np.intp)

    def rebuild_adj() -> None:
        head.fill(-1)
        for k in range(nb):
            s = 2 * k
            slot_edge[s] = k
            nxt[s] = head[cell_i[k]]
            head[cell_i[k]] = s
            s += 1
            slot_edge[s] = k
            nxt[s] = head[m + cell_j[k]]
            head[m + cell_j[k]] = s

    u = np.empty(m, dtype=np.float64)
    v = np.empty(n, dtype=np.float64)
    seen = np.empty(n_nodes, dtype=bool)
    queue = np.empty(n_nodes, dtype=np.intp)
    par = np.empty(n_nodes, dtype=np.intp)
    par_edge = np.empty(n_nodes, dtype=np.intp)

    if max_iter <= 0:
        max_iter = 200 * m * n + 1000
    pivots = 0
    while True:
        rebuild_adj()
        # duals from the basis tree, anchored at row 0
        seen.fill(False)
        u[0] = 0.0
        seen[0] = True
        queue[0] = 0
        qhead, qtail = 0, 1
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
                    seen[other] = True
                    queue[qtail] = other
                    qtail += 1
        if qtail != n_nodes:
            raise NumericalFailure("basis lost the spanning-tree property")

        # Bland entering rule: first row-major cell with negative reduced
        # cost; basic cells have reduced cost exactly zero by construction
        red = (c - u[:, None]) - v[None, :]
        negative = np.flatnonzero(red.ravel() < -opt_tol)
        if negative.size == 0:
            break
        e = int(negative[0])
        ei, ej = e // n, e % n

        # unique tree path from row ei to col node m+ej
        par.fill(-2)
        par[ei] = -1
        queue[0] = ei
        qhead, qtail = 0, 1
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
        path: list[int] = []
        node = target
        while node != ei:
            path.append(int(par_edge[node]))
            node = int(par[node])

        # entering edge takes +theta; walking the path back from the
        # entering column, signs alternate starting at minus
        theta = np.inf
        leave = -1
        li, lj = m, n
        for idx in range(0, len(path), 2):
            k = path[idx]
            val = x[k]
            if val < theta or (val == theta and (cell_i[k], cell_j[k]) < (li, lj)):
                theta = val
                leave = k
                li, lj = cell_i[k], cell_j[k]
        for idx, k in enumerate(path):
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
    rebuild_adj()
    deg = np.zeros(n_nodes, dtype=np.intp)
    for k in range(nb):
        deg[cell_i[k]] += 1
        deg[m + cell_j[k]] += 1
    rem = np.concatenate([a0, b0])
    used = np.zeros(nb, dtype=bool)
    xf = np.zeros(nb, dtype=np.float64)
    stack = [node for node in range(n_nodes) if deg[node] == 1]
    assigned = 0
    while stack:
        node = stack.pop()
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
        used[k] = True
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
            stack.append(other)
    if assigned != nb:
        raise NumericalFailure("flow recovery left unassigned basic cells")

    flow = np.zeros((m, n), dtype=np.float64)
    obj = 0.0
    neg_min = 0.0
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
    return flow, obj, pivots
