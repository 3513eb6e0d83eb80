"""Independent oracles for the transport solver tests.

``oracle_enumerate`` brute-forces the optimum by enumerating every
spanning-tree basis of the bipartite supply/demand graph (every vertex of
the transportation polytope) and keeping the best feasible one. It shares no
code with the solver under test. ``oracle_linprog`` delegates to scipy's
HiGHS, an unrelated LP implementation, for sizes where enumeration is too
slow. ``random_feasible_flow`` samples exact-feasible vertices by running a
greedy fill under random row/column orders.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

ENUM_CELL_LIMIT = 12  # enumerate when m*n <= this; C(12,6)=924 subsets


def oracle_enumerate(supply, demand, cost) -> float:
    m, n = cost.shape
    nodes = m + n
    edges = [(i, j) for i in range(m) for j in range(n)]
    best = np.inf
    for combo in itertools.combinations(range(len(edges)), nodes - 1):
        parent = list(range(nodes))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        acyclic = True
        for e in combo:
            i, j = edges[e]
            ri, rj = find(i), find(m + j)
            if ri == rj:
                acyclic = False
                break
            parent[ri] = rj
        if not acyclic:
            continue
        objective = _tree_objective(combo, edges, supply, demand, cost, m, nodes)
        if objective is not None and objective < best:
            best = objective
    return float(best)


def _tree_objective(combo, edges, supply, demand, cost, m, nodes):
    """Solve the flows a spanning tree implies; None when infeasible."""
    deg = [0] * nodes
    incident = [[] for _ in range(nodes)]
    for e in combo:
        i, j = edges[e]
        deg[i] += 1
        deg[m + j] += 1
        incident[i].append(e)
        incident[m + j].append(e)
    remaining = list(supply) + list(demand)
    used = set()
    stack = [x for x in range(nodes) if deg[x] == 1]
    objective = 0.0
    while stack:
        node = stack.pop()
        if deg[node] != 1:
            continue
        edge = next((e for e in incident[node] if e not in used), None)
        if edge is None:
            continue
        used.add(edge)
        i, j = edges[edge]
        other = (m + j) if node == i else i
        flow = remaining[node]
        if flow < -1e-12:
            return None
        objective += max(flow, 0.0) * cost[i, j]
        remaining[node] = 0.0
        remaining[other] -= flow
        deg[node] -= 1
        deg[other] -= 1
        if deg[other] == 1:
            stack.append(other)
    if len(used) != nodes - 1:
        return None
    return objective


def oracle_linprog(supply, demand, cost) -> float:
    m, n = cost.shape
    a_eq = np.zeros((m + n, m * n))
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
    for j in range(n):
        a_eq[m + j, j::n] = 1.0
    # drop one redundant equality for a full-rank system
    result = linprog(
        cost.ravel(),
        A_eq=a_eq[:-1],
        b_eq=np.concatenate([supply, demand])[:-1],
        bounds=(0, None),
        method="highs",
    )
    assert result.status == 0, f"oracle LP failed: {result.message}"
    return float(result.fun)


def oracle_min_cost(supply, demand, cost) -> float:
    if cost.size <= ENUM_CELL_LIMIT:
        return oracle_enumerate(supply, demand, cost)
    return oracle_linprog(supply, demand, cost)


def random_instance(rng, max_side: int = 5, integer_weights: bool = False):
    m = int(rng.integers(1, max_side + 1))
    n = int(rng.integers(1, max_side + 1))
    if integer_weights:
        supply = rng.integers(1, 5, size=m).astype(float)
        demand = rng.integers(1, 5, size=n).astype(float)
        demand *= supply.sum() / demand.sum()
    else:
        supply = rng.uniform(0.05, 1.0, size=m)
        supply /= supply.sum()
        demand = rng.uniform(0.05, 1.0, size=n)
        demand /= demand.sum()
    cost = rng.uniform(0.0, 10.0, size=(m, n))
    return supply, demand, cost


def random_feasible_flow(supply, demand, rng) -> np.ndarray:
    """Exact-feasible vertex: greedy fill under random row/column orders."""
    m, n = len(supply), len(demand)
    rows = rng.permutation(m)
    cols = rng.permutation(n)
    ra = np.array(supply, dtype=float)
    rb = np.array(demand, dtype=float)
    flow = np.zeros((m, n))
    i = j = 0
    while i < m and j < n:
        r, c = rows[i], cols[j]
        q = min(ra[r], rb[c])
        flow[r, c] += q
        ra[r] -= q
        rb[c] -= q
        if i == m - 1 and j == n - 1:
            break
        if i < m - 1 and (j == n - 1 or ra[r] <= rb[c]):
            i += 1
        else:
            j += 1
    return flow
