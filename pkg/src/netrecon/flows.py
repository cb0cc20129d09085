"""Transportation feasibility of marginals on a given support.

Rows ship their out-marginal to the columns they are linked to, with no
capacity limit on a link; a matrix with the required sums and zeros off the
support exists exactly when the maximum flow meets every column demand.
"""

from __future__ import annotations

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

# flows below this share of the largest marginal count as zero
FLOW_TOL = 1e-12


@numba.njit(cache=True)
def max_flow(adj, out, inn, tol):
    """Augmenting-path maximum flow from row supplies to column demands.

    Returns the flow matrix and the total demand left unmet.
    """
    n = out.shape[0]
    flow = np.zeros((n, n))
    supply = out.copy()
    demand = inn.copy()
    for i in range(n):
        for j in range(n):
            if adj[i, j] and supply[i] > tol and demand[j] > tol:
                d = min(supply[i], demand[j])
                flow[i, j] += d
                supply[i] -= d
                demand[j] -= d
    prev = np.empty(2 * n, np.int64)
    queue = np.empty(2 * n, np.int64)
    while True:
        # breadth-first search: rows are nodes 0..n-1, columns n..2n-1
        prev[:] = -2
        head = 0
        tail = 0
        for i in range(n):
            if supply[i] > tol:
                prev[i] = -1
                queue[tail] = i
                tail += 1
        end = -1
        while head < tail and end < 0:
            v = queue[head]
            head += 1
            if v < n:
                for j in range(n):
                    if adj[v, j] and prev[n + j] == -2:
                        prev[n + j] = v
                        queue[tail] = n + j
                        tail += 1
                        if demand[j] > tol:
                            end = j
                            break
            else:
                for i in range(n):
                    if flow[i, v - n] > tol and prev[i] == -2:
                        prev[i] = v
                        queue[tail] = i
                        tail += 1
        if end < 0:
            break
        d = demand[end]
        v = n + end
        while True:
            u = prev[v]
            if u == -1:
                d = min(d, supply[v])
                break
            if v < n:
                d = min(d, flow[v, u - n])
            v = u
        v = n + end
        while True:
            u = prev[v]
            if u == -1:
                supply[v] -= d
                break
            if v >= n:
                flow[u, v - n] += d
            else:
                flow[v, u - n] -= d
            v = u
        demand[end] -= d
    return flow, demand.sum()


def _scaled(out, inn):
    out = np.asarray(out, dtype=float)
    inn = np.asarray(inn, dtype=float)
    scale = max(float(out.max(initial=0.0)), float(inn.max(initial=0.0)))
    if scale <= 0:
        return out, inn
    return out / scale, inn / scale


def admissible_support(adj, out, inn, tol: float = FLOW_TOL):
    """Links of ``adj`` that carry mass in some matrix with the given sums.

    Takes one feasible flow; a link can be positive in another solution
    exactly when it is used by this flow or closes a cycle in the residual
    graph (forward along every link, backward along used links), which is
    a strong-component test. Returns ``None`` when no solution exists.
    """
    a = np.asarray(adj) > 0
    out, inn = _scaled(out, inn)
    n = out.size
    flow, unmet = max_flow(a, out, inn, tol)
    if unmet > max(1e3 * tol, 1e-9 * inn.sum()):
        return None
    used = flow > tol
    rows, cols = np.nonzero(a)
    back_r, back_c = np.nonzero(used)
    src = np.concatenate([rows, n + back_c])
    dst = np.concatenate([n + cols, back_r])
    g = csr_matrix((np.ones(src.size), (src, dst)), shape=(2 * n, 2 * n))
    _, label = connected_components(g, directed=True, connection="strong")
    same = label[:n, None] == label[None, n:]
    return a & (used | same)


def admits_positive_solution(adj, out, inn, margin: float = 1e-6) -> bool:
    """Whether a matrix positive on every link of ``adj`` has these sums.

    Requiring each link to carry at least ``eps`` is the same as plain
    feasibility for the marginals reduced by ``eps`` times the node degrees;
    ``eps`` is ``margin`` times the smallest positive marginal over ``n``.
    """
    a = np.asarray(adj) > 0
    out = np.asarray(out, dtype=float)
    inn = np.asarray(inn, dtype=float)
    if not a.any():
        return not (out.any() or inn.any())
    out, inn = _scaled(out, inn)
    pos = np.concatenate([out[out > 0], inn[inn > 0]])
    eps = max(margin * float(pos.min()) / out.size, 1e-12)
    out_r = out - eps * a.sum(axis=1)
    inn_r = inn - eps * a.sum(axis=0)
    if out_r.min() < 0 or inn_r.min() < 0:
        return False
    return max_flow(a, out_r, inn_r, 1e-15)[1] <= 1e-3 * eps
