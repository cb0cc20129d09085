"""Minimum-density reconstruction by a stochastic add/delete search.

The state is an edge set ``S`` with non-negative values on it that
reproduce the marginals (or, after an accepted fit-worsening move, their
least squares fit on ``S``); entries that come out zero are pruned. Two move kernels act on it:

* delete: drop a random edge and re-solve the marginals on the remaining
  support, which moves its mass onto other edges of the same rows and
  columns where possible (with a positive temperature an infeasible
  deletion is scored by its least squares fit);
* add: pick a random absent edge and route as much mass through it as the
  current fitted marginals allow, other absent edges being usable at a cost
  (a move between vertices of the transportation polytope). When the state does not fit the marginals the
  added edge is used to reduce the squared deviation instead.

Deletions that keep the relative marginal deviation within tolerance are
always accepted. Moves that worsen the objective (more edges, or a
deletion that breaks the fit) are accepted with probability
``exp(-delta / temperature)``; at temperature zero never.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, nnls

from .core import MarginalVector, WeightedNetwork, off_diagonal
from .errors import NoFeasibleStart
from .rng import substream

OUTSIDE = 0.5


@dataclass(frozen=True)
class MindensConfig:
    max_steps: int = 2000
    marginal_tolerance: float = 1e-6
    restarts: int = 10
    rng_seed: int = 0
    temperature: float = 0.0
    patience: int | None = None

    def __post_init__(self):
        if not self.marginal_tolerance > 0:
            raise ValueError("marginal_tolerance must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True)
class MindensMember:
    """One low-density network with its edge count and squared marginal deviation."""

    network: WeightedNetwork
    edges: int
    squared_deviation: float
    relative_deviation: float
    restart: int = 0


def mindens_lower_bound(m: MarginalVector) -> int:
    """Every positive marginal needs at least one incident edge."""
    return int(max((m.out_sums > 0).sum(), (m.in_sums > 0).sum()))


class _Search:
    def __init__(self, m: MarginalVector, cfg: MindensConfig):
        self.m = m
        self.cfg = cfg
        n = m.n
        self.n = n
        self.y = m.stacked()
        self.ynorm = float(np.linalg.norm(self.y)) or 1.0
        allowed = off_diagonal(n) & (m.out_sums[:, None] > 0) & (m.in_sums[None, :] > 0)
        self.rows, self.cols = np.nonzero(allowed)
        self.index = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(self.rows, self.cols))}
        self.prune = 1e-12 * max(1.0, float(self.y.max()))

    def columns(self, S):
        S = np.asarray(sorted(S), dtype=int)
        A = np.zeros((2 * self.n, S.size))
        A[self.rows[S], np.arange(S.size)] = 1.0
        A[self.n + self.cols[S], np.arange(S.size)] = 1.0
        return S, A

    def fitted(self, S, vals):
        out = np.zeros(2 * self.n)
        S = np.asarray(sorted(S), dtype=int)
        np.add.at(out, self.rows[S], vals)
        np.add.at(out, self.n + self.cols[S], vals)
        return out

    def state(self, S, vals):
        """Prune zeros; return (support, values, squared deviation)."""
        S = sorted(S)
        keep = [k for k, v in zip(S, vals) if v > self.prune]
        kv = np.array([v for v in vals if v > self.prune])
        r = self.fitted(keep, kv) - self.y if keep else -self.y
        return frozenset(keep), dict(zip(keep, kv)), float(r @ r)

    def fit(self, S):
        if not S:
            return frozenset(), {}, float(self.y @ self.y)
        Sa, A = self.columns(S)
        vals, _ = nnls(A, self.y, maxiter=50 * A.shape[1] + 100)
        st = self.state(Sa, vals)
        if len(st[0]) < len(S):
            # refit on the pruned support so the kept values stay optimal
            Sa, A = self.columns(st[0])
            if Sa.size:
                vals, _ = nnls(A, self.y, maxiter=50 * A.shape[1] + 100)
                st = self.state(Sa, vals)
        return st

    def pivot(self, S, vals, e):
        """Route as much mass through ``e`` as the current fitted marginals allow.

        The flow may also use absent edges touching either end of ``e``, at
        a price of ``OUTSIDE`` per unit, so that ``e`` can enter even when it
        closes no cycle with the current support. The result is a vertex of
        the feasible set on that enlarged support.
        """
        k = sorted(S)
        b = self.fitted(k, np.array([vals[q] for q in k])) if k else np.zeros(2 * self.n)
        i, j = self.rows[e], self.cols[e]
        near = np.flatnonzero(np.isin(self.rows, (i, j)) | np.isin(self.cols, (i, j)))
        Sa, A = self.columns(set(k) | set(near.tolist()))
        inside = np.isin(Sa, k)
        c = np.where(inside, 0.0, OUTSIDE)
        c[Sa == e] = -1.0
        res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds")
        if res.status != 0:
            return None
        return self.state(Sa, res.x)

    def solve(self, S, b):
        """A non-negative vertex on support ``S`` reproducing ``b`` exactly, or None."""
        Sa, A = self.columns(S)
        res = linprog(np.zeros(Sa.size), A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds")
        if res.status != 0:
            return None
        return self.state(Sa, res.x)

    def delete(self, S, e):
        """Drop ``e``; exact refit if the rest can carry the marginals, else None."""
        rest = S - {e}
        if not rest:
            return None
        k = np.fromiter(rest, dtype=int)
        if (np.setdiff1d(np.flatnonzero(self.m.out_sums > 0), self.rows[k]).size
                or np.setdiff1d(np.flatnonzero(self.m.in_sums > 0), self.cols[k]).size):
            return None
        return self.solve(rest, self.y)

    def rel(self, sq):
        return math.sqrt(sq) / self.ynorm

    def greedy_start(self):
        """Largest remaining out-marginal to largest remaining in-marginal."""
        ro = self.m.out_sums.astype(float).copy()
        ri = self.m.in_sums.astype(float).copy()
        thr = self.prune
        edges = {}
        for _ in range(4 * self.n * self.n):
            if not (ro > thr).any():
                break
            i = int(np.argmax(ro))
            masked = ri.copy()
            masked[i] = -np.inf
            j = int(np.argmax(masked))
            if not masked[j] > thr:
                if not self._reroute(edges, i, min(ro[i], ri[i])):
                    return None
                v = min(ro[i], ri[i])
                ro[i] -= v
                ri[i] -= v
                continue
            v = min(ro[i], ri[j])
            k = self.index[(i, j)]
            edges[k] = edges.get(k, 0.0) + v
            ro[i] -= v
            ri[j] -= v
        S = sorted(edges)
        return self.state(S, np.array([edges[k] for k in S]))

    def _reroute(self, edges, i, v):
        """Absorb a residual ``v`` left only on the diagonal cell ``(i, i)``.

        Mass on edges ``k -> l`` avoiding ``i`` is sent along ``k -> i -> l``
        instead, which keeps row ``k`` and column ``l`` and adds to row and
        column ``i``. Returns False when no such edge is left.
        """
        for key in sorted(edges, key=lambda q: -edges[q]):
            if v <= self.prune:
                break
            k, l = int(self.rows[key]), int(self.cols[key])
            if i in (k, l) or (k, i) not in self.index or (i, l) not in self.index:
                continue
            d = min(edges[key], v)
            edges[key] -= d
            if edges[key] <= self.prune:
                del edges[key]
            for q in (self.index[(k, i)], self.index[(i, l)]):
                edges[q] = edges.get(q, 0.0) + d
            v -= d
        return v <= self.prune

    def start(self):
        st = self.greedy_start()
        if st is None or self.rel(st[2]) > self.cfg.marginal_tolerance:
            st = self.fit(range(self.rows.size))
        if self.rel(st[2]) > self.cfg.marginal_tolerance:
            raise NoFeasibleStart(
                "no non-negative network without self-loops reproduces these marginals "
                f"(best relative deviation {self.rel(st[2]):.3g})"
            )
        return st

    def run(self, rng: np.random.Generator):
        cfg = self.cfg
        tol = cfg.marginal_tolerance
        T = cfg.temperature
        patience = cfg.patience if cfg.patience is not None else self.n * self.n
        S, vals, sq = self.start()
        best = (len(S), sq, S, vals)
        idle = 0
        all_edges = self.rows.size
        for _ in range(cfg.max_steps):
            if idle >= patience:
                break
            feasible = self.rel(sq) <= tol
            delete = bool(S) and (rng.random() < 0.5 or len(S) == all_edges)
            lowered = False
            if delete:
                e = int(rng.choice(sorted(S)))
                cand = self.delete(S, e)
                if cand is not None and self.rel(cand[2]) <= tol:
                    S2, v2, sq2 = cand
                    accept = True
                elif T > 0:
                    # the closest fit on the smaller support decides the acceptance
                    S2, v2, sq2 = self.fit(S - {e})
                    d = (sq2 - sq) / self.ynorm ** 2
                    accept = d <= 0 or rng.random() < math.exp(-d / T)
                else:
                    accept = False
            else:
                absent = sorted(set(range(all_edges)) - S)
                if not absent:
                    idle += 1
                    continue
                e = int(rng.choice(absent))
                cand = self.pivot(S, vals, e) if feasible else self.fit(S | {e})
                if cand is None:
                    idle += 1
                    continue
                S2, v2, sq2 = cand
                grow = len(S2) - len(S)
                if not feasible or grow <= 0:
                    accept = True
                elif T > 0:
                    accept = rng.random() < math.exp(-grow / T)
                else:
                    accept = False
            if accept:
                lowered = len(S2) < len(S) and self.rel(sq2) <= tol
                S, vals, sq = S2, v2, sq2
                if self.rel(sq) <= tol and (len(S), sq) < best[:2]:
                    best = (len(S), sq, S, vals)
            idle = 0 if lowered else idle + 1
        return best

    def network(self, S, vals):
        x = np.zeros((self.n, self.n))
        for k in S:
            x[self.rows[k], self.cols[k]] = vals[k]
        return WeightedNetwork(x)


def mindens_run(m: MarginalVector, cfg: MindensConfig = MindensConfig()) -> list[MindensMember]:
    """One low-density network per restart; restart ``r`` uses substream ``(seed, r)``.

    Raises :class:`NoFeasibleStart` when the marginals admit no network
    (for instance a node whose whole outflow could only go to itself).
    """
    search = _Search(m, cfg)
    members = []
    if m.total == 0:
        empty = WeightedNetwork(np.zeros((m.n, m.n)))
        return [MindensMember(empty, 0, 0.0, 0.0, r) for r in range(cfg.restarts)]
    for r in range(cfg.restarts):
        edges, sq, S, vals = search.run(substream(cfg.rng_seed, r))
        members.append(MindensMember(search.network(S, vals), edges, sq, search.rel(sq), r))
    return members


def mindens_best(ensemble) -> MindensMember:
    """Fewest edges; ties by smaller squared deviation, then first found."""
    ensemble = list(ensemble)
    if not ensemble:
        raise ValueError("empty ensemble")
    best = ensemble[0]
    for mem in ensemble[1:]:
        if (mem.edges, mem.squared_deviation) < (best.edges, best.squared_deviation):
            best = mem
    return best
