"""Non-negative L1-penalised least squares against the marginals.

Objective::

    L(mu) = ||A mu - y||^2 + tau * sum_{i != j} mu_ij,   mu >= 0

Each ``mu_ij`` appears in exactly one row-sum and one column-sum residual, so
the exact coordinate minimiser is ``max(0, (r_i + c_j - tau / 2) / 2)`` with
``r_i``, ``c_j`` the row and column residuals excluding the coordinate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import DensityTarget, MarginalVector, off_diagonal
from .errors import NonConvergence

NONZERO_THRESHOLD = 1e-10
KKT_TOL = 1e-8


@numba.njit(cache=True)
def _cd(mu, out, inn, tau, tol, max_iter):
    n = out.shape[0]
    row_res = out - mu.sum(axis=1)
    col_res = inn - mu.sum(axis=0)
    half_tau = 0.5 * tau
    for sweep in range(1, max_iter + 1):
        max_change = 0.0
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                old = mu[i, j]
                r = row_res[i] + old
                c = col_res[j] + old
                new = 0.5 * (r + c - half_tau)
                if new < 0.0:
                    new = 0.0
                if new != old:
                    d = new - old
                    mu[i, j] = new
                    row_res[i] -= d
                    col_res[j] -= d
                    if abs(d) > max_change:
                        max_change = abs(d)
        if max_change < tol:
            return sweep, max_change
    return max_iter, max_change


def lasso_objective(mu, m: MarginalVector, tau: float) -> float:
    r = mu.sum(axis=1) - m.out_sums
    c = mu.sum(axis=0) - m.in_sums
    return float(r @ r + c @ c + tau * mu[off_diagonal(m.n)].sum())


def lasso_gradient(mu, m: MarginalVector, tau: float) -> np.ndarray:
    """Gradient of the smooth objective (``mu >= 0`` makes the penalty linear)."""
    r = mu.sum(axis=1) - m.out_sums
    c = mu.sum(axis=0) - m.in_sums
    g = 2.0 * (r[:, None] + c[None, :]) + tau
    np.fill_diagonal(g, 0.0)
    return g


def kkt_residual(mu, m: MarginalVector, tau: float) -> float:
    """Largest breach of ``grad >= 0`` and ``mu * grad == 0`` over the dyads."""
    g = lasso_gradient(mu, m, tau)
    off = off_diagonal(m.n)
    return float(max(-g[off].min(initial=0.0), np.abs(mu * g)[off].max(initial=0.0)))


def tau_max(m: MarginalVector) -> float:
    """Smallest ``tau`` at which the zero matrix is optimal."""
    s = m.out_sums[:, None] + m.in_sums[None, :]
    return float(2.0 * s[off_diagonal(m.n)].max())


def lasso_fit(m: MarginalVector, tau: float, tol: float = 1e-10, max_iter: int = 100_000,
              *, start=None, strict: bool = True) -> np.ndarray:
    """Cyclic coordinate descent for the non-negative LASSO.

    Sweeps run in row-major dyad order until no coordinate moves by more
    than ``tol`` times ``max(1, max marginal)``; if the KKT residual is then
    still above ``KKT_TOL`` the step tolerance is tightened and sweeping
    continues. ``start`` warm-starts the
    iteration (negative entries are clipped).
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    n = m.n
    if start is None:
        mu = np.zeros((n, n))
    else:
        mu = np.maximum(np.array(start, dtype=float, copy=True), 0.0)
        np.fill_diagonal(mu, 0.0)
    scale = max(1.0, float(max(m.out_sums.max(), m.in_sums.max())))
    step_tol = tol * scale
    while True:
        sweeps, change = _cd(mu, m.out_sums, m.in_sums, float(tau), step_tol, int(max_iter))
        if change >= step_tol or kkt_residual(mu, m, tau) <= KKT_TOL or step_tol < 1e-6 * tol * scale:
            break
        # small steps can hide a slowly drifting degenerate direction
        step_tol /= 100.0
    if strict and change >= step_tol:
        raise NonConvergence(f"coordinate descent did not settle in {sweeps} sweeps "
                             f"(last change {change:.3g})", result=mu, residual=change)
    return mu


def nonzero_count(mu, threshold: float = NONZERO_THRESHOLD) -> int:
    return int((np.asarray(mu)[off_diagonal(mu.shape[0])] > threshold).sum())


def default_grid(m: MarginalVector, points: int = 50) -> np.ndarray:
    """Log-spaced penalties from ``1e-6 tau_max`` up to ``tau_max``."""
    tmax = tau_max(m)
    return np.logspace(math.log10(1e-6 * tmax), math.log10(tmax), points)


@dataclass(frozen=True)
class LassoPath:
    taus: np.ndarray
    fits: tuple[np.ndarray, ...]

    def nonzero_counts(self) -> np.ndarray:
        return np.array([nonzero_count(f) for f in self.fits])

    def sparsity_violations(self) -> list[int]:
        """Grid indices where the non-zero count rises as ``tau`` increases.

        The count is not guaranteed to be monotone for this design, so the
        path reports rather than assumes it.
        """
        k = self.nonzero_counts()
        return [i for i in range(1, k.size) if k[i] > k[i - 1]]

    def to_csv(self, path) -> None:
        """Long format ``tau,src,dst,mu`` over all off-diagonal dyads."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "src", "dst", "mu"])
            for tau, f in zip(self.taus, self.fits):
                n = f.shape[0]
                for i in range(n):
                    for j in range(n):
                        if i != j:
                            w.writerow([repr(float(tau)), i, j, repr(float(f[i, j]))])


def lasso_path(m: MarginalVector, grid=None, tol: float = 1e-10, max_iter: int = 100_000) -> LassoPath:
    """Fits along an ascending penalty grid, each warm-started from the last."""
    taus = np.asarray(default_grid(m) if grid is None else grid, dtype=float)
    if taus.size == 0:
        raise ValueError("grid must be non-empty")
    if np.any(np.diff(taus) < 0):
        raise ValueError("grid must be sorted ascending")
    fits = []
    prev = None
    for tau in taus:
        prev = lasso_fit(m, float(tau), tol, max_iter, start=prev)
        fits.append(prev)
    return LassoPath(taus, tuple(fits))


def tau_search(m: MarginalVector, target: DensityTarget, grid=None, tol: float = 1e-10,
               max_iter: int = 100_000) -> tuple[float, np.ndarray]:
    """Penalty whose fit has the non-zero count closest to ``round(D N)``.

    Ties go to the larger penalty (the sparser fit).
    """
    path = lasso_path(m, grid, tol, max_iter)
    want = target.edge_count(m.n)
    counts = path.nonzero_counts()
    gaps = np.abs(counts - want)
    best = int(np.flatnonzero(gaps == gaps.min())[-1])
    return float(path.taus[best]), path.fits[best]
