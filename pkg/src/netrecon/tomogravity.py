"""Tomogravity: least squares on the marginals, regularised towards gravity.

Minimises::

    L(mu) = ||A mu - y||^2 + psi^2 * sum_{i != j} (mu_ij / N) log(mu_ij / (x_i. x_.j))

over ``mu >= 0``. Dyads whose marginal product is zero are fixed at zero; the
others are kept at or above ``EPS`` so the logarithm stays finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MarginalVector, off_diagonal
from .errors import DomainError, NonConvergence, ZeroTotal
from .gravity import gravity_fit

EPS = 1e-12
ARMIJO = 1e-4


@dataclass(frozen=True)
class TomogravityConfig:
    psi: float = 0.01
    tol: float = 1e-9
    max_iter: int = 500

    def __post_init__(self):
        if self.psi < 0:
            raise DomainError("psi must be non-negative")


@dataclass(frozen=True)
class TomogravityResult:
    """Fitted values with solver diagnostics.

    ``gradient_norm`` is the sup-norm of the projected gradient
    ``mu - P(mu - grad)``; ``marginal_residual`` is ``||A mu - y||_2``.
    """

    mu: np.ndarray
    loss: float
    gradient_norm: float
    iterations: int
    converged: bool
    marginal_residual: float
    loss_history: tuple[float, ...]


class _Problem:
    def __init__(self, m: MarginalVector, psi: float):
        self.n = m.n
        self.N = m.n * (m.n - 1)
        self.out = m.out_sums
        self.inn = m.in_sums
        self.g = np.outer(m.out_sums, m.in_sums)
        self.allowed = off_diagonal(self.n) & (self.g > 0)
        self.logg = np.log(np.where(self.allowed, self.g, 1.0))
        self.w = psi * psi / self.N

    def residuals(self, mu):
        return mu.sum(axis=1) - self.out, mu.sum(axis=0) - self.inn

    def loss(self, mu) -> float:
        r, c = self.residuals(mu)
        ls = float(r @ r + c @ c)
        if self.w == 0.0:
            return ls
        pos = self.allowed & (mu > 0)
        kl = float((mu[pos] * (np.log(mu[pos]) - self.logg[pos])).sum())
        return ls + self.w * kl

    def gradient(self, mu) -> np.ndarray:
        r, c = self.residuals(mu)
        grad = 2.0 * (r[:, None] + c[None, :])
        if self.w > 0.0:
            with np.errstate(divide="ignore"):
                grad = grad + self.w * (np.log(mu) - self.logg + 1.0)
        return np.where(self.allowed, grad, 0.0)

    def project(self, mu) -> np.ndarray:
        return np.where(self.allowed, np.maximum(mu, EPS), 0.0)


def tomogravity_loss(mu, m: MarginalVector, cfg: TomogravityConfig = TomogravityConfig()) -> float:
    """Evaluate the tomogravity objective, with ``0 log 0 = 0``."""
    mu = np.array(mu, dtype=float, copy=True)
    np.fill_diagonal(mu, 0.0)
    if np.any(mu < 0):
        raise DomainError("mu must be non-negative")
    prob = _Problem(m, cfg.psi)
    bad = off_diagonal(m.n) & ~prob.allowed & (mu > 0)
    if cfg.psi > 0 and np.any(bad):
        raise DomainError("mu is positive on a dyad whose marginal product is zero")
    return prob.loss(mu)


def tomogravity_gradient(mu, m: MarginalVector, cfg: TomogravityConfig = TomogravityConfig()) -> np.ndarray:
    return _Problem(m, cfg.psi).gradient(np.asarray(mu, dtype=float))


def _newton_direction(prob: _Problem, mu, grad, free) -> np.ndarray:
    """Solve ``(D + 2 A_F^T A_F) s = grad_F`` on the free dyads.

    ``D`` is the diagonal Hessian of the penalty; the coupling through the
    routing matrix is handled by the Woodbury identity, which only needs a
    ``2n x 2n`` solve.
    """
    n = prob.n
    d = np.where(free, prob.w / np.where(free, mu, 1.0), 0.0)
    dmin = d[free].min() if free.any() else 0.0
    damp = 1e-6 if dmin == 0.0 else 1e-9 * dmin
    dinv = np.where(free, 1.0 / (d + damp), 0.0)
    gf = np.where(free, grad, 0.0)
    u = dinv * gf
    K = np.zeros((2 * n, 2 * n))
    K[:n, :n] = np.diag(dinv.sum(axis=1))
    K[n:, n:] = np.diag(dinv.sum(axis=0))
    K[:n, n:] = dinv
    K[n:, :n] = dinv.T
    K[np.diag_indices(2 * n)] += 0.5
    rhs = np.concatenate([u.sum(axis=1), u.sum(axis=0)])
    v = np.linalg.solve(K, rhs)
    return u - dinv * (v[:n, None] + v[None, n:])


def tomogravity_fit(m: MarginalVector, cfg: TomogravityConfig = TomogravityConfig(), *,
                    strict: bool = True) -> TomogravityResult:
    """Minimise the tomogravity objective from the gravity solution.

    Projected Newton iterations (Bertsekas' two-metric projection): dyads at
    the lower bound with a positive gradient take a projected gradient step,
    the rest take a Newton step; an Armijo backtracking search along the
    projection arc makes every accepted step decrease the loss. Converged
    once the projected-gradient sup-norm drops below ``tol`` times its value
    at the start and the last step moved no entry by more than ``tol``
    relative to ``max(1, max(mu))``. The second condition matters for small
    ``psi``, where the gradient is tiny along the null space of ``A``.
    """
    if m.total <= 0:
        raise ZeroTotal("tomogravity needs a positive total")
    prob = _Problem(m, cfg.psi)
    mu = prob.project(gravity_fit(m))
    loss = prob.loss(mu)
    history = [loss]
    grad = prob.gradient(mu)
    pg = float(np.abs(mu - prob.project(mu - grad)).max())
    target = cfg.tol * max(1.0, pg)
    disp = np.inf
    it = 0

    def done():
        return pg == 0.0 or (pg <= target and disp <= cfg.tol * max(1.0, float(mu.max())))

    while not done() and it < cfg.max_iter:
        it += 1
        eps_k = min(1e-6, pg)
        at_bound = prob.allowed & (mu <= EPS + eps_k) & (grad > 0)
        free = prob.allowed & ~at_bound
        step = _newton_direction(prob, mu, grad, free)
        step = np.where(at_bound, grad, step)
        accepted = False
        for direction in (step, grad):
            t = 1.0
            for _ in range(60):
                cand = prob.project(mu - t * direction)
                cand_loss = prob.loss(cand)
                decrease = float((grad * (cand - mu)).sum())
                if decrease < 0 and cand_loss <= loss + ARMIJO * decrease:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                break
        if not accepted:
            if pg <= target:
                # no descent left at rounding level: already stationary
                disp = 0.0
            break
        disp = float(np.abs(cand - mu).max())
        mu, loss = cand, cand_loss
        history.append(loss)
        grad = prob.gradient(mu)
        pg = float(np.abs(mu - prob.project(mu - grad)).max())
    r, c = prob.residuals(mu)
    res = TomogravityResult(
        mu=mu,
        loss=loss,
        gradient_norm=pg,
        iterations=it,
        converged=done(),
        marginal_residual=float(np.sqrt(r @ r + c @ c)),
        loss_history=tuple(history),
    )
    if strict and not res.converged:
        raise NonConvergence(
            f"tomogravity stopped after {it} iterations with projected-gradient norm {pg:.3g}",
            result=res, residual=pg,
        )
    return res
