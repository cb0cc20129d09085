"""Maximum-entropy reconstruction by iterative proportional fitting.

The Poisson log-linear model ``E[X_ij] = exp(delta_i + gamma_j)`` is fitted to
observed marginals by alternating row and column scaling. The covariate
extension ``exp(delta_i + gamma_j + c_ij beta)`` reuses the same scaling with a
multiplicative offset ``exp(c_ij beta)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    BinaryStructure,
    CovariateMatrix,
    MarginalVector,
    WeightedNetwork,
    compute_marginals,
    off_diagonal,
)
from .errors import (
    Cancelled,
    DegenerateCovariateWarning,
    DimensionMismatch,
    InvalidMarginals,
    NonConvergence,
)
from .flows import admissible_support

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class IpfpResult:
    """Fitted expectations ``mu`` with their log-linear effects.

    ``mu_ij = exp(row_effects[i] + col_effects[j] + c_ij * beta)``; rows and
    columns with zero marginal carry an effect of ``-inf``. ``history`` holds
    the maximal relative marginal deviation after every sweep.
    """

    mu: np.ndarray
    row_effects: np.ndarray
    col_effects: np.ndarray
    beta: float | None
    iterations: int
    converged: bool
    deviation: float
    history: tuple[float, ...] = ()
    beta_identified: bool = True


@dataclass
class _Balanced:
    mu: np.ndarray
    a: np.ndarray
    b: np.ndarray
    iterations: int
    converged: bool
    deviation: float
    history: list


def marginal_deviation(mu, out, inn, floor: float = 1.0) -> float:
    """Largest ``|fitted - target| / max(floor, target)`` over rows and columns."""
    out = np.asarray(out, dtype=float)
    inn = np.asarray(inn, dtype=float)
    r = np.abs(mu.sum(axis=1) - out) / np.maximum(floor, out)
    c = np.abs(mu.sum(axis=0) - inn) / np.maximum(floor, inn)
    return float(max(r.max(), c.max()))


def balance(initial, out, inn, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
            floor=1.0, cancel=None) -> _Balanced:
    """Scale the rows and columns of a non-negative matrix to the given sums.

    Entries on the diagonal, in rows with ``out == 0``, in columns with
    ``inn == 0`` and on links no matrix with these sums can use are forced
    to zero. Returns ``mu = diag(a) W diag(b)`` and the scaling vectors;
    ``converged`` tells whether the maximal relative deviation fell below
    ``tol``.
    """
    W = np.array(initial, dtype=float, copy=True)
    out = np.asarray(out, dtype=float)
    inn = np.asarray(inn, dtype=float)
    n = W.shape[0]
    np.fill_diagonal(W, 0.0)
    rows_on = out > 0
    cols_on = inn > 0
    W[~rows_on, :] = 0.0
    W[:, ~cols_on] = 0.0

    a = rows_on.astype(float)
    b = cols_on.astype(float)
    if not rows_on.any() and not cols_on.any():
        return _Balanced(W, a, b, 0, True, 0.0, [])
    # Links that are zero in every matrix with these sums would only be
    # driven to zero slowly; the fit on the rest has the same limit.
    keep = admissible_support(W > 0, out, inn)
    if keep is not None:
        W[~keep] = 0.0
    if np.any(W[rows_on].sum(axis=1) <= 0) or np.any(W[:, cols_on].sum(axis=0) <= 0):
        # a positive marginal with no admissible dyad can never be matched
        return _Balanced(W * 0.0, a * 0.0, b * 0.0, 0, False, math.inf, [])

    history = []
    dev = math.inf
    it = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for it in range(1, max_iter + 1):
            if cancel is not None and cancel.is_set():
                raise Cancelled("balancing cancelled")
            a = np.where(rows_on, out / (W @ b), 0.0)
            b = np.where(cols_on, inn / (a @ W), 0.0)
            row_fit = a * (W @ b)
            dev = float(np.max(np.abs(row_fit - out) / np.maximum(floor, out)))
            history.append(dev)
            if dev < tol:
                break
            # keep a and b on a comparable scale; mu is unaffected
            s = math.sqrt(a[rows_on].max() / b[cols_on].max())
            if not (0.5 < s < 2.0):
                a /= s
                b *= s
    mu = a[:, None] * W * b[None, :]
    dev = marginal_deviation(mu, out, inn, floor) if n else 0.0
    return _Balanced(mu, a, b, it, dev < tol, dev, history)


def _log_effects(v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(v)


def _check_marginals(m: MarginalVector) -> None:
    so, si = math.fsum(m.out_sums), math.fsum(m.in_sums)
    if abs(so - si) > 1e-9 * max(so, si, 1e-300):
        raise InvalidMarginals("sum of out-marginals differs from sum of in-marginals")


def _finish(bal: _Balanced, beta, strict, what, shift=None, identified=True) -> IpfpResult:
    row = _log_effects(bal.a)
    if shift is not None:
        row = row - shift
    res = IpfpResult(
        mu=bal.mu,
        row_effects=row,
        col_effects=_log_effects(bal.b),
        beta=beta,
        iterations=bal.iterations,
        converged=bal.converged,
        deviation=bal.deviation,
        history=tuple(bal.history),
        beta_identified=identified,
    )
    if strict and not res.converged:
        raise NonConvergence(
            f"{what} did not reach the marginals (max relative deviation "
            f"{res.deviation:.3g} after {res.iterations} sweeps); the support may be "
            "infeasible or the marginals inconsistent",
            result=res,
            residual=res.deviation,
        )
    return res


def ipfp_fit(m: MarginalVector, support: BinaryStructure | None = None,
             tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, *,
             strict: bool = True, cancel=None) -> IpfpResult:
    """Maximum-entropy fit of the marginals by iterative proportional fitting.

    Parameters
    ----------
    m : MarginalVector
        Observed row and column sums.
    support : BinaryStructure, optional
        Restrict the fit to dyads with ``adjacency == 1``.
    tol : float
        Stop once every marginal is matched to ``tol`` relative to
        ``max(1, marginal)``.
    max_iter : int
        Cap on full row+column sweeps.
    strict : bool
        Raise :class:`NonConvergence` when the cap is hit. With
        ``strict=False`` the unconverged result is returned instead.
    cancel : threading.Event, optional
        Checked once per sweep; raises :class:`Cancelled` when set.
    """
    _check_marginals(m)
    n = m.n
    W = off_diagonal(n).astype(float)
    if support is not None:
        if support.n != n:
            raise DimensionMismatch("support and marginals differ in node count")
        W = W * support.adjacency
    bal = balance(W, m.out_sums, m.in_sums, tol, max_iter, cancel=cancel)
    return _finish(bal, None, strict, "IPFP")


def poisson_edge_probabilities(r: IpfpResult | np.ndarray) -> np.ndarray:
    """``P(X_ij > 0) = 1 - exp(-mu_ij)`` under the Poisson model."""
    mu = r.mu if isinstance(r, IpfpResult) else np.asarray(r, dtype=float)
    p = -np.expm1(-mu)
    np.fill_diagonal(p, 0.0)
    return p


# |beta| * (max c - min c) beyond which the coefficient is taken to diverge
BETA_SPREAD_LIMIT = 30.0


def _active_mask(m: MarginalVector) -> np.ndarray:
    return off_diagonal(m.n) & (m.out_sums[:, None] > 0) & (m.in_sums[None, :] > 0)


def _is_degenerate(c: np.ndarray, active: np.ndarray) -> bool:
    vals = c[active]
    if vals.size == 0:
        return True
    return float(np.ptp(vals)) <= 1e-12 * max(1.0, float(np.max(np.abs(vals))))


def _offset_balance(m, c, beta, active, tol, max_iter, cancel):
    cb = np.where(active, c * beta, -np.inf)
    shift = float(cb[active].max()) if active.any() else 0.0
    W = np.exp(cb - shift)
    bal = balance(W, m.out_sums, m.in_sums, tol, max_iter, cancel=cancel)
    return bal, shift


def _profile_information(mu, c, active) -> float:
    """Fisher information for beta after profiling out the row/column effects."""
    rows = np.nonzero(active.any(axis=1))[0]
    cols = np.nonzero(active.any(axis=0))[0]
    M = mu[np.ix_(rows, cols)]
    C = c[np.ix_(rows, cols)]
    MC = M * C
    k, l = rows.size, cols.size
    I = np.zeros((k + l, k + l))
    I[:k, :k] = np.diag(M.sum(axis=1))
    I[k:, k:] = np.diag(M.sum(axis=0))
    I[:k, k:] = M
    I[k:, :k] = M.T
    v = np.concatenate([MC.sum(axis=1), MC.sum(axis=0)])
    w = np.linalg.lstsq(I, v, rcond=None)[0]
    return float((MC * C).sum() - v @ w)


def estimate_covariate_coefficient(x: WeightedNetwork, c: CovariateMatrix,
                                   tol: float = DEFAULT_TOL,
                                   max_iter: int = DEFAULT_MAX_ITER,
                                   max_newton: int = 100, cancel=None) -> IpfpResult:
    """Constrained Poisson maximum likelihood fit on a fully observed network.

    Block coordinate ascent: for fixed ``beta`` the row and column effects
    are obtained by proportional fitting with offset ``exp(c_ij beta)``,
    which is their exact likelihood maximiser and reproduces the marginals
    of ``x``; ``beta`` is then moved by a safeguarded Newton step on the
    profile log-likelihood (step halving until the likelihood increases).

    When the likelihood keeps growing as ``|beta|`` increases (for example
    when every zero of ``x`` sits on the dyads with the smallest covariate)
    no finite maximiser exists; this is reported as :class:`NonConvergence`
    once ``|beta|`` times the covariate range exceeds ``BETA_SPREAD_LIMIT``.
    """
    m = compute_marginals(x)
    if c.n != m.n:
        raise DimensionMismatch("covariate and network differ in node count")
    cm = c.c
    active = _active_mask(m)
    xv = x.values
    S = float((xv * np.where(active, cm, 0.0)).sum())
    pos = active & (xv > 0)

    def fit(beta):
        bal, shift = _offset_balance(m, cm, beta, active, tol, max_iter, cancel)
        with np.errstate(divide="ignore"):
            ll = float((xv[pos] * np.log(bal.mu[pos])).sum() - bal.mu[active].sum())
        return bal, shift, ll

    spread = float(np.ptp(cm[active])) if active.any() else 0.0
    beta = 0.0
    bal, shift, ll = fit(beta)
    scale = max(1.0, abs(S))
    for _ in range(max_newton):
        if not bal.converged:
            break
        score = S - float((bal.mu * np.where(active, cm, 0.0)).sum())
        if abs(score) <= tol * scale:
            return _finish(bal, beta, True, "covariate IPFP", shift)
        info = _profile_information(bal.mu, cm, active)
        if not info > 0:
            info = float((bal.mu * np.where(active, cm, 0.0) ** 2).sum())
        step = score / info
        for _ in range(60):
            cand = fit(beta + step)
            if not cand[0].converged or cand[2] >= ll - 1e-12 * abs(ll):
                break
            step /= 2.0
        else:
            break
        if not cand[0].converged:
            # balancing only stalls this far out when beta runs off to infinity
            break
        beta += step
        bal, shift, ll = cand
        if abs(beta) * spread > BETA_SPREAD_LIMIT:
            res = _finish(bal, beta, False, "covariate IPFP", shift)
            raise NonConvergence(
                f"covariate coefficient diverges (beta={beta:.6g}); "
                "the likelihood has no finite maximiser on this network",
                result=res, residual=res.deviation,
            )
    res = _finish(bal, beta, False, "covariate IPFP", shift)
    raise NonConvergence(
        f"covariate coefficient did not converge (beta={beta:.6g})",
        result=res, residual=res.deviation,
    )


def ipfp_covariate_fit(m: MarginalVector, c: CovariateMatrix,
                       tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, *,
                       beta: float | None = None,
                       reference: tuple[WeightedNetwork, CovariateMatrix] | None = None,
                       strict: bool = True, cancel=None) -> IpfpResult:
    """Covariate-extended IPFP, ``mu_ij = exp(delta_i + gamma_j + c_ij beta)``.

    The marginals alone carry no information about ``beta`` (any value can
    be reconciled with them by the row and column effects). It is therefore
    either given directly or estimated by constrained maximum likelihood on
    a fully observed ``reference`` pair ``(network, covariate)``, typically
    the previous period. The fitted ``beta`` is then combined with ``c`` and
    the current marginals.

    A covariate that is constant over the fitted dyads is absorbed by the
    effects: a :class:`DegenerateCovariateWarning` is issued and the plain
    IPFP solution is returned with ``beta = 0`` and
    ``beta_identified = False``.
    """
    _check_marginals(m)
    if c.n != m.n:
        raise DimensionMismatch("covariate and marginals differ in node count")
    active = _active_mask(m)
    if _is_degenerate(c.c, active):
        warnings.warn("covariate is constant over the fitted dyads; beta is not identified",
                      DegenerateCovariateWarning, stacklevel=2)
        plain = ipfp_fit(m, tol=tol, max_iter=max_iter, strict=strict, cancel=cancel)
        return IpfpResult(plain.mu, plain.row_effects, plain.col_effects, 0.0,
                          plain.iterations, plain.converged, plain.deviation,
                          plain.history, beta_identified=False)
    if beta is None:
        if reference is None:
            raise ValueError("beta is not identified from marginals alone; "
                             "pass beta or a reference (network, covariate) pair")
        ref_net, ref_cov = reference
        beta = estimate_covariate_coefficient(ref_net, ref_cov, tol, max_iter,
                                              cancel=cancel).beta
    bal, shift = _offset_balance(m, c.c, float(beta), active, tol, max_iter, cancel)
    return _finish(bal, float(beta), strict, "covariate IPFP", shift)
