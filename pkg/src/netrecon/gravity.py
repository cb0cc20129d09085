"""Gravity model and its density-corrected variants.

The density-corrected model draws binary structures from
``p_ij = a f_ij / (1 + a f_ij)`` with ``a`` calibrated so the mean probability
equals a target density, then puts ``(1/a + x_i. x_.j) / x_..`` on every drawn
edge. ``f_ij`` is a positive fitness: the marginal product, a dyadic GDP
covariate, or a lagged-value transform.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    BinaryStructure,
    CovariateMatrix,
    DensityTarget,
    MarginalVector,
    WeightedNetwork,
    covariate_gdp_pair,
    covariate_lag_log,
    off_diagonal,
)
from .errors import DimensionMismatch, DomainError, TargetUnreachable, ZeroTotal
from .rng import substream

LOG_ALPHA_BOUNDS = (-700.0, 700.0)
DENSITY_GAP_TOL = 1e-10


def gravity_fit(m: MarginalVector) -> np.ndarray:
    """``mu_ij = x_i. x_.j / x_..`` off the diagonal."""
    total = m.total
    if total <= 0:
        raise ZeroTotal("gravity model needs a positive total")
    mu = np.outer(m.out_sums, m.in_sums) / total
    np.fill_diagonal(mu, 0.0)
    return mu


@dataclass(frozen=True)
class FitnessSpec:
    """Dyadic fitness products ``chi_i psi_j``.

    Entries must be non-negative and at least one positive. Dyads with zero
    fitness get probability zero whatever ``alpha`` is, which caps the
    attainable density at the share of positive dyads.
    """

    kind: str
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionMismatch("fitness must be a square matrix")
        np.fill_diagonal(v, 0.0)
        off = v[off_diagonal(v.shape[0])]
        if not np.all(np.isfinite(off)) or np.any(off < 0):
            raise DomainError("fitness values must be finite and non-negative")
        if not np.any(off > 0):
            raise DomainError("at least one fitness value must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def marginal_product(cls, m: MarginalVector) -> "FitnessSpec":
        return cls("marginal_product", np.outer(m.out_sums, m.in_sums))

    @classmethod
    def covariate(cls, c: CovariateMatrix) -> "FitnessSpec":
        off = c.c[off_diagonal(c.n)]
        if np.any(off <= 0):
            raise DomainError(
                "covariate fitness must be strictly positive; for log(gdp_i + gdp_j) "
                "rescale GDP so that every pairwise sum exceeds 1"
            )
        return cls("covariate", c.c)

    @classmethod
    def from_gdp(cls, gdp) -> "FitnessSpec":
        return cls.covariate(covariate_gdp_pair(gdp))

    @classmethod
    def from_lag(cls, prev: WeightedNetwork, offset: float = 1.1) -> "FitnessSpec":
        return cls.covariate(covariate_lag_log(prev, offset))


@dataclass(frozen=True)
class CalibratedAlpha:
    alpha: float
    achieved_density: float
    target_density: float

    @property
    def log_alpha(self) -> float:
        return math.log(self.alpha) if self.alpha > 0 else -math.inf


def _logistic(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _calibrate_logit(offsets: np.ndarray, target: float, what: str) -> tuple[float, float]:
    """Bisection for ``s`` with ``mean(logistic(s + offsets)) == target``.

    ``offsets`` may contain ``-inf`` (probability zero for every ``s``).
    Returns ``(s, achieved)``.
    """
    finite = np.isfinite(offsets)
    cap = finite.mean()
    if not (0.0 < target < cap):
        raise TargetUnreachable(
            f"{what}: density {target!r} is not attainable with a finite parameter "
            f"(attainable range is the open interval (0, {cap:.6g}))"
        )

    def mean_p(s):
        return float(_logistic(s + offsets[finite]).sum()) / offsets.size

    lo, hi = LOG_ALPHA_BOUNDS
    if not (mean_p(lo) < target < mean_p(hi)):
        raise TargetUnreachable(f"{what}: root lies outside log-parameter range [{lo}, {hi}]")
    s, achieved = 0.0, math.nan
    for _ in range(200):
        s = 0.5 * (lo + hi)
        achieved = mean_p(s)
        gap = achieved - target
        if gap == 0.0 or hi - lo <= 4e-16 * max(1.0, abs(s)):
            break
        if gap < 0:
            lo = s
        else:
            hi = s
    if abs(achieved - target) > DENSITY_GAP_TOL:
        raise TargetUnreachable(f"{what}: bisection stalled at density gap {achieved - target:.3g}")
    return s, achieved


def calibrate_alpha(f: FitnessSpec, target: DensityTarget) -> CalibratedAlpha:
    """Solve ``mean_{i != j} a f_ij / (1 + a f_ij) = D`` for ``a``.

    The mean probability is strictly increasing in ``log a``, so bisection on
    ``log a`` in ``[-700, 700]`` finds the unique root; numerically tiny
    ``a`` (large fitness values) pose no difficulty.
    """
    with np.errstate(divide="ignore"):
        logf = np.log(f.values[off_diagonal(f.n)])
    s, achieved = _calibrate_logit(logf, target.value, "calibrate_alpha")
    return CalibratedAlpha(math.exp(s), achieved, target.value)


def edge_probabilities(f: FitnessSpec, a: CalibratedAlpha) -> np.ndarray:
    with np.errstate(divide="ignore"):
        z = math.log(a.alpha) + np.log(f.values)
    p = _logistic(z)
    np.fill_diagonal(p, 0.0)
    return p


def sample_binary(p: np.ndarray, rng_seed) -> BinaryStructure:
    """Independent Bernoulli draws per dyad.

    ``rng_seed`` is an integer seed or a ``numpy.random.Generator``.
    """
    p = np.asarray(p, dtype=float)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    z = (rng.random(p.shape) < p).astype(np.int8)
    np.fill_diagonal(z, 0)
    return BinaryStructure(z)


def dc_gravity_edge_values(m: MarginalVector, a: CalibratedAlpha) -> np.ndarray:
    """``(1/a + x_i. x_.j) / x_..`` for every dyad, before masking by a structure."""
    total = m.total
    if total <= 0:
        raise ZeroTotal("density-corrected gravity needs a positive total")
    v = (1.0 / a.alpha + np.outer(m.out_sums, m.in_sums)) / total
    np.fill_diagonal(v, 0.0)
    return v


def dc_gravity_values(m: MarginalVector, a: CalibratedAlpha, z: BinaryStructure) -> WeightedNetwork:
    return WeightedNetwork(dc_gravity_edge_values(m, a) * z.adjacency)


@dataclass(frozen=True)
class DcGravityResult:
    """Calibration, edge probabilities, sampled ensemble and its mean.

    ``edge_values`` is the value an edge receives whenever it is drawn.
    """

    alpha: CalibratedAlpha
    probabilities: np.ndarray
    edge_values: np.ndarray
    ensemble: tuple[tuple[BinaryStructure, WeightedNetwork], ...]
    point_estimate: np.ndarray
    seed: int

    @property
    def expected_values(self) -> np.ndarray:
        """Analytic ensemble mean ``p_ij (1/a + x_i. x_.j) / x_..``."""
        return self.probabilities * self.edge_values


def dc_gravity_reconstruct(m: MarginalVector, f: FitnessSpec, target: DensityTarget,
                           n_samples: int = 100, rng_seed: int = 0,
                           workers: int = 1) -> DcGravityResult:
    """Calibrate, draw ``n_samples`` structures, and average the sampled values.

    Member ``k`` uses the random substream ``(rng_seed, k)``, so the ensemble
    does not depend on ``workers``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if f.n != m.n:
        raise DimensionMismatch("fitness and marginals differ in node count")
    a = calibrate_alpha(f, target)
    p = edge_probabilities(f, a)
    values = dc_gravity_edge_values(m, a)

    def member(k):
        z = sample_binary(p, substream(rng_seed, k))
        return z, WeightedNetwork(values * z.adjacency)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            ensemble = tuple(ex.map(member, range(n_samples)))
    else:
        ensemble = tuple(member(k) for k in range(n_samples))
    freq = np.mean([z.adjacency for z, _ in ensemble], axis=0)
    point = values * freq
    return DcGravityResult(a, p, values, ensemble, point, rng_seed)
