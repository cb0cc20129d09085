"""Hierarchical reconstruction: density-calibrated edge probabilities, then
marginal-consistent weighted samples.

Each sample draws a binary structure from independent Bernoulli
probabilities (Erdos-Renyi or logistic fitness), rejects structures that
leave a positive marginal without an incident edge, draws exponential weights
with common mean ``x_.. / (D N)`` on the support and rescales them by
support-restricted proportional fitting so every sample reproduces the
marginals. This replaces an exact Gibbs sampler of the conditional law: the
two contracts kept are calibrated probabilities and exact marginals; the
finer distribution of the weights differs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import BinaryStructure, DensityTarget, MarginalVector, WeightedNetwork, off_diagonal
from .entropy import balance
from .errors import DomainError, StructureInfeasible
from .flows import admits_positive_solution
from .gravity import _calibrate_logit, _logistic
from .rng import substream

MODELS = ("erdos_renyi", "fitness")


@dataclass(frozen=True)
class HierarchicalConfig:
    """Sampler settings.

    ``marginal_scale`` is the size the largest marginal is scaled to before
    sampling (results are scaled back); ``None`` disables the rescaling.
    """

    target: DensityTarget
    probability_model: str = "erdos_renyi"
    n_samples: int = 100
    max_structure_retries: int = 1000
    rng_seed: int = 0
    marginal_scale: float | None = 1e3
    tol: float = 1e-8
    scaling_max_iter: int = 5000

    def __post_init__(self):
        if self.probability_model not in MODELS:
            raise ValueError(f"probability_model must be one of {MODELS}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.max_structure_retries < 1:
            raise ValueError("max_structure_retries must be at least 1")
        if self.marginal_scale is not None and not self.marginal_scale > 0:
            raise ValueError("marginal_scale must be positive")


def er_probabilities(n: int, target: DensityTarget) -> np.ndarray:
    p = np.full((n, n), target.value)
    np.fill_diagonal(p, 0.0)
    return p


def _fitness_offsets(m: MarginalVector):
    s = m.out_sums + m.in_sums
    included = off_diagonal(m.n) & (s[:, None] > 0) & (s[None, :] > 0)
    with np.errstate(divide="ignore"):
        ls = np.log(s)
    return ls[:, None] + ls[None, :], included


def fit_alpha(m: MarginalVector, target: DensityTarget) -> float:
    """Constant of the logistic fitness model matching ``target`` on included dyads."""
    offsets, included = _fitness_offsets(m)
    alpha, _ = _calibrate_logit(offsets[included], target.value, "fit_probabilities")
    return alpha


def fit_probabilities(m: MarginalVector, target: DensityTarget) -> np.ndarray:
    """``p_ij = logistic(alpha + log(x_.i + x_i.) + log(x_.j + x_j.))``.

    Dyads touching a node with zero total get probability zero and are left
    out of the calibration, so the mean over the remaining dyads equals the
    target.
    """
    offsets, included = _fitness_offsets(m)
    alpha, _ = _calibrate_logit(offsets[included], target.value, "fit_probabilities")
    return np.where(included, _logistic(alpha + np.where(included, offsets, 0.0)), 0.0)


def model_probabilities(m: MarginalVector, cfg: HierarchicalConfig) -> np.ndarray:
    if cfg.probability_model == "erdos_renyi":
        return er_probabilities(m.n, cfg.target)
    return fit_probabilities(m, cfg.target)


def draw_exponential_weights(z, mean: float, rng: np.random.Generator) -> np.ndarray:
    """Exponential weights with the given mean on the support of ``z``."""
    adj = z.adjacency if isinstance(z, BinaryStructure) else np.asarray(z)
    return rng.exponential(mean, size=adj.shape) * (adj > 0)


def support_is_feasible(adj: np.ndarray, out, inn) -> bool:
    """Every positive marginal has at least one incident edge."""
    rows_ok = np.all(adj.any(axis=1)[np.asarray(out) > 0])
    cols_ok = np.all(adj.any(axis=0)[np.asarray(inn) > 0])
    return bool(rows_ok and cols_ok)


def support_admits_marginals(adj: np.ndarray, out, inn, margin: float = 1e-6) -> bool:
    """Whether a matrix positive on every edge of ``adj`` has these sums.

    Proportional fitting converges geometrically when such a matrix exists.
    Supports that only fit with some drawn edge at zero make it crawl, and
    such a draw would not realise its own structure anyway.
    """
    return admits_positive_solution(adj, out, inn, margin)


def sample_network(m: MarginalVector, p: np.ndarray, cfg: HierarchicalConfig,
                   rng: np.random.Generator | int | None = None):
    """Draw one ``(BinaryStructure, WeightedNetwork)`` matching the marginals.

    Edges drawn in a row with zero out-marginal or a column with zero
    in-marginal are dropped, since they can carry no mass. Structures that
    fail the incidence check, supports that cannot carry the marginals with
    every edge positive, and supports on which the rescaling does not
    converge are redrawn; all count against ``max_structure_retries``.
    """
    if not cfg.target.calibratable:
        raise DomainError("hierarchical sampling needs a positive target density")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(cfg.rng_seed if rng is None else rng)
    n = m.n
    biggest = float(max(m.out_sums.max(), m.in_sums.max()))
    scale = 1.0
    if cfg.marginal_scale is not None and biggest > 0:
        scale = cfg.marginal_scale / biggest
    out, inn = m.out_sums * scale, m.in_sums * scale
    if biggest == 0:
        return BinaryStructure(np.zeros((n, n))), WeightedNetwork(np.zeros((n, n)))
    allowed = off_diagonal(n) & (out[:, None] > 0) & (inn[None, :] > 0)
    mean = out.sum() / (cfg.target.value * n * (n - 1))
    rejected = diverged = 0
    for _ in range(cfg.max_structure_retries):
        adj = (rng.random((n, n)) < p) & allowed
        if not support_is_feasible(adj, out, inn):
            rejected += 1
            continue
        if not support_admits_marginals(adj, out, inn):
            diverged += 1
            continue
        w = draw_exponential_weights(adj, mean, rng)
        bal = balance(w, out, inn, cfg.tol, cfg.scaling_max_iter, floor=scale)
        if not bal.converged:
            diverged += 1
            continue
        values = bal.mu / scale
        return BinaryStructure((values > 0).astype(np.int8)), WeightedNetwork(values)
    raise StructureInfeasible(
        f"no admissible structure in {cfg.max_structure_retries} draws "
        f"({rejected} failed the incidence check, {diverged} could not be rescaled)"
    )


def ensemble_point_estimate(samples) -> tuple[np.ndarray, np.ndarray]:
    """Empirical edge frequencies and per-dyad mean values of an ensemble.

    ``samples`` holds ``(BinaryStructure, WeightedNetwork)`` pairs or bare
    weighted networks.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    nets = [s[1] if isinstance(s, tuple) else s for s in samples]
    vals = np.stack([x.values for x in nets])
    return (vals > 0).mean(axis=0), vals.mean(axis=0)


@dataclass(frozen=True)
class HierarchicalResult:
    probabilities: np.ndarray
    frequencies: np.ndarray
    point_estimate: np.ndarray
    ensemble: tuple[tuple[BinaryStructure, WeightedNetwork], ...]


def hierarchical_reconstruct(m: MarginalVector, cfg: HierarchicalConfig,
                             workers: int = 1) -> HierarchicalResult:
    """Sample ``cfg.n_samples`` networks; sample ``k`` uses substream ``(seed, k)``."""
    p = model_probabilities(m, cfg)

    def one(k):
        return sample_network(m, p, cfg, substream(cfg.rng_seed, k))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            ensemble = tuple(ex.map(one, range(cfg.n_samples)))
    else:
        ensemble = tuple(one(k) for k in range(cfg.n_samples))
    freq, mean = ensemble_point_estimate(ensemble)
    return HierarchicalResult(p, freq, mean, ensemble)
