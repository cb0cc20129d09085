"""Synthetic time series of weighted directed networks.

Every node gets a log-normal fitness ``exp(phi_i)``. Edge probabilities are
``a f_ij / (1 + a f_ij)`` with ``f_ij = exp(phi_i + phi_j)`` and ``a``
calibrated so the expected density matches the target. Edge values are
classical Pareto draws scaled by the fitness product, so the marginals carry
information on where the edges are.

From one period to the next every edge survives with probability
``persistence`` and keeps its value; the mass of the edges that die moves
to as many new dyads, drawn in proportion to their edge probability. All
values then grow by the factor ``trend``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from ..core import (CovariateMatrix, DensityTarget, TimeSeriesDataset, WeightedNetwork,
                    covariate_gdp_pair, off_diagonal)
from ..gravity import FitnessSpec, calibrate_alpha, edge_probabilities
from ..rng import substream


@dataclass(frozen=True)
class GeneratorConfig:
    """Settings of the synthetic generator.

    ``fitness_sigma`` is the standard deviation of the log-fitness; small
    values give nearly uniform degrees. ``value_scale`` multiplies all edge
    values and ``gdp_unit`` the GDP covariate (large enough by default that
    ``log(gdp_i + gdp_j)`` is positive, as GDP-based fitness requires).
    """

    n: int = 59
    T: int = 24
    target_density: float = 0.85
    weight_tail: float = 1.5
    trend: float = 1.0
    persistence: float = 0.95
    rng_seed: int = 0
    fitness_sigma: float = 1.0
    value_scale: float = 1.0
    gdp_unit: float = 1e3

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if not 0 < self.target_density <= 1:
            raise ValueError("target_density must lie in (0, 1]")
        if not self.weight_tail > 1:
            raise ValueError("weight_tail must exceed 1 (finite mean)")
        if not 0 <= self.persistence <= 1:
            raise ValueError("persistence must lie in [0, 1]")
        if not self.trend > 0:
            raise ValueError("trend must be positive")
        if self.fitness_sigma < 0 or not self.value_scale > 0 or not self.gdp_unit > 0:
            raise ValueError("fitness_sigma must be non-negative, value_scale and gdp_unit positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown generator settings: {sorted(unknown)}")
        return cls(**d)


PRESETS = {
    "reduced": GeneratorConfig(n=59, T=24, target_density=0.85),
    "full": GeneratorConfig(n=203, T=24, target_density=0.25, trend=1.01),
    "uniform-degree": GeneratorConfig(n=59, T=24, target_density=0.85, fitness_sigma=0.1),
}


def preset(name: str, **overrides) -> GeneratorConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return replace(base, **overrides)


def _probabilities(phi: np.ndarray, target: float) -> np.ndarray:
    n = phi.size
    if target >= 1.0:
        p = np.ones((n, n))
        np.fill_diagonal(p, 0.0)
        return p
    f = FitnessSpec("generator", np.exp(phi[:, None] + phi[None, :]))
    return edge_probabilities(f, calibrate_alpha(f, DensityTarget(target)))


def _pareto(rng, shape, tail):
    return 1.0 + rng.pareto(tail, size=shape)


def generate_series(cfg: GeneratorConfig) -> TimeSeriesDataset:
    """Draw a dataset; identical configs give bit-identical datasets.

    The per-node ``gdp`` rows are ``gdp_unit * exp(phi) * trend**t``.
    """
    n = cfg.n
    mask = off_diagonal(n)
    phi = cfg.fitness_sigma * substream(cfg.rng_seed, "fitness").standard_normal(n)
    p = _probabilities(phi, cfg.target_density)
    size = np.exp(phi[:, None] + phi[None, :])
    rng = substream(cfg.rng_seed, "dynamics")

    adj = (rng.random((n, n)) < p) & mask
    x = np.where(adj, cfg.value_scale * size * _pareto(rng, (n, n), cfg.weight_tail), 0.0)
    nets = [x]
    for _ in range(1, cfg.T):
        x = x.copy()
        alive = x > 0
        dies = alive & (rng.random((n, n)) >= cfg.persistence)
        dead_mass = x[dies].sum()
        k = int(dies.sum())
        x[dies] = 0.0
        if k:
            free = np.flatnonzero((mask & ~alive).ravel())
            w = p.ravel()[free]
            k = min(k, int((w > 0).sum()))
            if k:
                chosen = rng.choice(free, size=k, replace=False, p=w / w.sum())
                fresh = size.ravel()[chosen] * _pareto(rng, k, cfg.weight_tail)
                x.ravel()[chosen] = fresh * (dead_mass / fresh.sum())
        x *= cfg.trend
        nets.append(x)
    gdp = cfg.gdp_unit * np.exp(phi)[None, :] * cfg.trend ** np.arange(cfg.T)[:, None]
    return TimeSeriesDataset(
        networks=tuple(WeightedNetwork(a) for a in nets),
        time_labels=tuple(str(t + 1) for t in range(cfg.T)),
        gdp=gdp,
    )


def dataset_covariates(ds: TimeSeriesDataset) -> list[CovariateMatrix]:
    """GDP-pair covariates of every period."""
    return [covariate_gdp_pair(g) for g in ds.gdp]
