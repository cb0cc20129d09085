"""Data model for directed weighted networks without self-loops.

All matrices are stored densely as ``n x n`` float arrays. The diagonal slot
exists but is structurally absent: constructors zero it and every operation
skips it. Instances are immutable (the wrapped arrays are read-only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError, InvalidMarginals

MARGINAL_RTOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def off_diagonal(n: int) -> np.ndarray:
    """Boolean mask of the ``n (n - 1)`` admissible dyads."""
    mask = np.ones((n, n), dtype=bool)
    np.fill_diagonal(mask, False)
    return mask


def _square(values, name: str) -> np.ndarray:
    a = np.array(values, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix, got shape {a.shape}")
    if a.shape[0] < 2:
        raise DomainError(f"{name} needs at least 2 nodes")
    np.fill_diagonal(a, 0.0)
    return a


@dataclass(frozen=True)
class WeightedNetwork:
    """Non-negative edge values ``x_ij`` of a directed network."""

    values: np.ndarray
    node_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        a = _square(self.values, "values")
        if not np.all(np.isfinite(a)):
            raise DomainError("edge values must be finite")
        if np.any(a < 0):
            raise DomainError("edge values must be non-negative")
        object.__setattr__(self, "values", _frozen(a))
        if self.node_labels is not None:
            labels = tuple(str(s) for s in self.node_labels)
            if len(labels) != a.shape[0]:
                raise DimensionMismatch("node_labels must have one entry per node")
            object.__setattr__(self, "node_labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_dyads(self) -> int:
        return self.n * (self.n - 1)

    def edge_vector(self) -> np.ndarray:
        """Row-major vector of the off-diagonal values, ``(x_12, ..., x_n(n-1))``."""
        return self.values[off_diagonal(self.n)]


@dataclass(frozen=True)
class BinaryStructure:
    adjacency: np.ndarray

    def __post_init__(self):
        a = _square(self.adjacency, "adjacency")
        if not np.all((a == 0) | (a == 1)):
            raise DomainError("adjacency entries must be 0 or 1")
        object.__setattr__(self, "adjacency", _frozen(a.astype(np.int8)))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())


@dataclass(frozen=True)
class MarginalVector:
    """Valued out-degrees (row sums) and in-degrees (column sums).

    Raises :class:`InvalidMarginals` when the two totals differ by more than
    a relative ``1e-9`` or any entry is negative.
    """

    out_sums: np.ndarray
    in_sums: np.ndarray

    def __post_init__(self):
        out = np.array(self.out_sums, dtype=float, copy=True).ravel()
        inn = np.array(self.in_sums, dtype=float, copy=True).ravel()
        if out.shape != inn.shape:
            raise DimensionMismatch("out_sums and in_sums must have the same length")
        if out.size < 2:
            raise DomainError("marginals need at least 2 nodes")
        if not (np.all(np.isfinite(out)) and np.all(np.isfinite(inn))):
            raise InvalidMarginals("marginals must be finite")
        if np.any(out < 0) or np.any(inn < 0):
            raise InvalidMarginals("marginals must be non-negative")
        so, si = math.fsum(out), math.fsum(inn)
        if abs(so - si) > MARGINAL_RTOL * max(abs(so), abs(si), 1e-300):
            raise InvalidMarginals(f"row total {so!r} differs from column total {si!r}")
        object.__setattr__(self, "out_sums", _frozen(out))
        object.__setattr__(self, "in_sums", _frozen(inn))

    @property
    def n(self) -> int:
        return self.out_sums.size

    @property
    def total(self) -> float:
        return math.fsum(self.out_sums)

    def stacked(self) -> np.ndarray:
        """The length-``2n`` vector ``y = (x_1., ..., x_n., x_.1, ..., x_.n)``."""
        return np.concatenate([self.out_sums, self.in_sums])

    def scaled(self, factor: float) -> "MarginalVector":
        return MarginalVector(self.out_sums * factor, self.in_sums * factor)


@dataclass(frozen=True)
class DensityTarget:
    """Fraction of the ``N = n (n - 1)`` dyads that carry an edge.

    Zero is representable (the density of an empty network) but density
    calibration routines reject it, see :attr:`calibratable`.
    """

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not (0.0 <= v <= 1.0) or math.isnan(v):
            raise DomainError(f"density must lie in [0, 1], got {v!r}")
        object.__setattr__(self, "value", v)

    @property
    def calibratable(self) -> bool:
        return self.value > 0.0

    def edge_count(self, n: int) -> int:
        """``round(D N)`` with half-up rounding."""
        return int(math.floor(self.value * n * (n - 1) + 0.5))


@dataclass(frozen=True)
class CovariateMatrix:
    c: np.ndarray

    def __post_init__(self):
        a = _square(self.c, "c")
        if not np.all(np.isfinite(a)):
            raise DomainError("covariate entries must be finite")
        object.__setattr__(self, "c", _frozen(a))

    @property
    def n(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Ordered networks on a fixed node set.

    ``gdp`` is an optional ``T x n`` array of positive node sizes; ``covariates``
    optional per-time dyadic covariates.
    """

    networks: tuple[WeightedNetwork, ...]
    time_labels: tuple[str, ...] | None = None
    covariates: tuple[CovariateMatrix, ...] | None = None
    gdp: np.ndarray | None = None
    node_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        nets = tuple(self.networks)
        if not nets:
            raise DomainError("a dataset needs at least one time point")
        n = nets[0].n
        if any(x.n != n for x in nets):
            raise DimensionMismatch("all networks must share the node set")
        object.__setattr__(self, "networks", nets)
        labels = self.time_labels
        if labels is None:
            labels = tuple(str(t + 1) for t in range(len(nets)))
        labels = tuple(str(s) for s in labels)
        if len(labels) != len(nets):
            raise DimensionMismatch("one time label per network required")
        object.__setattr__(self, "time_labels", labels)
        if self.covariates is not None:
            covs = tuple(self.covariates)
            if len(covs) != len(nets) or any(c.n != n for c in covs):
                raise DimensionMismatch("covariates must match networks in T and n")
            object.__setattr__(self, "covariates", covs)
        if self.gdp is not None:
            g = np.array(self.gdp, dtype=float, copy=True)
            if g.shape != (len(nets), n):
                raise DimensionMismatch(f"gdp must have shape {(len(nets), n)}")
            if np.any(g <= 0) or not np.all(np.isfinite(g)):
                raise DomainError("gdp entries must be positive and finite")
            object.__setattr__(self, "gdp", _frozen(g))
        if self.node_labels is not None:
            object.__setattr__(self, "node_labels", tuple(str(s) for s in self.node_labels))

    @property
    def n(self) -> int:
        return self.networks[0].n

    @property
    def T(self) -> int:
        return len(self.networks)


@dataclass(frozen=True)
class ReconstructionResult:
    """Output of any reconstruction method, in a common shape for evaluation.

    ``values`` holds the predicted edge values; ``probabilities`` is present
    for methods that model edge occurrence; ``ensemble`` holds sampled
    weighted networks for stochastic methods.
    """

    method: str
    values: np.ndarray
    probabilities: np.ndarray | None = None
    ensemble: tuple[WeightedNetwork, ...] | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(_square(self.values, "values")))
        if self.probabilities is not None:
            p = _square(self.probabilities, "probabilities")
            if p.shape != self.values.shape:
                raise DimensionMismatch("probabilities and values differ in shape")
            if np.any(p < 0) or np.any(p > 1):
                raise DomainError("probabilities must lie in [0, 1]")
            object.__setattr__(self, "probabilities", _frozen(p))


def as_network(x) -> WeightedNetwork:
    return x if isinstance(x, WeightedNetwork) else WeightedNetwork(x)


def compute_marginals(net: WeightedNetwork) -> MarginalVector:
    x = as_network(net).values
    return MarginalVector(x.sum(axis=1), x.sum(axis=0))


def routing_matrix(n: int) -> np.ndarray:
    """The ``2n x N`` 0/1 matrix ``A`` with ``y = A x`` for row-major edge vectors."""
    rows, cols = np.nonzero(off_diagonal(n))
    A = np.zeros((2 * n, rows.size))
    k = np.arange(rows.size)
    A[rows, k] = 1.0
    A[n + cols, k] = 1.0
    return A


def binarize(net: WeightedNetwork) -> BinaryStructure:
    return BinaryStructure((as_network(net).values > 0).astype(np.int8))


def density(z: BinaryStructure) -> float:
    """Share of dyads with an edge.

    Returned as a float; wrap in :class:`DensityTarget` for calibration use.
    An empty structure gives ``0.0``, which calibration routines reject.
    """
    n = z.n
    return z.n_edges / (n * (n - 1))


def binary_degrees(z: BinaryStructure) -> tuple[np.ndarray, np.ndarray]:
    a = z.adjacency.astype(np.int64)
    return a.sum(axis=1), a.sum(axis=0)


def threshold_binarize(scores, target: DensityTarget) -> BinaryStructure:
    """Set the ``round(D N)`` highest-scoring dyads to one.

    Ties are broken in lexicographic dyad order (row first, then column).
    """
    s = np.asarray(scores, dtype=float)
    n = s.shape[0]
    mask = off_diagonal(n)
    flat = s[mask]
    if not np.all(np.isfinite(flat)):
        raise DomainError("scores must be finite off the diagonal")
    k = target.edge_count(n)
    order = np.argsort(-flat, kind="stable")
    chosen = np.zeros(flat.size, dtype=np.int8)
    chosen[order[:k]] = 1
    adj = np.zeros((n, n), dtype=np.int8)
    adj[mask] = chosen
    return BinaryStructure(adj)


def covariate_gdp_pair(gdp) -> CovariateMatrix:
    """Dyadic size covariate ``c_ij = log(gdp_i + gdp_j)``."""
    g = np.asarray(gdp, dtype=float).ravel()
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise DomainError("gdp entries must be positive and finite")
    return CovariateMatrix(np.log(g[:, None] + g[None, :]))


def covariate_lag_log(prev: WeightedNetwork, offset: float = 1.0) -> CovariateMatrix:
    """Lagged covariate ``c_ij = log(offset + x_ij)`` from the previous period."""
    if offset <= 0:
        raise DomainError(f"offset must be positive, got {offset!r}")
    return CovariateMatrix(np.log(offset + as_network(prev).values))
