"""Evaluation of reconstructed networks against the truth.

Binary metrics (ROC and PR AUC, Brier decomposition, degree RMSE) score the
off-diagonal dyads; value metrics compare edge values directly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .core import (BinaryStructure, DensityTarget, ReconstructionResult, WeightedNetwork,
                   as_network, binarize, binary_degrees, off_diagonal, threshold_binarize)
from .errors import DegenerateLabels, DimensionMismatch, NoPositives


def _pair(probs, labels):
    p = np.asarray(probs, dtype=float).ravel()
    z = np.asarray(labels).ravel()
    if p.shape != z.shape:
        raise DimensionMismatch(f"{p.size} scores for {z.size} labels")
    if not np.all(np.isin(z, (0, 1))):
        raise ValueError("labels must be 0 or 1")
    return p, z.astype(np.int64)


def roc_auc(probs, labels) -> float:
    """Mann-Whitney AUC: P(score of a positive > score of a negative), ties count 1/2."""
    p, z = _pair(probs, labels)
    n_pos = int(z.sum())
    n_neg = z.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("roc_auc needs at least one positive and one negative label")
    ranks = rankdata(p)
    # twice the U statistic is an integer, so this is exact for any realistic size
    u2 = 2.0 * ranks[z == 1].sum() - n_pos * (n_pos + 1)
    return float(u2 / (2.0 * n_pos * n_neg))


def pr_auc(probs, labels) -> float:
    """Average precision over a descending sweep in which tied scores enter together."""
    p, z = _pair(probs, labels)
    n_pos = int(z.sum())
    if n_pos == 0:
        raise NoPositives("pr_auc needs at least one positive label")
    order = np.argsort(-p, kind="stable")
    p, z = p[order], z[order]
    last = np.r_[np.flatnonzero(np.diff(p) != 0), p.size - 1]
    tp = np.cumsum(z)[last]
    precision = tp / (last + 1.0)
    recall_gain = np.diff(np.r_[0, tp]) / n_pos
    return float((recall_gain * precision).sum())


@dataclass(frozen=True)
class BrierDecomposition:
    score: float
    reliability: float
    resolution: float
    uncertainty: float

    def __iter__(self):
        return iter((self.score, self.reliability, self.resolution, self.uncertainty))


def brier_decomposition(probs, labels) -> BrierDecomposition:
    """Brier score with its reliability/resolution/uncertainty split.

    Forecasts are grouped by exact equality of the probability; within a
    group the forecast is constant, which makes
    ``score = rel - res + unc`` an algebraic identity.
    """
    p, z = _pair(probs, labels)
    if p.size == 0:
        raise ValueError("no forecasts")
    N = p.size
    D = z.mean()
    values, inverse, counts = np.unique(p, return_inverse=True, return_counts=True)
    zbar = np.bincount(inverse, weights=z) / counts
    w = counts / N
    rel = float((w * (zbar - values) ** 2).sum())
    res = float((w * (zbar - D) ** 2).sum())
    unc = float(D * (1.0 - D))
    score = float(((p - z) ** 2).mean())
    return BrierDecomposition(score, rel, res, unc)


def degree_histogram(z: BinaryStructure, direction: str = "out") -> np.ndarray:
    """Number of nodes with degree ``j`` for ``j = 1..n`` (degree zero is not counted)."""
    outd, ind = binary_degrees(z)
    if direction == "out":
        d = outd
    elif direction == "in":
        d = ind
    else:
        raise ValueError("direction must be 'out' or 'in'")
    n = z.n
    return np.bincount(d, minlength=n + 1)[1:n + 1]


def degree_rmse(z_hat: BinaryStructure, z: BinaryStructure, direction: str = "out") -> float:
    """Root mean squared difference of the two degree histograms over degrees 1..n."""
    if z_hat.n != z.n:
        raise DimensionMismatch(f"n={z_hat.n} against n={z.n}")
    diff = degree_histogram(z_hat, direction) - degree_histogram(z, direction)
    return math.sqrt(float((diff * diff).sum()) / z.n)


def value_errors(mu_hat, x) -> tuple[float, float]:
    """L1 and L2 distances over the off-diagonal dyads."""
    x = as_network(x)
    mu = np.asarray(mu_hat, dtype=float)
    if mu.shape != x.values.shape:
        raise DimensionMismatch(f"estimate of shape {mu.shape} against n={x.n}")
    d = (mu - x.values)[off_diagonal(x.n)]
    return float(np.abs(d).sum()), float(np.sqrt((d * d).sum()))


@dataclass(frozen=True)
class EvaluationReport:
    auc_roc: float
    auc_pr: float
    brier: BrierDecomposition
    rmse_outdeg: float
    rmse_indeg: float
    l1: float
    l2: float

    def as_row(self) -> dict:
        """Flat mapping with the Brier parts as separate columns."""
        row = asdict(self)
        b = row.pop("brier")
        row.update(brier=b["score"], brier_rel=b["reliability"], brier_res=b["resolution"],
                   brier_unc=b["uncertainty"])
        return row


METRIC_COLUMNS = ("auc_roc", "auc_pr", "brier", "brier_rel", "brier_res", "brier_unc",
                  "rmse_outdeg", "rmse_indeg", "l1", "l2")


def evaluate(result: ReconstructionResult, truth: WeightedNetwork,
             target: DensityTarget) -> EvaluationReport:
    """All metrics of one reconstruction.

    Ranking scores are the edge probabilities when the method has them and
    the estimated values otherwise. The Brier score needs probabilities, so
    for value-only methods the Poisson link ``1 - exp(-mu)`` turns values
    into probabilities. Degrees come from the ``round(D N)`` top-scoring
    dyads. AUC entries are NaN when the truth has no edges (or no
    non-edges).
    """
    truth = as_network(truth)
    mu = np.asarray(result.values, dtype=float)
    if mu.shape != truth.values.shape:
        raise DimensionMismatch(f"reconstruction of shape {mu.shape} against n={truth.n}")
    mask = off_diagonal(truth.n)
    z = binarize(truth)
    labels = z.adjacency[mask]
    if result.probabilities is not None:
        scores = np.asarray(result.probabilities, dtype=float)
        probs = scores
    else:
        scores = mu
        probs = -np.expm1(-np.maximum(mu, 0.0))
    try:
        auc = roc_auc(scores[mask], labels)
    except DegenerateLabels:
        auc = math.nan
    try:
        ap = pr_auc(scores[mask], labels)
    except NoPositives:
        ap = math.nan
    brier = brier_decomposition(probs[mask], labels)
    z_hat = threshold_binarize(scores, target)
    l1, l2 = value_errors(mu, truth)
    return EvaluationReport(
        auc_roc=auc,
        auc_pr=ap,
        brier=brier,
        rmse_outdeg=degree_rmse(z_hat, z, "out"),
        rmse_indeg=degree_rmse(z_hat, z, "in"),
        l1=l1,
        l2=l2,
    )
