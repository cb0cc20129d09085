import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netrecon.core import (BinaryStructure, DensityTarget, ReconstructionResult, WeightedNetwork,
                           binarize, compute_marginals, density, threshold_binarize)
from netrecon.errors import DegenerateLabels, DimensionMismatch, NoPositives
from netrecon.gravity import gravity_fit
from netrecon.metrics import (METRIC_COLUMNS, brier_decomposition, degree_histogram, degree_rmse,
                              evaluate, pr_auc, roc_auc, value_errors)

from conftest import X3
from oracles import brier_oracle, degree_rmse_oracle, pairwise_auc, step_pr_auc

OFF3 = ~np.eye(3, dtype=bool)


def structure_with_degrees(out_degrees):
    """Directed structure whose node ``i`` has ``out_degrees[i]`` out-edges (to the next nodes)."""
    n = len(out_degrees)
    a = np.zeros((n, n), dtype=np.int8)
    for i, d in enumerate(out_degrees):
        for k in range(1, d + 1):
            a[i, (i + k) % n] = 1
    return BinaryStructure(a)


# ROC AUC

def test_roc_examples():
    assert roc_auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]) == 1.0
    assert roc_auc([0.9, 0.2, 0.8, 0.1], [1, 0, 0, 1]) == 0.5
    assert roc_auc([0.4] * 6, [1, 0, 1, 0, 0, 1]) == 0.5


def test_roc_degenerate():
    with pytest.raises(DegenerateLabels):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(DegenerateLabels):
        roc_auc([0.1, 0.2], [0, 0])
    with pytest.raises(DimensionMismatch):
        roc_auc([0.1, 0.2], [0, 1, 1])


@given(st.integers(2, 40), st.integers(0, 2**32 - 1), st.booleans())
def test_roc_matches_pairwise_oracle(size, seed, coarse):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size)
    labels[0], labels[1] = 0, 1
    scores = rng.integers(0, 4, size) / 4 if coarse else rng.random(size)
    assert roc_auc(scores, labels) == pairwise_auc(scores.tolist(), labels.tolist())


@given(st.integers(0, 2**32 - 1))
def test_roc_invariant_under_increasing_transform(seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, 30)
    labels[:2] = (0, 1)
    scores = rng.integers(0, 6, 30) / 5
    assert roc_auc(scores, labels) == roc_auc(np.exp(3 * scores) + 7, labels)


# PR AUC

def test_pr_examples():
    assert pr_auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]) == 1.0
    labels = [1, 0, 0, 1, 0, 0, 0, 1]
    assert pr_auc([0.3] * 8, labels) == pytest.approx(3 / 8)
    scores = [0.9, 0.8, 0.8, 0.5, 0.3, 0.3]
    labels = [1, 0, 1, 1, 0, 1]
    assert step_pr_auc(scores, labels) == pytest.approx(37 / 48)
    assert pr_auc(scores, labels) == pytest.approx(37 / 48, abs=1e-15)


def test_pr_no_positives():
    with pytest.raises(NoPositives):
        pr_auc([0.1, 0.2], [0, 0])


@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_pr_matches_sweep_oracle(size, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size)
    labels[0] = 1
    scores = rng.integers(0, 5, size) / 4
    assert pr_auc(scores, labels) == pytest.approx(step_pr_auc(scores.tolist(), labels.tolist()), abs=1e-12)
    assert 0 <= pr_auc(scores, labels) <= 1


# Brier

def test_brier_perfect():
    b = brier_decomposition([1, 1, 0, 0], [1, 1, 0, 0])
    assert tuple(b) == (0.0, 0.0, 0.25, 0.25)


def test_brier_climatology():
    labels = [1, 0, 0, 1, 0]
    b = brier_decomposition([0.4] * 5, labels)
    assert b.reliability == pytest.approx(0.0, abs=1e-16)
    assert b.resolution == pytest.approx(0.0, abs=1e-16)
    assert b.score == pytest.approx(b.uncertainty)


def test_brier_mixed_eight():
    probs = [0.2, 0.2, 0.7, 0.7, 0.7, 0.9, 0.1, 0.1]
    labels = [0, 1, 1, 1, 0, 1, 0, 0]
    b = brier_decomposition(probs, labels)
    for got, want in zip(b, brier_oracle(probs, labels)):
        assert got == pytest.approx(want, abs=1e-15)
    assert abs(b.score - (b.reliability - b.resolution + b.uncertainty)) <= 1e-15


@given(st.integers(1, 60), st.integers(0, 2**32 - 1), st.booleans())
def test_brier_identity_and_bounds(size, seed, coarse):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size)
    probs = rng.integers(0, 5, size) / 4 if coarse else rng.random(size)
    b = brier_decomposition(probs, labels)
    assert abs(b.score - (b.reliability - b.resolution + b.uncertainty)) <= 1e-12
    assert b.reliability >= 0 and b.resolution >= 0
    assert b.resolution <= b.uncertainty + 1e-12
    for got, want in zip(b, brier_oracle(probs, labels)):
        assert got == pytest.approx(want, abs=1e-12)


# degree RMSE

def test_degree_rmse_hand_case():
    z = structure_with_degrees([1, 1, 2])
    z_hat = structure_with_degrees([2, 2, 1])
    assert degree_histogram(z).tolist() == [2, 1, 0]
    assert degree_histogram(z_hat).tolist() == [1, 2, 0]
    assert degree_rmse(z_hat, z) == pytest.approx(math.sqrt(2 / 3))


def test_degree_rmse_trivial():
    z = structure_with_degrees([1, 2, 0])
    assert degree_rmse(z, z) == 0.0
    empty = BinaryStructure(np.zeros((4, 4), dtype=np.int8))
    assert degree_rmse(empty, empty, "in") == 0.0
    with pytest.raises(DimensionMismatch):
        degree_rmse(z, empty)
    with pytest.raises(ValueError):
        degree_histogram(z, "sideways")


@given(st.integers(2, 9), st.integers(0, 2**32 - 1), st.sampled_from(["out", "in"]))
def test_degree_rmse_oracle_and_symmetry(n, seed, direction):
    rng = np.random.default_rng(seed)
    a = (rng.random((n, n)) < rng.random()).astype(np.int8)
    b = (rng.random((n, n)) < rng.random()).astype(np.int8)
    np.fill_diagonal(a, 0)
    np.fill_diagonal(b, 0)
    za, zb = BinaryStructure(a), BinaryStructure(b)
    axis = 1 if direction == "out" else 0
    want = degree_rmse_oracle(a.sum(axis=axis).tolist(), b.sum(axis=axis).tolist(), n)
    assert degree_rmse(za, zb, direction) == pytest.approx(want, abs=1e-14)
    assert degree_rmse(za, zb, direction) == degree_rmse(zb, za, direction)


# value errors

def test_value_errors_examples(x3, m2):
    assert value_errors(X3, x3) == (0.0, 0.0)
    x = WeightedNetwork(np.array([[0.0, 3.0], [5.0, 0.0]]))
    l1, l2 = value_errors(np.zeros((2, 2)), x)
    assert l1 == 8.0 and l2 == pytest.approx(math.sqrt(34))
    with pytest.raises(DimensionMismatch):
        value_errors(np.zeros((2, 2)), x3)


def test_value_errors_gravity_oracle(x3, m3):
    mu = gravity_fit(m3)
    d = [X3[i][j] - mu[i][j] for i in range(3) for j in range(3) if i != j]
    l1, l2 = value_errors(mu, x3)
    assert l1 == pytest.approx(sum(abs(v) for v in d), abs=1e-14)
    assert l2 == pytest.approx(math.sqrt(sum(v * v for v in d)), abs=1e-14)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_value_norm_inequalities(n, seed):
    rng = np.random.default_rng(seed)
    x = WeightedNetwork(rng.exponential(1.0, (n, n)))
    mu = rng.exponential(1.0, (n, n))
    l1, l2 = value_errors(mu, x)
    N = n * (n - 1)
    assert l2 <= l1 + 1e-12 and l1 <= math.sqrt(N) * l2 + 1e-12


# evaluate

def test_evaluate_self(x3):
    z = binarize(x3)
    res = ReconstructionResult("truth", X3, z.adjacency.astype(float))
    rep = evaluate(res, x3, DensityTarget(density(z)))
    assert rep.auc_roc == 1.0 and rep.auc_pr == 1.0
    assert rep.brier.score == 0.0
    assert rep.rmse_outdeg == 0.0 and rep.rmse_indeg == 0.0
    assert rep.l1 == 0.0 and rep.l2 == 0.0


def test_evaluate_gravity_from_components(x3, m3):
    mu = gravity_fit(m3)
    target = DensityTarget(4 / 6)
    rep = evaluate(ReconstructionResult("GRAVITY", mu), x3, target)
    labels = [int(X3[i][j] > 0) for i in range(3) for j in range(3) if i != j]
    scores = [mu[i][j] for i in range(3) for j in range(3) if i != j]
    probs = [1 - math.exp(-s) for s in scores]
    assert rep.auc_roc == pairwise_auc(scores, labels)
    assert rep.auc_pr == pytest.approx(step_pr_auc(scores, labels))
    for got, want in zip(rep.brier, brier_oracle(probs, labels)):
        assert got == pytest.approx(want, abs=1e-14)
    z_hat = threshold_binarize(mu, target)
    assert z_hat.n_edges == 4
    true_out = (X3 > 0).sum(axis=1).tolist()
    hat_out = z_hat.adjacency.sum(axis=1).tolist()
    assert rep.rmse_outdeg == pytest.approx(degree_rmse_oracle(hat_out, true_out, 3))
    assert (rep.l1, rep.l2) == value_errors(mu, x3)
    row = rep.as_row()
    assert set(row) == set(METRIC_COLUMNS)
    assert row["brier"] == rep.brier.score


def test_evaluate_all_zero(x3):
    rep = evaluate(ReconstructionResult("ZERO", np.zeros((3, 3))), x3, DensityTarget(4 / 6))
    assert rep.l1 == X3.sum()
    # ties are broken in dyad order, so the first four dyads are predicted
    z_hat = threshold_binarize(np.zeros((3, 3)), DensityTarget(4 / 6))
    assert rep.rmse_outdeg == degree_rmse(z_hat, binarize(x3), "out")


def test_evaluate_single_class_truth():
    truth = WeightedNetwork(np.ones((3, 3)))
    rep = evaluate(ReconstructionResult("G", np.ones((3, 3))), truth, DensityTarget(1.0))
    assert math.isnan(rep.auc_roc)
    assert rep.auc_pr == 1.0


def test_evaluate_shape_mismatch(x3):
    with pytest.raises(DimensionMismatch):
        evaluate(ReconstructionResult("G", np.zeros((2, 2))), x3, DensityTarget(0.5))
