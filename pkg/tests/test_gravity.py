import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netrecon.core import (BinaryStructure, CovariateMatrix, DensityTarget, MarginalVector,
                           WeightedNetwork, binarize, compute_marginals, density)
from netrecon.errors import DomainError, TargetUnreachable, ZeroTotal
from netrecon.gravity import (CalibratedAlpha, FitnessSpec, calibrate_alpha, dc_gravity_reconstruct,
                              dc_gravity_values, edge_probabilities, gravity_fit, sample_binary)


def alpha_oracle(f, D, tol=1e-14):
    """Bisection directly on alpha (not its logarithm), written independently."""
    vals = [f[i][j] for i in range(len(f)) for j in range(len(f)) if i != j]

    def mean_p(a):
        return sum(a * v / (1 + a * v) for v in vals) / len(vals)

    lo, hi = 0.0, 1.0
    while mean_p(hi) < D:
        hi *= 2
    while hi - lo > tol * hi:
        mid = (lo + hi) / 2
        if mean_p(mid) < D:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def ones_fitness(n):
    return FitnessSpec("covariate", np.ones((n, n)))


def test_gravity_n3(m3):
    mu = gravity_fit(m3)
    expected = np.array([[0, 0.6, 1.2], [1.2, 0, 1.2], [1.6, 0.8, 0]])
    assert np.allclose(mu, expected, atol=1e-15)


def test_gravity_n2_diagonal_bias(m2):
    mu = gravity_fit(m2)
    assert mu[0, 1] == pytest.approx(1.125)
    assert mu[1, 0] == pytest.approx(3.125)
    assert mu.sum(axis=1)[0] != 3.0


def test_gravity_uniform():
    n, s = 5, 2.5
    m = MarginalVector(np.full(n, s), np.full(n, s))
    mu = gravity_fit(m)
    off = ~np.eye(n, dtype=bool)
    assert np.allclose(mu[off], s / n)


def test_gravity_zero_total():
    with pytest.raises(ZeroTotal):
        gravity_fit(MarginalVector(np.zeros(3), np.zeros(3)))


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_gravity_total_mass_identity(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.exponential(5.0, (n, n)) * (rng.random((n, n)) < 0.8)
    np.fill_diagonal(x, 0.0)
    m = compute_marginals(WeightedNetwork(x))
    if m.total <= 0:
        return
    mu = gravity_fit(m)
    expected = m.total - (m.out_sums * m.in_sums).sum() / m.total
    assert mu.sum() == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("D, alpha", [(0.5, 1.0), (0.9, 9.0)])
def test_calibrate_closed_forms(D, alpha):
    a = calibrate_alpha(ones_fitness(4), DensityTarget(D))
    assert a.alpha == pytest.approx(alpha, abs=1e-10)
    p = edge_probabilities(ones_fitness(4), a)
    off = ~np.eye(4, dtype=bool)
    assert np.allclose(p[off], D, atol=1e-10)
    assert np.all(np.diag(p) == 0)


def test_calibrate_n3_against_oracle(m3):
    f = FitnessSpec.marginal_product(m3)
    a = calibrate_alpha(f, DensityTarget(2 / 3))
    oracle = alpha_oracle(f.values.tolist(), 2 / 3)
    assert a.alpha == pytest.approx(oracle, rel=1e-9)
    p = edge_probabilities(f, a)
    g = f.values
    for i in range(3):
        for j in range(3):
            if i != j:
                assert p[i, j] == pytest.approx(oracle * g[i, j] / (1 + oracle * g[i, j]), rel=1e-9)


@pytest.mark.parametrize("D", [0.0, 1.0])
def test_calibrate_unreachable(D):
    with pytest.raises(TargetUnreachable):
        calibrate_alpha(ones_fitness(3), DensityTarget(D))


def test_tiny_alpha_for_huge_fitness():
    f = FitnessSpec("covariate", np.full((4, 4), 1e200))
    a = calibrate_alpha(f, DensityTarget(0.5))
    assert a.alpha == pytest.approx(1e-200, rel=1e-8)


@given(st.integers(2, 12), st.floats(0.01, 0.99), st.integers(0, 2**32 - 1))
def test_calibration_hits_target(n, D, seed):
    rng = np.random.default_rng(seed)
    f = FitnessSpec("covariate", np.exp(rng.normal(0, 3, (n, n))))
    a = calibrate_alpha(f, DensityTarget(D))
    p = edge_probabilities(f, a)
    assert abs(p[~np.eye(n, dtype=bool)].mean() - D) <= 1e-6
    assert abs(a.achieved_density - D) <= 1e-6


@given(st.floats(0.05, 0.9), st.floats(0.01, 0.09), st.integers(0, 2**32 - 1))
def test_alpha_increasing_in_density(D, gap, seed):
    rng = np.random.default_rng(seed)
    f = FitnessSpec("covariate", rng.uniform(0.1, 10, (5, 5)))
    assert calibrate_alpha(f, DensityTarget(D)).alpha < calibrate_alpha(f, DensityTarget(D + gap)).alpha


def test_fitness_validation():
    with pytest.raises(DomainError):
        FitnessSpec("covariate", -np.ones((3, 3)))
    with pytest.raises(DomainError):
        FitnessSpec.covariate(CovariateMatrix(np.full((3, 3), 0.5) - 1.0))
    with pytest.raises(DomainError):
        FitnessSpec.from_gdp(np.array([0.1, 0.2, 0.3]))
    assert FitnessSpec.from_gdp(np.array([10.0, 20.0, 30.0])).values[0, 1] == pytest.approx(math.log(30))


def test_sample_binary_extremes():
    n = 4
    full = sample_binary(np.ones((n, n)), 1)
    assert full.n_edges == n * (n - 1)
    assert sample_binary(np.zeros((n, n)), 1).n_edges == 0


def test_sample_binary_density_monte_carlo():
    rng = np.random.default_rng(3)
    p = np.full((5, 5), 0.5)
    d = np.mean([density(sample_binary(p, rng)) for _ in range(10_000)])
    assert abs(d - 0.5) < 0.02


def test_sample_binary_reproducible():
    p = np.full((6, 6), 0.3)
    assert np.array_equal(sample_binary(p, 5).adjacency, sample_binary(p, 5).adjacency)


def test_dc_values_direct():
    m = MarginalVector(np.array([3.0, 3.0, 4.0]), np.array([4.0, 2.0, 4.0]))
    z = BinaryStructure(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]))
    v = dc_gravity_values(m, CalibratedAlpha(1.0, 0.5, 0.5), z).values
    assert v[0, 1] == pytest.approx(0.7)
    assert np.count_nonzero(v) == 1


def test_dc_values_large_alpha_is_gravity(m3):
    z = BinaryStructure(1 - np.eye(3, dtype=np.int8))
    v = dc_gravity_values(m3, CalibratedAlpha(1e12, 0.5, 0.5), z).values
    assert np.allclose(v, gravity_fit(m3), atol=1e-10)


def test_dc_values_zero_total():
    with pytest.raises(ZeroTotal):
        dc_gravity_values(MarginalVector(np.zeros(2), np.zeros(2)), CalibratedAlpha(1.0, 0.5, 0.5),
                          BinaryStructure(np.zeros((2, 2), dtype=np.int8)))


def test_reconstruct_single_complete_sample(m3):
    # huge fitness relative to the target makes every probability numerically 1
    f = FitnessSpec("covariate", np.full((3, 3), 1.0))
    res = dc_gravity_reconstruct(m3, f, DensityTarget(1 - 1e-12), n_samples=1, rng_seed=0)
    z = res.ensemble[0][0]
    assert z.n_edges == 6
    expected = dc_gravity_values(m3, res.alpha, z).values
    assert np.allclose(res.point_estimate, expected)


def test_reconstruct_density_and_mean(x3, m3):
    D = density(binarize(x3))
    f = FitnessSpec.marginal_product(m3)
    res = dc_gravity_reconstruct(m3, f, DensityTarget(D), n_samples=5000, rng_seed=1)
    dens = np.array([density(z) for z, _ in res.ensemble])
    # binomial bound on the mean density, 4 sigma
    var = (res.probabilities * (1 - res.probabilities))[~np.eye(3, dtype=bool)].sum() / 36
    assert abs(dens.mean() - D) <= 4 * math.sqrt(var / 5000)
    assert np.allclose(res.point_estimate, res.expected_values, atol=4 * res.edge_values.max() / math.sqrt(5000))
    for z, w in res.ensemble[:50]:
        assert np.all((w.values > 0) == (z.adjacency > 0))


def test_reconstruct_error_shrinks_with_samples(m3):
    f = FitnessSpec.marginal_product(m3)
    errs = []
    for k in (100, 10_000):
        res = dc_gravity_reconstruct(m3, f, DensityTarget(0.5), n_samples=k, rng_seed=2)
        errs.append(np.abs(res.point_estimate - res.expected_values).max())
    assert errs[1] < errs[0]


def test_reconstruct_independent_of_workers(m3):
    f = FitnessSpec.marginal_product(m3)
    a = dc_gravity_reconstruct(m3, f, DensityTarget(0.5), n_samples=40, rng_seed=9, workers=1)
    b = dc_gravity_reconstruct(m3, f, DensityTarget(0.5), n_samples=40, rng_seed=9, workers=4)
    assert np.array_equal(a.point_estimate, b.point_estimate)
