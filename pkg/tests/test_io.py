import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netrecon.core import CovariateMatrix, TimeSeriesDataset, WeightedNetwork, covariate_gdp_pair
from netrecon.entropy import ipfp_fit
from netrecon.io import (read_covariate, read_dataset, read_edge_list, read_ensemble,
                         read_ipfp_result, read_json, read_matrix, read_network, write_covariate,
                         write_dataset, write_edge_list, write_ensemble, write_ipfp_result,
                         write_matrix, write_network)

from conftest import X3


def test_matrix_layout(tmp_path, x3):
    path = tmp_path / "x.csv"
    write_network(path, x3)
    lines = path.read_text().splitlines()
    assert lines[0] == "0.0,2.0,1.0"
    assert len(lines) == 3
    assert np.array_equal(read_network(path).values, X3)


def test_diagonal_ignored_on_read(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("7,1\n2,9\n")
    assert read_matrix(path).tolist() == [[0.0, 1.0], [2.0, 0.0]]
    assert read_matrix(path, zero_diagonal=False)[0, 0] == 7.0


def test_non_square_rejected(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("1,2,3\n4,5,6\n")
    with pytest.raises(ValueError):
        read_matrix(path)


@given(st.integers(1, 7), st.integers(0, 2**32 - 1))
def test_matrix_round_trip_bit_exact(n, seed):
    import tempfile
    from pathlib import Path
    rng = np.random.default_rng(seed)
    a = rng.exponential(1.0, (n, n)) * 10.0 ** rng.integers(-300, 300, (n, n))
    np.fill_diagonal(a, 0.0)
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "m.csv"
        write_matrix(path, a)
        assert np.array_equal(read_matrix(path), a)


def test_covariate_round_trip(tmp_path):
    c = covariate_gdp_pair([1.5, 2.5, 4.0])
    write_covariate(tmp_path / "c.csv", c)
    back = read_covariate(tmp_path / "c.csv")
    assert isinstance(back, CovariateMatrix)
    assert np.array_equal(back.c, c.c)


def test_edge_list_round_trip(tmp_path, x3):
    other = WeightedNetwork(X3.T * 0.1)
    path = tmp_path / "edges.csv"
    write_edge_list(path, [x3, other], ["2020", "2021"])
    lines = path.read_text().splitlines()
    assert lines[0] == "t,src,dst,value"
    assert len(lines) == 1 + 4 + 4
    labels, nets = read_edge_list(path)
    assert labels == ["2020", "2021"]
    assert np.array_equal(nets[0].values, X3)
    assert np.array_equal(nets[1].values, X3.T * 0.1)


def test_edge_list_bad_header(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        read_edge_list(path)


def test_edge_list_explicit_size(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("t,src,dst,value\n1,0,1,2.5\n")
    _, nets = read_edge_list(path, n=4)
    assert nets[0].n == 4 and nets[0].values[0, 1] == 2.5


def test_ipfp_result_round_trip(tmp_path, m3):
    res = ipfp_fit(m3)
    path = tmp_path / "fit.json"
    write_ipfp_result(path, res)
    assert (tmp_path / "fit_mu.csv").exists()
    back = read_ipfp_result(path)
    assert np.array_equal(back.mu, res.mu)
    assert np.array_equal(back.row_effects, res.row_effects)
    assert back.history == tuple(res.history)
    assert back.converged == res.converged and back.iterations == res.iterations


def test_ensemble_round_trip(tmp_path, x3):
    nets = [x3, WeightedNetwork(X3 * 2)]
    write_ensemble(tmp_path / "ens", nets, alpha=0.5, target=0.6, seed=3)
    manifest, back = read_ensemble(tmp_path / "ens")
    assert manifest["schema_version"] == 1
    assert manifest["n_samples"] == 2 and manifest["alpha"] == 0.5 and manifest["seed"] == 3
    assert all(np.array_equal(a.values, b.values) for a, b in zip(nets, back))


def test_schema_version_checked(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(ValueError):
        read_json(path)


def test_dataset_round_trip(tmp_path, x3):
    empty = WeightedNetwork(np.zeros((3, 3)))
    ds = TimeSeriesDataset(
        networks=[x3, empty, WeightedNetwork(X3 * 3.3)],
        time_labels=["a", "b", "c"],
        covariates=[covariate_gdp_pair([1.0, 2.0, 3.0])] * 3,
        gdp=np.array([[1.0, 2.0, 3.0], [1.1, 2.1, 3.1], [1.2, 2.2, 3.2]]),
        node_labels=["x", "y", "z"],
    )
    write_dataset(tmp_path / "ds", ds)
    back = read_dataset(tmp_path / "ds")
    assert back.time_labels == ("a", "b", "c")
    assert back.node_labels == ("x", "y", "z")
    # a period without edges has no rows in the edge list but survives
    assert np.all(back.networks[1].values == 0)
    for a, b in zip(ds.networks, back.networks):
        assert np.array_equal(a.values, b.values)
    assert np.array_equal(back.gdp, ds.gdp)
    assert np.array_equal(back.covariates[2].c, ds.covariates[2].c)
