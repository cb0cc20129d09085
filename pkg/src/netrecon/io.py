"""Reading and writing networks, covariates, fits, ensembles and datasets.

Matrix CSV files hold ``n`` header-less rows of ``n`` values; the diagonal is
written as 0 and ignored on read. Floats are written with ``repr`` so a
round trip is exact. JSON manifests carry a ``schema_version``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import (CovariateMatrix, DensityTarget, TimeSeriesDataset, WeightedNetwork,
                   as_network)
from .entropy import IpfpResult

SCHEMA_VERSION = 1


def _fmt(v) -> str:
    return repr(float(v))


def write_matrix(path, a, zero_diagonal: bool = True) -> None:
    a = np.array(a, dtype=float)
    if zero_diagonal:
        np.fill_diagonal(a, 0.0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in a:
            w.writerow([_fmt(v) for v in row])


def read_matrix(path, zero_diagonal: bool = True) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    a = np.array(rows, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{path}: expected a square matrix, got shape {a.shape}")
    if zero_diagonal:
        np.fill_diagonal(a, 0.0)
    return a


def write_network(path, net) -> None:
    write_matrix(path, as_network(net).values)


def read_network(path) -> WeightedNetwork:
    return WeightedNetwork(read_matrix(path))


def write_covariate(path, c: CovariateMatrix) -> None:
    write_matrix(path, c.c)


def read_covariate(path) -> CovariateMatrix:
    return CovariateMatrix(read_matrix(path))


def write_edge_list(path, networks, time_labels=None) -> None:
    """Edge list ``t,src,dst,value`` with positive entries only."""
    networks = [as_network(x) for x in networks]
    labels = list(range(1, len(networks) + 1)) if time_labels is None else list(time_labels)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "src", "dst", "value"])
        for t, x in zip(labels, networks):
            src, dst = np.nonzero(x.values)
            for i, j in zip(src, dst):
                w.writerow([t, int(i), int(j), _fmt(x.values[i, j])])


def read_edge_list(path, n: int | None = None) -> tuple[list, list[WeightedNetwork]]:
    """Networks per time label, in order of first appearance; missing dyads are zero."""
    entries: dict = {}
    biggest = -1
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t", "src", "dst", "value"]:
            raise ValueError(f"{path}: header must be t,src,dst,value")
        for row in reader:
            t = row["t"]
            i, j, v = int(row["src"]), int(row["dst"]), float(row["value"])
            entries.setdefault(t, []).append((i, j, v))
            biggest = max(biggest, i, j)
    n = biggest + 1 if n is None else n
    nets = []
    for t, items in entries.items():
        a = np.zeros((n, n))
        for i, j, v in items:
            if i != j:
                a[i, j] += v
        nets.append(WeightedNetwork(a))
    return list(entries), nets


def _write_json(path, payload) -> None:
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path) -> dict:
    payload = json.loads(Path(path).read_text())
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported schema_version {version!r}")
    return payload


def write_ipfp_result(path, res: IpfpResult) -> None:
    """JSON with effects and beta inline; ``mu`` goes to ``<stem>_mu.csv`` next to it."""
    path = Path(path)
    side = path.with_name(path.stem + "_mu.csv")
    write_matrix(side, res.mu)
    _write_json(path, {
        "kind": "ipfp_result",
        "mu_file": side.name,
        "row_effects": [float(v) for v in res.row_effects],
        "col_effects": [float(v) for v in res.col_effects],
        "beta": None if res.beta is None else float(res.beta),
        "beta_identified": res.beta_identified,
        "iterations": int(res.iterations),
        "converged": bool(res.converged),
        "deviation": float(res.deviation),
        "history": [float(v) for v in res.history],
    })


def read_ipfp_result(path) -> IpfpResult:
    path = Path(path)
    d = read_json(path)
    mu = read_matrix(path.with_name(d["mu_file"]))
    return IpfpResult(
        mu=mu,
        row_effects=np.array(d["row_effects"]),
        col_effects=np.array(d["col_effects"]),
        beta=d["beta"],
        iterations=d["iterations"],
        converged=d["converged"],
        deviation=d["deviation"],
        history=tuple(d["history"]),
        beta_identified=d["beta_identified"],
    )


def write_ensemble(directory, networks, *, alpha=None, target: DensityTarget | float | None = None,
                   seed=None, extra: dict | None = None) -> Path:
    """One matrix CSV per sample plus ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    networks = [as_network(x) for x in networks]
    width = max(4, len(str(len(networks))))
    files = []
    for k, x in enumerate(networks):
        name = f"sample_{k:0{width}d}.csv"
        write_network(d / name, x)
        files.append(name)
    tv = target.value if isinstance(target, DensityTarget) else target
    _write_json(d / "manifest.json", {
        "kind": "ensemble",
        "alpha": None if alpha is None else float(alpha),
        "target": None if tv is None else float(tv),
        "seed": seed,
        "n_samples": len(networks),
        "files": files,
        **(extra or {}),
    })
    return d


def read_ensemble(directory) -> tuple[dict, list[WeightedNetwork]]:
    d = Path(directory)
    manifest = read_json(d / "manifest.json")
    return manifest, [read_network(d / f) for f in manifest["files"]]


def write_dataset(directory, ds: TimeSeriesDataset, extra: dict | None = None) -> Path:
    """Dataset directory: ``edges.csv``, ``gdp.csv`` (T rows of n) and ``manifest.json``.

    Covariate matrices, when present, go to ``covariate_<t>.csv``.
    """
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_edge_list(d / "edges.csv", ds.networks, ds.time_labels)
    payload = {
        "kind": "dataset",
        "n": ds.n,
        "T": ds.T,
        "time_labels": list(ds.time_labels),
        "node_labels": list(ds.node_labels) if ds.node_labels is not None else None,
        "edges": "edges.csv",
    }
    if ds.gdp is not None:
        with open(d / "gdp.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            for row in np.asarray(ds.gdp):
                w.writerow([_fmt(v) for v in row])
        payload["gdp"] = "gdp.csv"
    if ds.covariates is not None:
        names = []
        for t, c in zip(ds.time_labels, ds.covariates):
            name = f"covariate_{t}.csv"
            write_covariate(d / name, c)
            names.append(name)
        payload["covariates"] = names
    payload.update(extra or {})
    _write_json(d / "manifest.json", payload)
    return d


def read_dataset(directory) -> TimeSeriesDataset:
    d = Path(directory)
    manifest = read_json(d / "manifest.json")
    labels, nets = read_edge_list(d / manifest["edges"], manifest["n"])
    want = [str(t) for t in manifest["time_labels"]]
    by_label = dict(zip(labels, nets))
    empty = WeightedNetwork(np.zeros((manifest["n"], manifest["n"])))
    networks = [by_label.get(t, empty) for t in want]
    gdp = None
    if manifest.get("gdp"):
        with open(d / manifest["gdp"], newline="") as fh:
            gdp = np.array([[float(v) for v in row] for row in csv.reader(fh) if row])
    covs = None
    if manifest.get("covariates"):
        covs = [read_covariate(d / f) for f in manifest["covariates"]]
    return TimeSeriesDataset(
        networks=networks,
        time_labels=manifest["time_labels"],
        covariates=covs,
        gdp=gdp,
        node_labels=manifest.get("node_labels"),
    )
