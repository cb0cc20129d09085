"""Run every reconstruction method on every period of a dataset and score it.

Each ``(method, t)`` cell draws its randomness from the substream
``(seed, method, t)``, so results do not depend on which methods run or in
which order. A method that raises is recorded as failed; methods that need
earlier periods are recorded as skipped where those are missing.
"""

from __future__ import annotations

import csv
import json
import math
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import (DensityTarget, ReconstructionResult, TimeSeriesDataset, binarize,
                    compute_marginals, covariate_gdp_pair, covariate_lag_log, density)
from ..entropy import ipfp_covariate_fit, ipfp_fit, poisson_edge_probabilities
from ..gravity import FitnessSpec, dc_gravity_reconstruct, gravity_fit
from ..hierarchical import HierarchicalConfig, hierarchical_reconstruct
from ..lasso import tau_search
from ..metrics import METRIC_COLUMNS, evaluate
from ..mindens import MindensConfig, mindens_best, mindens_run
from ..rng import substream
from ..tomogravity import TomogravityConfig, tomogravity_fit

METHODS = ("IPFP", "IPFP-GDP", "IPFP-LAG", "GRAVITY", "DC-GRAVITY", "DC-GRAVITY-GDP",
           "DC-GRAVITY-LAG", "TOMOGRAVITY", "LASSO", "H-ER", "H-FIT", "MINDENS")

# periods of history a method needs before it can run
LAGS = {"IPFP-GDP": 1, "IPFP-LAG": 2, "DC-GRAVITY-LAG": 1}

REPORT_COLUMNS = ("method", "t", "status", "density") + METRIC_COLUMNS + ("message",)


@dataclass(frozen=True)
class HorseraceConfig:
    """Which methods to run and how.

    ``density_source`` is ``"oracle"`` (the true density of each period) or
    a number in (0, 1] used for every period. ``method_options`` maps a
    method name to keyword settings, for instance
    ``{"H-ER": {"n_samples": 50}, "LASSO": {"grid_points": 30}}``.
    """

    methods: tuple[str, ...] = METHODS
    density_source: str | float = "oracle"
    output_dir: str | None = None
    rng_seed: int = 0
    workers: int = 1
    method_options: dict = field(default_factory=dict)

    def __post_init__(self):
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("methods must be non-empty")
        unknown = [m for m in methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {list(METHODS)}")
        object.__setattr__(self, "methods", methods)
        if self.density_source != "oracle":
            v = float(self.density_source)
            if not 0 < v <= 1:
                raise ValueError("a fixed density must lie in (0, 1]")
            object.__setattr__(self, "density_source", v)
        bad = set(self.method_options) - set(METHODS)
        if bad:
            raise ValueError(f"options given for unknown methods {sorted(bad)}")

    @classmethod
    def from_dict(cls, d: dict) -> "HorseraceConfig":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown horserace settings: {sorted(unknown)}")
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        return cls(**d)


@dataclass(frozen=True)
class CellReport:
    """Outcome of one method on one period."""

    method: str
    t: str
    status: str
    density: float
    metrics: dict
    message: str = ""

    def row(self) -> dict:
        r = {"method": self.method, "t": self.t, "status": self.status, "density": self.density}
        r.update({k: self.metrics.get(k, math.nan) for k in METRIC_COLUMNS})
        r["message"] = self.message
        return r


def _seed(base: int, method: str, t: int) -> int:
    return int(substream(base, method, t).integers(2**63 - 1))


def _target(ds: TimeSeriesDataset, k: int, cfg: HorseraceConfig) -> DensityTarget:
    if cfg.density_source == "oracle":
        return DensityTarget(density(binarize(ds.networks[k])))
    return DensityTarget(float(cfg.density_source))


def reconstruct(method: str, ds: TimeSeriesDataset, k: int, target: DensityTarget,
                seed: int = 0, options: dict | None = None) -> ReconstructionResult:
    """Reconstruct period ``k`` (0-based) of ``ds`` from its marginals.

    Only the marginals of period ``k`` are used, plus the covariates the
    method is built on: GDP, or the fully observed earlier periods for the
    lag methods. Covariate IPFP estimates its coefficient on period ``k-1``.
    """
    opts = dict(options or {})
    x = ds.networks[k]
    m = compute_marginals(x)
    need = LAGS.get(method, 0)
    if k < need:
        raise LookupError(f"{method} needs {need} earlier period(s)")
    if method in ("IPFP-GDP", "DC-GRAVITY-GDP") and ds.gdp is None:
        raise LookupError(f"{method} needs GDP covariates")
    info: dict = {}

    if method == "IPFP":
        r = ipfp_fit(m, **opts)
        return ReconstructionResult(method, r.mu, poisson_edge_probabilities(r))
    if method in ("IPFP-GDP", "IPFP-LAG"):
        if method == "IPFP-GDP":
            c, ref_c = covariate_gdp_pair(ds.gdp[k]), covariate_gdp_pair(ds.gdp[k - 1])
        else:
            off = opts.pop("offset", 1.0)
            c = covariate_lag_log(ds.networks[k - 1], off)
            ref_c = covariate_lag_log(ds.networks[k - 2], off)
        r = ipfp_covariate_fit(m, c, reference=(ds.networks[k - 1], ref_c), **opts)
        return ReconstructionResult(method, r.mu, poisson_edge_probabilities(r), info={"beta": r.beta})
    if method == "GRAVITY":
        return ReconstructionResult(method, gravity_fit(m))
    if method.startswith("DC-GRAVITY"):
        if method == "DC-GRAVITY":
            f = FitnessSpec.marginal_product(m)
        elif method == "DC-GRAVITY-GDP":
            f = FitnessSpec.from_gdp(ds.gdp[k])
        else:
            f = FitnessSpec.from_lag(ds.networks[k - 1], opts.pop("offset", 1.1))
        r = dc_gravity_reconstruct(m, f, target, rng_seed=seed, **opts)
        return ReconstructionResult(method, r.point_estimate, r.probabilities,
                                    info={"alpha": r.alpha.alpha})
    if method == "TOMOGRAVITY":
        r = tomogravity_fit(m, TomogravityConfig(**opts))
        return ReconstructionResult(method, r.mu, info={"iterations": r.iterations})
    if method == "LASSO":
        points = opts.pop("grid_points", None)
        grid = None
        if points is not None:
            from ..lasso import default_grid
            grid = default_grid(m, int(points))
        tau, mu = tau_search(m, target, grid=grid, **opts)
        return ReconstructionResult(method, mu, info={"tau": tau})
    if method in ("H-ER", "H-FIT"):
        model = "erdos_renyi" if method == "H-ER" else "fitness"
        workers = opts.pop("workers", 1)
        hc = HierarchicalConfig(target=target, probability_model=model, rng_seed=seed, **opts)
        r = hierarchical_reconstruct(m, hc, workers=workers)
        return ReconstructionResult(method, r.point_estimate, r.frequencies)
    if method == "MINDENS":
        opts.setdefault("restarts", 1)
        best = mindens_best(mindens_run(m, MindensConfig(rng_seed=seed, **opts)))
        return ReconstructionResult(method, best.network.values, info={"edges": best.edges})
    raise ValueError(f"unknown method {method!r}")


def _cell(ds, k, method, cfg) -> CellReport:
    t = ds.time_labels[k]
    target = _target(ds, k, cfg)
    need = LAGS.get(method, 0)
    if k < need:
        return CellReport(method, t, "skipped", target.value, {},
                          f"needs {need} earlier period(s)")
    if method in ("IPFP-GDP", "DC-GRAVITY-GDP") and ds.gdp is None:
        return CellReport(method, t, "skipped", target.value, {}, "dataset has no GDP")
    try:
        res = reconstruct(method, ds, k, target, _seed(cfg.rng_seed, method, k),
                          cfg.method_options.get(method))
        rep = evaluate(res, ds.networks[k], target)
    except Exception as exc:  # recorded, the race goes on
        last = traceback.format_exception_only(type(exc), exc)[-1].strip()
        return CellReport(method, t, "failed", target.value, {}, last)
    return CellReport(method, t, "ok", target.value, rep.as_row())


@dataclass(frozen=True)
class HorseraceReport:
    cells: tuple[CellReport, ...]
    methods: tuple[str, ...]
    time_labels: tuple[str, ...]

    def for_method(self, method: str) -> list[CellReport]:
        return [c for c in self.cells if c.method == method]

    def values(self, method: str, metric: str) -> np.ndarray:
        """Metric over the periods where ``method`` ran successfully."""
        return np.array([c.metrics[metric] for c in self.for_method(method) if c.status == "ok"])

    def summary(self) -> dict:
        """Per method and metric: mean, sd, se and the number of periods.

        For the value errors also the overall figures over all periods:
        ``L1 = sum_t L1_t`` and ``L2 = sqrt(sum_t L2_t^2)``.
        """
        out = {}
        for method in self.methods:
            cells = self.for_method(method)
            entry = {"ok": sum(c.status == "ok" for c in cells),
                     "skipped": sum(c.status == "skipped" for c in cells),
                     "failed": sum(c.status == "failed" for c in cells)}
            for metric in METRIC_COLUMNS:
                v = self.values(method, metric)
                v = v[np.isfinite(v)]
                if v.size == 0:
                    continue
                sd = float(v.std(ddof=1)) if v.size > 1 else math.nan
                entry[metric] = {"mean": float(v.mean()), "sd": sd,
                                 "se": sd / math.sqrt(v.size) if v.size > 1 else math.nan,
                                 "periods": int(v.size)}
            if "l1" in entry:
                entry["overall_l1"] = float(math.fsum(self.values(method, "l1")))
                entry["overall_l2"] = float(math.sqrt(math.fsum(self.values(method, "l2") ** 2)))
            out[method] = entry
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for c in self.cells:
                r = c.row()
                w.writerow([_cell_text(r[col]) for col in REPORT_COLUMNS])

    def write_summary(self, path) -> None:
        payload = {"schema_version": 1, "kind": "horserace_summary", "methods": self.summary()}
        Path(path).write_text(json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n")


def _cell_text(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_safe(o):
    if isinstance(o, dict):
        return {k: _json_safe(v) for k, v in o.items()}
    if isinstance(o, float) and not math.isfinite(o):
        return None
    return o


def read_report_csv(path) -> list[dict]:
    """Rows of a report CSV with metric columns as floats."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for col in ("density",) + METRIC_COLUMNS:
            r[col] = float(r[col])
    return rows


def run_horserace(ds: TimeSeriesDataset, cfg: HorseraceConfig) -> HorseraceReport:
    """Score every configured method on every period.

    Cells are laid out period by period in roster order. With
    ``cfg.output_dir`` set, ``report.csv`` and ``summary.json`` are written
    there.
    """
    order = [m for m in METHODS if m in cfg.methods]
    jobs = [(k, m) for k in range(ds.T) for m in order]
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            cells = tuple(ex.map(lambda j: _cell(ds, j[0], j[1], cfg), jobs))
    else:
        cells = tuple(_cell(ds, k, m, cfg) for k, m in jobs)
    report = HorseraceReport(cells, tuple(order), ds.time_labels)
    if cfg.output_dir is not None:
        d = Path(cfg.output_dir)
        d.mkdir(parents=True, exist_ok=True)
        report.write_csv(d / "report.csv")
        report.write_summary(d / "summary.json")
    return report
