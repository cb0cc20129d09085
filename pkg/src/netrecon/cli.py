"""Command line interface: ``netrecon {generate,reconstruct,evaluate,horserace,plot}``.

Exit codes: 0 success, 2 invalid configuration, 3 method failure, 4 I/O
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .core import DensityTarget, ReconstructionResult, binarize, density
from .errors import ReconstructionError
from .harness.generator import PRESETS, GeneratorConfig, generate_series, preset
from .harness.horserace import METHODS, HorseraceConfig, read_report_csv, reconstruct, run_horserace
from .harness.plots import emit_plots
from .io import read_dataset, read_json, read_matrix, write_dataset, write_matrix, _write_json
from .metrics import METRIC_COLUMNS, evaluate

EXIT_OK, EXIT_CONFIG, EXIT_METHOD, EXIT_IO = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class MethodError(Exception):
    pass


class InputError(Exception):
    """An input file exists but cannot be read as the expected format."""


def _read(reader, path):
    try:
        return reader(path)
    except (ValueError, KeyError, IndexError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_json(path) -> dict:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return d


def _generator_config(d: dict) -> GeneratorConfig:
    d = dict(d)
    name = d.pop("preset", None)
    try:
        if name is not None:
            return preset(name, **d)
        return GeneratorConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _period(ds, label) -> int:
    if label is None:
        return ds.T - 1
    try:
        return ds.time_labels.index(str(label))
    except ValueError:
        raise ConfigError(f"no period {label!r}; available: {', '.join(ds.time_labels)}") from None


def _target(arg: str, truth) -> DensityTarget:
    if arg == "oracle":
        return DensityTarget(density(binarize(truth)))
    try:
        v = float(arg)
        if not 0 < v <= 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"--density must be 'oracle' or a number in (0, 1], got {arg!r}") from None
    return DensityTarget(v)


def cmd_generate(a) -> int:
    settings = _load_json(a.config) if a.config else {}
    if a.preset:
        settings["preset"] = a.preset
    flags = {"n": a.n, "T": a.T, "target_density": a.density, "persistence": a.persistence,
             "trend": a.trend, "weight_tail": a.weight_tail, "rng_seed": a.seed}
    settings.update({k: v for k, v in flags.items() if v is not None})
    cfg = _generator_config(settings)
    ds = generate_series(cfg)
    write_dataset(a.out, ds, extra={"generator": cfg.to_dict()})
    print(f"wrote n={ds.n}, T={ds.T} dataset to {a.out}")
    return EXIT_OK


def cmd_reconstruct(a) -> int:
    if a.method not in METHODS:
        raise ConfigError(f"unknown method {a.method!r}; choose from {', '.join(METHODS)}")
    ds = _read(read_dataset, a.input)
    k = _period(ds, a.t)
    target = _target(a.density, ds.networks[k])
    options = None
    if a.options:
        try:
            options = json.loads(a.options)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--options is not valid JSON ({exc})") from None
    try:
        res = reconstruct(a.method, ds, k, target, a.seed, options)
    except LookupError as exc:
        raise ConfigError(str(exc)) from None
    except (ReconstructionError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise MethodError(f"{a.method} failed: {exc}") from None
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "values.csv", res.values)
    files = {"values": "values.csv"}
    if res.probabilities is not None:
        write_matrix(out / "probabilities.csv", res.probabilities)
        files["probabilities"] = "probabilities.csv"
    _write_json(out / "manifest.json", {
        "kind": "reconstruction", "method": a.method, "t": ds.time_labels[k],
        "density": target.value, "seed": a.seed, "files": files,
        "info": {key: float(v) for key, v in res.info.items()},
    })
    print(f"{a.method} reconstruction of period {ds.time_labels[k]} written to {out}")
    return EXIT_OK


def cmd_evaluate(a) -> int:
    ds = _read(read_dataset, a.input)
    rec = Path(a.reconstruction)
    manifest = _read(read_json, rec / "manifest.json")
    if not isinstance(manifest.get("files"), dict) or "values" not in manifest["files"]:
        raise InputError(f"{rec}: manifest lists no values file")
    k = _period(ds, a.t if a.t is not None else manifest.get("t"))
    values = _read(read_matrix, rec / manifest["files"]["values"])
    probs = None
    if "probabilities" in manifest["files"]:
        probs = _read(read_matrix, rec / manifest["files"]["probabilities"])
    result = ReconstructionResult(manifest["method"], values, probs)
    target = _target(a.density if a.density else str(manifest["density"]), ds.networks[k])
    row = evaluate(result, ds.networks[k], target).as_row()
    cols = ("method", "t", "density") + METRIC_COLUMNS
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        w.writerow([manifest["method"], ds.time_labels[k], repr(target.value)]
                   + [repr(float(row[c])) for c in METRIC_COLUMNS])
    print(f"report written to {a.out}")
    return EXIT_OK


def cmd_horserace(a) -> int:
    d = _load_json(a.config)
    base = Path(a.config).parent
    if "dataset" in d and "generator" in d:
        raise ConfigError("give either 'dataset' or 'generator', not both")
    if "dataset" in d:
        ds = _read(read_dataset, base / d.pop("dataset"))
    else:
        ds = generate_series(_generator_config(d.pop("generator", {"preset": "reduced"})))
    if a.out:
        d["output_dir"] = a.out
    elif "output_dir" in d:
        d["output_dir"] = str(base / d["output_dir"])
    else:
        raise ConfigError("no output directory: set 'output_dir' in the config or pass --out")
    if a.workers:
        d["workers"] = a.workers
    try:
        cfg = HorseraceConfig.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    report = run_horserace(ds, cfg)
    failed = sum(c.status == "failed" for c in report.cells)
    print(f"{len(report.cells)} cells ({failed} failed); report in {cfg.output_dir}")
    return EXIT_OK


def cmd_plot(a) -> int:
    rows = []
    for path in a.report:
        rows.extend(_read(read_report_csv, path))
    if not rows:
        raise ConfigError("the report files contain no rows")
    files = emit_plots(rows, a.out)
    print(f"wrote {len(files)} files to {a.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netrecon", description="Reconstruct networks from marginals.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a synthetic dataset")
    g.add_argument("--out", required=True, help="dataset directory to create")
    g.add_argument("--config", help="JSON file with generator settings")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--n", type=int)
    g.add_argument("--T", type=int)
    g.add_argument("--density", type=float)
    g.add_argument("--persistence", type=float)
    g.add_argument("--trend", type=float)
    g.add_argument("--weight-tail", type=float)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("reconstruct", help="run one method on one period")
    r.add_argument("--method", required=True, help=", ".join(METHODS))
    r.add_argument("--input", required=True, help="dataset directory")
    r.add_argument("--density", default="oracle", help="'oracle' or a fixed value")
    r.add_argument("--t", help="period label (default: the last)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--options", help="JSON object of method settings")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_reconstruct)

    e = sub.add_parser("evaluate", help="score a reconstruction against the truth")
    e.add_argument("--reconstruction", required=True, help="directory written by 'reconstruct'")
    e.add_argument("--input", required=True, help="dataset directory")
    e.add_argument("--t", help="period label (default: the reconstructed one)")
    e.add_argument("--density", help="'oracle' or a fixed value (default: as reconstructed)")
    e.add_argument("--out", required=True, help="report CSV")
    e.set_defaults(func=cmd_evaluate)

    h = sub.add_parser("horserace", help="run the full battery")
    h.add_argument("--config", required=True, help="JSON file")
    h.add_argument("--out", help="output directory (overrides the config)")
    h.add_argument("--workers", type=int)
    h.set_defaults(func=cmd_horserace)

    pl = sub.add_parser("plot", help="turn report CSVs into figure data and SVG charts")
    pl.add_argument("--report", required=True, nargs="+")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MethodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_METHOD
    except (OSError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

if __name__ == "__main__":
    sys.exit(main())
