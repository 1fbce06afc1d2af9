"""Command-line front end.

Subcommands: ``gen`` (write a synthetic stream to CSV), ``select``
(consistency-based hyperparameter search), ``run`` (stationary or stream
evaluation, reports written as JSON plus a per-step CSV), ``bench``
(incremental-vs-recompute slide cost) and ``version``.

stdout carries machine-readable results only; diagnostics go to stderr.
Exit codes: 0 on success, 1 for runtime/data failures, 2 for usage errors
and malformed specs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .errors import OkcError, SpecError
from .evaluation import RunConfig, run_stationary, run_stream, slide_benchmark
from .selection import SelectionConfig, select
from .streams import DatasetSchema, DriftStreamSpec, gen_stream, load_csv, save_csv


def _package_version() -> str:
    try:
        return version("okc")
    except PackageNotFoundError:
        return "0.0.0+unpackaged"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="okc",
        description="Streaming one-class classification with sliding-window regularized kernel models.",
        epilog="OKC_THREADS caps internal parallelism (default 1).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic labeled stream from a JSON spec")
    p_gen.add_argument("spec", help="path to a stream spec JSON document")
    p_gen.add_argument("out", help="CSV file to write (header: f1..fn,label)")

    grid_doc = (
        "consistency-based (lambda, sigma) selection on target samples; the grid "
        "spans the 17 decade lambdas 1e-8..1e8 and 20 sigmas between the minimum "
        "and maximum pairwise distance"
    )
    p_sel = sub.add_parser("select", help=grid_doc, description=grid_doc)
    p_sel.add_argument("data", help="CSV dataset path")
    _add_schema_flags(p_sel)
    p_sel.add_argument("--framework", choices=("boundary", "reconstruction"), default="boundary")
    p_sel.add_argument("--folds", type=int, default=5, help="cross-validation folds (default 5)")
    p_sel.add_argument("--sigma-thr", type=float, default=2.0,
                       help="consistency threshold width in std deviations (default 2)")
    p_sel.add_argument("--eta", type=float, default=0.05,
                       help="target rejection fraction (default 0.05)")
    p_sel.add_argument("--seed", type=int, default=0)

    p_run = sub.add_parser(
        "run",
        help="evaluate a model on a dataset (CSV) or generated stream (spec JSON)",
    )
    p_run.add_argument("input", help="CSV dataset, or a stream spec JSON to generate from")
    _add_schema_flags(p_run)
    # run-config flags default to SUPPRESS so explicit flags can be layered
    # over --config values over the built-in defaults
    sup = argparse.SUPPRESS
    p_run.add_argument("--config", default=None,
                       help="JSON file of run settings; flags given here override it")
    p_run.add_argument("--framework", choices=("boundary", "reconstruction"), default=sup,
                       help="(default boundary)")
    p_run.add_argument("--protocol", choices=("stream", "stationary"), default=sup,
                       help="prequential stream walk or repeated shuffled-split runs (default stream)")
    p_run.add_argument("--mode", choices=("sliding", "static"), default=sup,
                       help="stream protocol only: slide the window or train once (default sliding)")
    p_run.add_argument("--window", type=int, default=sup, help="sliding window size (default 150)")
    p_run.add_argument("--chunk", type=int, default=sup, help="slide chunk size (default 50)")
    p_run.add_argument("--eta", type=float, default=sup,
                       help="target rejection fraction (default 0.05)")
    p_run.add_argument("--lambda", dest="lam", type=float, default=sup,
                       help="regularization parameter (default 1.0; ignored when --sigma auto)")
    p_run.add_argument("--sigma", default=sup,
                       help="kernel width, or 'auto' for consistency-based selection (default auto)")
    p_run.add_argument("--runs", type=int, default=sup,
                       help="stationary protocol repetitions (default 1)")
    p_run.add_argument("--seed", type=int, default=sup, help="(default 0)")
    p_run.add_argument("--out", default=".", help="directory for the report JSON and step CSV")

    p_bench = sub.add_parser("bench", help="incremental vs full-recompute slide cost")
    p_bench.add_argument("--window", type=int, default=1000)
    p_bench.add_argument("--chunk", type=int, default=50)
    p_bench.add_argument("--dims", type=int, default=2)
    p_bench.add_argument("--slides", type=int, default=20)
    p_bench.add_argument("--seed", type=int, default=0)

    sub.add_parser("version", help="print the package version")
    return parser


def _add_schema_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delimiter", default=",", help="CSV delimiter (default ',')")
    p.add_argument("--label-column", default="-1",
                   help="label column index or (with --header) name; default -1, the last column")
    p.add_argument("--target-label", default=None,
                   help="raw label value mapped to target (+1); all rows are targets if omitted")
    p.add_argument("--header", action="store_true", help="first row is a header")
    p.add_argument("--normalize", action="store_true", help="min-max scale features to [0, 1]")


def _schema_from_args(args, path: str) -> DatasetSchema:
    col: int | str
    try:
        col = int(args.label_column)
    except ValueError:
        col = args.label_column
    return DatasetSchema(
        path=path,
        delimiter=args.delimiter,
        label_column=col,
        target_label=args.target_label,
        header=args.header,
        normalize=args.normalize,
    )


def _load_spec(path: str) -> DriftStreamSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed spec JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecError("spec JSON must be an object")
    known = {f.name for f in dataclasses.fields(DriftStreamSpec)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise SpecError(f"unknown spec field(s): {', '.join(unknown)}")
    spec = DriftStreamSpec(**doc)
    spec.validate()
    return spec


def _cmd_gen(args) -> int:
    try:
        spec = _load_spec(args.spec)
    except FileNotFoundError:
        print(f"spec file not found: {args.spec}", file=sys.stderr)
        return 1
    except SpecError as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return 2
    samples = gen_stream(spec)
    save_csv(samples, args.out)
    targets = sum(1 for s in samples if s.label == 1)
    print(json.dumps({
        "path": args.out,
        "total": len(samples),
        "targets": targets,
        "outliers": len(samples) - targets,
    }))
    return 0


def _cmd_select(args, parser) -> int:
    if args.folds < 2:
        parser.error("--folds must be >= 2")
    samples = load_csv(_schema_from_args(args, args.data))
    if args.target_label is not None:
        samples = [s for s in samples if s.label == 1]
    X = [s.features for s in samples]
    cfg = SelectionConfig(folds=args.folds, sigma_thr=args.sigma_thr, eta=args.eta)
    result = select(X, args.framework, cfg, seed=args.seed)
    print(json.dumps(result.to_json_dict()))
    return 0


RUN_DEFAULTS = {
    "protocol": "stream",
    "framework": "boundary",
    "mode": "sliding",
    "window": 150,
    "chunk": 50,
    "eta": 0.05,
    "lam": 1.0,
    "sigma": "auto",
    "runs": 1,
    "seed": 0,
}


def _layered_run_settings(args, parser) -> dict:
    """Built-in defaults, overridden by --config values, overridden by flags."""
    settings = dict(RUN_DEFAULTS)
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            parser.error(f"--config is not valid JSON: {exc}")
        if "lambda" in doc:
            doc["lam"] = doc.pop("lambda")
        unknown = sorted(set(doc) - set(RUN_DEFAULTS))
        if unknown:
            parser.error(f"unknown --config field(s): {', '.join(unknown)}")
        settings.update(doc)
    for key in RUN_DEFAULTS:
        if hasattr(args, key):  # SUPPRESS: present only when the flag was given
            settings[key] = getattr(args, key)
    return settings


def _cmd_run(args, parser) -> int:
    settings = _layered_run_settings(args, parser)
    sigma = settings["sigma"]
    if sigma != "auto":
        try:
            sigma = float(sigma)
        except (TypeError, ValueError):
            parser.error(f"--sigma must be a number or 'auto', got {settings['sigma']!r}")
    cfg = RunConfig(
        framework=settings["framework"],
        mode=settings["mode"],
        window=settings["window"],
        chunk=settings["chunk"],
        eta=settings["eta"],
        lam=settings["lam"],
        sigma=sigma,
        runs=settings["runs"],
        seed=settings["seed"],
    )
    path = Path(args.input)
    if path.suffix == ".json":
        samples = gen_stream(_load_spec(args.input))
    else:
        samples = load_csv(_schema_from_args(args, args.input))
    if settings["protocol"] == "stationary":
        report = run_stationary(samples, cfg)
        token = "stationary"
    else:
        report = run_stream(samples, cfg)
        token = cfg.mode
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{path.stem}_{cfg.framework}_{token}_{cfg.seed}"
    report.write_json(out_dir / f"{stem}.json")
    report.write_step_csv(out_dir / f"{stem}.csv")
    print(report.summary_line())
    return 0


def _cmd_bench(args, parser) -> int:
    if args.slides < 1:
        parser.error("--slides must be >= 1")
    if not 0 < args.chunk < args.window:
        parser.error("need 0 < --chunk < --window")
    print(json.dumps(slide_benchmark(
        window=args.window, chunk=args.chunk, dims=args.dims,
        slides=args.slides, seed=args.seed,
    )))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "select":
            return _cmd_select(args, parser)
        if args.command == "run":
            return _cmd_run(args, parser)
        if args.command == "bench":
            return _cmd_bench(args, parser)
        if args.command == "version":
            print(_package_version())
            return 0
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return 1
    except SpecError as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return 2
    except OkcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
