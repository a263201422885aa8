"""Command-line entry point.

Subcommands mirror the pipeline levels (synth, reduce, subspaces, models,
finetune, ensemble, evaluate, pipeline, bench).  Exit codes: 0 success,
1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import pipeline, serialize
from .config import RunConfig, load_config
from .data import load_csv, reduce, write_csv
from .errors import DataError, EvoadError
from .synthetic import SyntheticSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage errors to 1
        raise UsageError(message)


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=str, default=None, help="flat key=value config file")
    sub.add_argument("--seed", type=int, default=None, help="override run.seed")
    sub.add_argument("--workers", type=int, default=None, help="override run.workers")
    sub.add_argument("--out", type=str, default=None, help="override run.out_dir")


def build_parser() -> _Parser:
    parser = _Parser(prog="evoad",
                     description="evolve autoencoder ensembles for anomaly detection")
    commands = parser.add_subparsers(dest="command")

    synth = commands.add_parser("synth", help="generate the synthetic benchmark CSVs")
    _add_common(synth)
    synth.add_argument("--features", type=int, default=8)
    synth.add_argument("--length", type=int, default=20_000)
    synth.add_argument("--test-length", type=int, default=5_000)
    synth.add_argument("--rate", type=float, default=0.10)

    for name, help_text in (
        ("reduce", "dump the median-reduced training series as CSV"),
        ("subspaces", "run the pipeline through subspace evolution"),
        ("models", "run the pipeline through model evolution"),
        ("finetune", "run the pipeline through non-gradient fine-tuning"),
        ("ensemble", "run the pipeline through ensemble calibration"),
        ("evaluate", "score a calibrated ensemble on the test CSV"),
        ("pipeline", "run every level end to end"),
    ):
        sub = commands.add_parser(name, help=help_text)
        _add_common(sub)

    bench = commands.add_parser("bench", help="speedup/scaleup study of parallel evaluation")
    _add_common(bench)
    bench.add_argument("--worker-counts", type=str, default="1,2,4")
    bench.add_argument("--population", type=int, default=16)

    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg


def _cmd_synth(args) -> int:
    cfg = _resolve_config(args)
    spec = SyntheticSpec(features=args.features, length=args.length,
                         test_length=args.test_length, anomaly_rate=args.rate,
                         seed=cfg.seed)
    train_path, test_path = pipeline.write_synthetic(spec, cfg.out_dir)
    print(f"wrote {train_path} and {test_path}")
    return EXIT_OK


def _cmd_reduce(args) -> int:
    cfg = _resolve_config(args)
    if not cfg.train_csv:
        raise UsageError("data.train_csv must be set in the config")
    ds = load_csv(cfg.train_csv)
    reduced = reduce(ds, cfg.sigma)
    out = pipeline.run_directory(cfg)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "reduced.csv"
    write_csv(path, reduced.values, ds.feature_names, labels=reduced.labels)
    print(f"wrote {path} ({reduced.values.shape[0]} rows, sigma={cfg.sigma})")
    return EXIT_OK


def _cmd_level(args, through: str) -> int:
    cfg = _resolve_config(args)
    if not cfg.train_csv:
        raise UsageError("data.train_csv must be set in the config")
    manifest = pipeline.run_pipeline(cfg, through=through)
    run_dir = pipeline.run_directory(cfg)
    print(f"run directory: {run_dir}")
    for level, seconds in manifest.level_seconds.items():
        print(f"  {level}: {seconds:.2f}s")
    if manifest.metrics:
        print(json.dumps(manifest.metrics, sort_keys=True))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    run_dir = pipeline.run_directory(cfg)
    ensemble_path = run_dir / "ensemble.json"
    if not ensemble_path.exists():
        raise UsageError(f"no ensemble at {ensemble_path}; run the ensemble level first")
    if not cfg.test_csv:
        raise UsageError("data.test_csv must be set in the config")
    ensemble = serialize.load_ensemble(ensemble_path)
    test_ds = load_csv(cfg.test_csv, has_labels=True)
    values = test_ds.values
    if cfg.normalize:
        scaler = serialize.load_scaler(run_dir / "scaler.json")
        values = scaler.transform(values)
    report = pipeline.evaluate_ensemble(ensemble, values, test_ds.labels)
    (run_dir / "report.json").write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(json.dumps(report.to_dict(), sort_keys=True))
    return EXIT_OK


def _cmd_bench(args) -> int:
    cfg = _resolve_config(args)
    if not cfg.train_csv:
        raise UsageError("data.train_csv must be set in the config")
    try:
        counts = [int(part) for part in args.worker_counts.split(",") if part]
    except ValueError:
        raise UsageError(f"bad --worker-counts {args.worker_counts!r}") from None
    report = pipeline.bench_scaling(cfg, counts, population=args.population)
    out = pipeline.run_directory(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "bench.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                                    encoding="utf-8")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (try --help)")
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "reduce":
            return _cmd_reduce(args)
        if args.command in ("subspaces", "models", "finetune", "ensemble"):
            return _cmd_level(args, through=args.command)
        if args.command == "pipeline":
            return _cmd_level(args, through="ensemble")
        if args.command == "evaluate":
            return _cmd_evaluate(args)
        if args.command == "bench":
            return _cmd_bench(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError,) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:  # argparse --help exits 0
        code = exc.code if isinstance(exc.code, int) else 0
        return code
    except EvoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
