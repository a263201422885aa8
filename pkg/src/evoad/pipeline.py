"""End-to-end orchestration: reduce, subspaces, models, fine-tune, ensemble.

A run directory is content-addressed by the config snapshot (seed included);
every level persists its artifacts there and is skipped on re-entry when its
outputs already exist, so a run can resume from any completed level.  Each
level consumes the previous level's artifacts from disk, which makes a
resumed run bit-identical to a fresh one.  All randomness flows through
seeds derived from the run seed, so results do not depend on worker count.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import serialize
from .config import RunConfig, config_snapshot, write_config
from .data import (FeatureScaler, TimeSeriesDataset, load_csv, make_windows,
                   project_columns, reduce, split_train_val)
from .ensemble import (EnsembleModel, MetricReport, ThresholdedModel,
                       calibrate_threshold, evaluate_f1, predict_series)
from .errors import EvoadError, PipelineError
from .finetune import fine_tune
from .modelsearch import GenomeFitness, evolve_models_for_subspace
from .nn import TrainedModel, instantiate, train
from .parallel import WorkerPool, derive_seed, evaluation_seed
from .subspaces import evolve_subspace_partition
from .synthetic import SyntheticSpec, generate_synthetic

LEVELS = ("data", "subspaces", "models", "finetune", "ensemble")

# Stable sub-seed tags, one per pipeline level.
_SEED_SUBSPACES = 11
_SEED_MODELS = 12
_SEED_FINAL_TRAIN = 13
_SEED_FINETUNE = 14


@dataclass
class RunManifest:
    config: dict[str, str]
    level_seconds: dict[str, float]
    artifacts: list[str]
    metrics: dict

    def to_dict(self) -> dict:
        return {"config": self.config, "level_seconds": self.level_seconds,
                "artifacts": self.artifacts, "metrics": self.metrics}


def run_hash(cfg: RunConfig) -> str:
    """Content address of a run: hash of the full config snapshot (seed included)."""
    canon = json.dumps(config_snapshot(cfg), sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def run_directory(cfg: RunConfig) -> Path:
    return Path(cfg.out_dir) / f"run-{run_hash(cfg)}"


@dataclass
class _PreparedData:
    train_values: np.ndarray        # normalized full-resolution training series
    reduced_values: np.ndarray      # normalized, median-reduced training series
    test_values: np.ndarray | None
    test_labels: np.ndarray | None
    feature_names: list[str]


def _prepare_data(cfg: RunConfig, run_dir: Path) -> _PreparedData:
    run_dir.mkdir(parents=True, exist_ok=True)
    train_ds = load_csv(cfg.train_csv)
    scaler_path = run_dir / "scaler.json"
    if cfg.normalize:
        if scaler_path.exists():
            scaler = serialize.load_scaler(scaler_path)
        else:
            scaler = FeatureScaler().fit(train_ds.values)
            serialize.save_scaler(scaler, scaler_path)
        train_values = scaler.transform(train_ds.values)
    else:
        train_values = train_ds.values

    reduced = reduce(TimeSeriesDataset(train_values, train_ds.feature_names), cfg.sigma)

    test_values = test_labels = None
    if cfg.test_csv:
        test_ds = load_csv(cfg.test_csv, has_labels=True)
        test_values = scaler.transform(test_ds.values) if cfg.normalize else test_ds.values
        test_labels = test_ds.labels
    return _PreparedData(train_values, reduced.values, test_values, test_labels,
                         train_ds.feature_names)


def run_pipeline(cfg: RunConfig, through: str = "ensemble") -> RunManifest:
    """Execute the pipeline levels in order, resuming over persisted artifacts.

    `through` limits execution to a prefix of (data, subspaces, models,
    finetune, ensemble); evaluation against the test set happens in the
    ensemble level whenever a test CSV is configured.
    """
    cfg.validate()
    if through not in LEVELS:
        raise ValueError(f"unknown level {through!r}")
    last = LEVELS.index(through)

    run_dir = run_directory(cfg)
    run_dir.mkdir(parents=True, exist_ok=True)
    write_config(cfg, run_dir / "config.snapshot")

    level_seconds: dict[str, float] = {}
    artifacts: list[str] = []
    metrics: dict = {}

    def track(path: Path) -> Path:
        rel = str(path.relative_to(run_dir))
        if rel not in artifacts:
            artifacts.append(rel)
        return path

    # -- level: data -------------------------------------------------------
    t0 = time.perf_counter()
    try:
        prepared = _prepare_data(cfg, run_dir)
    except EvoadError:
        raise
    except Exception as exc:
        raise PipelineError("data", str(exc)) from exc
    if cfg.normalize:
        track(run_dir / "scaler.json")
    level_seconds["data"] = time.perf_counter() - t0

    partition = None
    if last >= LEVELS.index("subspaces"):
        partition = _subspaces_level(cfg, run_dir, prepared, level_seconds, track)

    genomes = None
    if last >= LEVELS.index("models"):
        genomes = _models_level(cfg, run_dir, prepared, partition, level_seconds, track)

    tuned = None
    if last >= LEVELS.index("finetune"):
        tuned = _finetune_level(cfg, run_dir, prepared, partition, level_seconds, track)

    if last >= LEVELS.index("ensemble"):
        metrics = _ensemble_level(cfg, run_dir, prepared, partition, level_seconds, track)

    manifest = RunManifest(config=config_snapshot(cfg), level_seconds=level_seconds,
                           artifacts=artifacts, metrics=metrics)
    (run_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def _subspaces_level(cfg, run_dir, prepared, level_seconds, track):
    path = run_dir / "partition.json"
    t0 = time.perf_counter()
    if not path.exists():
        try:
            partition, _ = evolve_subspace_partition(
                prepared.reduced_values, cfg.subspaces,
                seed=derive_seed(cfg.seed, _SEED_SUBSPACES),
                workers=cfg.workers,
                log_path=run_dir / "subspaces.log.jsonl",
            )
        except EvoadError as exc:
            raise PipelineError("subspaces", str(exc)) from exc
        serialize.save_partition(partition, path)
    level_seconds["subspaces"] = time.perf_counter() - t0
    track(path)
    return serialize.load_partition(path)


def _models_level(cfg, run_dir, prepared, partition, level_seconds, track):
    t0 = time.perf_counter()
    genomes = []
    for i, subspace in enumerate(partition.subspaces):
        path = run_dir / f"subspace{i}.genome.json"
        if not path.exists():
            series = project_columns(prepared.reduced_values, sorted(subspace))
            try:
                best, _ = evolve_models_for_subspace(
                    series, cfg.models,
                    seed=derive_seed(cfg.seed, _SEED_MODELS, i),
                    workers=cfg.workers,
                    log_path=run_dir / f"models{i}.log.jsonl",
                    level=f"models/{i}",
                )
            except EvoadError as exc:
                raise PipelineError("models", f"subspace {i}: {exc}") from exc
            serialize.save_genome(best, path)
        genomes.append(serialize.load_genome(track(path)))
    level_seconds["models"] = time.perf_counter() - t0
    return genomes


def _training_windows(cfg, prepared, subspace, window_size):
    series = project_columns(prepared.train_values, sorted(subspace))
    wd = make_windows(series, window_size, cfg.final_stride)
    return split_train_val(wd)


def _finetune_level(cfg, run_dir, prepared, partition, level_seconds, track):
    t0 = time.perf_counter()
    tuned = []
    for i, subspace in enumerate(partition.subspaces):
        weights_path = run_dir / f"subspace{i}.finetuned.weights.bin"
        genome = serialize.load_genome(run_dir / f"subspace{i}.genome.json")
        if not weights_path.exists():
            tr, _ = _training_windows(cfg, prepared, subspace, genome.window_size)
            cols = tuple(sorted(subspace))
            try:
                seed = derive_seed(cfg.seed, _SEED_FINAL_TRAIN, i)
                model = TrainedModel(genome, instantiate(genome, seed), cols)
                model = train(model, tr.windows, cfg.final_epochs,
                              cfg.final_batch_size, seed=seed)
                result = fine_tune(
                    model, tr.windows, cfg.finetune,
                    seed=derive_seed(cfg.seed, _SEED_FINETUNE, i),
                    workers=cfg.workers,
                    log_path=run_dir / f"finetune{i}.log.jsonl",
                )
            except EvoadError as exc:
                raise PipelineError("finetune", f"subspace {i}: {exc}") from exc
            serialize.save_weights(result.best.model.weights, weights_path)
        tuned.append(serialize.load_weights(track(weights_path)))
    level_seconds["finetune"] = time.perf_counter() - t0
    return tuned


def _ensemble_level(cfg, run_dir, prepared, partition, level_seconds, track):
    t0 = time.perf_counter()
    ensemble_path = run_dir / "ensemble.json"
    if not ensemble_path.exists():
        members = []
        for i, subspace in enumerate(partition.subspaces):
            genome = serialize.load_genome(run_dir / f"subspace{i}.genome.json")
            weights = serialize.load_weights(run_dir / f"subspace{i}.finetuned.weights.bin")
            cols = tuple(sorted(subspace))
            model = TrainedModel(genome, weights, cols)
            _, va = _training_windows(cfg, prepared, subspace, genome.window_size)
            try:
                threshold = calibrate_threshold(model, va.windows, cfg.threshold_percentile)
            except EvoadError as exc:
                raise PipelineError("ensemble", f"subspace {i}: {exc}") from exc
            members.append(ThresholdedModel(model=model, threshold=threshold))
        serialize.save_ensemble(EnsembleModel(members, partition), ensemble_path)
    ensemble = serialize.load_ensemble(track(ensemble_path))

    metrics: dict = {}
    if prepared.test_values is not None:
        report_path = run_dir / "report.json"
        if report_path.exists():
            metrics = json.loads(report_path.read_text(encoding="utf-8"))
        else:
            report = evaluate_ensemble(ensemble, prepared.test_values,
                                       prepared.test_labels)
            metrics = report.to_dict()
            report_path.write_text(json.dumps(metrics, sort_keys=True, indent=2) + "\n",
                                   encoding="utf-8")
        track(report_path)
    level_seconds["ensemble"] = time.perf_counter() - t0
    return metrics


def evaluate_ensemble(ensemble: EnsembleModel, test_values: np.ndarray,
                      test_labels: np.ndarray) -> MetricReport:
    """Point-wise metrics of an ensemble over a labelled test series."""
    votes = predict_series(ensemble, test_values)
    return evaluate_f1(votes, test_labels)


def write_synthetic(spec: SyntheticSpec, out_dir: str | Path) -> tuple[Path, Path]:
    """Generate the synthetic benchmark and write train/test CSVs."""
    from .data import write_csv

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, test = generate_synthetic(spec)
    train_path = out / "train.csv"
    test_path = out / "test.csv"
    write_csv(train_path, train.values, train.feature_names)
    write_csv(test_path, test.values, test.feature_names, labels=test.labels)
    return train_path, test_path


# --------------------------------------------------------------------------
# scalability bench
# --------------------------------------------------------------------------

@dataclass
class _GenomeEvalContext:
    fitness: GenomeFitness

    def run(self, task):
        genome, seed = task
        return self.fitness(genome, seed)


def _timed_evaluation(context, tasks, workers: int) -> tuple[float, list]:
    with WorkerPool(workers, context) as pool:
        t0 = time.perf_counter()
        results = pool.map(tasks)
        elapsed = time.perf_counter() - t0
    return elapsed, results


def bench_scaling(cfg: RunConfig, worker_counts: list[int],
                  population: int = 16, scaleup_base: int = 4) -> dict:
    """Time the parallel fitness-evaluation phases at several worker counts.

    Speedup compares a fixed population against the 1-worker wall time;
    scaleup grows the population with the workers (base population at 1
    worker, base*w at w workers) where an ideal system stays at 1.0.
    Fitness values are checked to be identical across worker counts.
    """
    if len(worker_counts) < 2:
        raise ValueError("need at least two worker counts")
    cfg.validate()
    prepared = _prepare_data(cfg, run_directory(cfg))

    rng = np.random.default_rng(derive_seed(cfg.seed, 21))
    from .modelsearch import random_genome
    kind = cfg.models.layer_kind
    kernel = min(cfg.models.kernel_size, prepared.reduced_values.shape[1])
    genomes = [
        random_genome(cfg.bounds, rng, kind, kernel,
                      learning_rate=cfg.models.learning_rate,
                      activation=cfg.models.activation)
        for _ in range(population * max(max(worker_counts) // max(scaleup_base, 1), 1)
                       * scaleup_base)
    ]
    fitness = GenomeFitness(series=prepared.reduced_values, stride=cfg.models.stride,
                            epochs=cfg.models.epochs, batch_size=cfg.models.batch_size)
    context = _GenomeEvalContext(fitness)

    def tasks(count: int) -> list:
        return [(genomes[i], evaluation_seed(cfg.seed, 0, i)) for i in range(count)]

    report: dict = {"population": population, "worker_counts": worker_counts,
                    "speedup": {}, "scaleup": {}, "wall_seconds": {}}
    baseline = None
    reference = None
    for w in worker_counts:
        elapsed, results = _timed_evaluation(context, tasks(population), w)
        report["wall_seconds"][str(w)] = elapsed
        if reference is None:
            reference = results
        elif results != reference:
            raise PipelineError("bench", "fitness values differ across worker counts")
        if w == 1 or baseline is None:
            baseline = elapsed if w == 1 else baseline
    if baseline is None:  # no 1-worker measurement requested; use the smallest
        smallest = min(worker_counts)
        baseline = report["wall_seconds"][str(smallest)] * smallest
    for w in worker_counts:
        report["speedup"][str(w)] = baseline / report["wall_seconds"][str(w)]

    base_elapsed, _ = _timed_evaluation(context, tasks(scaleup_base), 1)
    for w in worker_counts:
        elapsed, _ = _timed_evaluation(context, tasks(scaleup_base * w), w)
        report["scaleup"][str(w)] = base_elapsed / elapsed
    return report
