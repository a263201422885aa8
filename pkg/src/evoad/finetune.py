"""Non-gradient weight refinement of trained models.

Each generation perturbs the current anchor model's weights multiplicatively
and keeps the mutant with the fewest false positives on the (anomaly-free)
training windows: a window counts as a false positive when its
reconstruction error exceeds the mean error times a deviation factor.  When
the anchor reaches zero false positives or stops improving for a fixed
number of generations, it is retained for the ensemble and the search
re-anchors on the mutant whose weights lie farthest from it.  There is no
crossover at this level.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nn import ModelWeights, TrainedModel, reconstruction_errors
from .parallel import WorkerPool, evaluation_seed


@dataclass
class FineTuneConfig:
    """Defaults follow the reference set-up (population 24, 64 generations)."""

    population_size: int = 24
    generations: int = 64
    mutation_probability: float = 0.02
    mutation_power: float = 1.0 / 256.0
    deviation_factor: float = 2.0
    stagnation_window: int = 5

    def __post_init__(self):
        if self.mutation_power <= 0:
            raise ValueError("mutation_power must be positive")
        if not 0.0 < self.mutation_probability < 1.0:
            raise ValueError("mutation_probability must lie in (0, 1)")
        if self.stagnation_window < 1:
            raise ValueError("stagnation_window must be >= 1")


def mutate_weights(weights: ModelWeights, p_m: float, tau: float,
                   rng: np.random.Generator) -> ModelWeights:
    """Multiply each selected scalar by (1 +- p_m * tau).

    Every scalar is selected independently with probability p_m; the sign is
    an independent fair coin per selected scalar.  Unselected scalars pass
    through unchanged.  Draw order per tensor: selection mask first, then
    signs.
    """
    step = p_m * tau

    def mutate_tensor(t: np.ndarray) -> np.ndarray:
        mask = rng.random(t.shape) < p_m
        signs = np.where(rng.random(t.shape) < 0.5, 1.0, -1.0)
        return t * (1.0 + mask * signs * step)

    return ModelWeights(
        encoder=[(mutate_tensor(w), mutate_tensor(b)) for w, b in weights.encoder],
        decoder=[(mutate_tensor(w), mutate_tensor(b)) for w, b in weights.decoder],
    )


def count_false_positives(model: TrainedModel, windows: np.ndarray, c: float) -> int:
    """Windows whose reconstruction error exceeds c times the mean error.

    Training data is assumed anomaly-free, so every flagged window is a
    false positive.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.shape[0] == 0:
        raise ValueError("false-positive count needs a non-empty window set")
    errors = reconstruction_errors(model, windows)
    threshold = c * errors.mean()
    return int((errors > threshold).sum())


def weight_distance(f_i: TrainedModel, f_j: TrainedModel) -> float:
    """Sum of per-layer Euclidean norms of the weight differences.

    Both models must share a genome (fine-tuning never alters architecture).
    """
    if f_i.genome.to_dict() != f_j.genome.to_dict():
        raise ValueError("weight distance requires identical genomes")
    total = 0.0
    for (w1, b1), (w2, b2) in zip(f_i.weights.encoder + f_i.weights.decoder,
                                  f_j.weights.encoder + f_j.weights.decoder):
        total += float(np.sqrt(((w1 - w2) ** 2).sum() + ((b1 - b2) ** 2).sum()))
    return total


@dataclass
class _FalsePositiveContext:
    """Worker-side context: counts false positives for candidate weights."""

    genome_doc: dict
    subspace: tuple[int, ...] | None
    windows: np.ndarray
    deviation_factor: float

    def run(self, weights: ModelWeights) -> int:
        from .nn import ModelGenome
        model = TrainedModel(ModelGenome.from_dict(self.genome_doc), weights, self.subspace)
        return count_false_positives(model, self.windows, self.deviation_factor)


@dataclass
class FineTuneRecord:
    model: TrainedModel
    false_positives: int
    generation: int  # 1-based generation at which the model converged


@dataclass
class GenerationRecord:
    generation: int
    best_fp: int
    re_anchored: bool


@dataclass
class FineTuneResult:
    retained: list[FineTuneRecord]
    history: list[GenerationRecord]

    @property
    def best(self) -> FineTuneRecord:
        """Lowest false-positive count; ties go to the latest convergence."""
        min_fp = min(r.false_positives for r in self.retained)
        candidates = [r for r in self.retained if r.false_positives == min_fp]
        return max(candidates, key=lambda r: r.generation)

    @property
    def first_convergence(self) -> int | None:
        for rec in self.history:
            if rec.re_anchored:
                return rec.generation
        return None


def fine_tune(best: TrainedModel, train_windows: np.ndarray, cfg: FineTuneConfig,
              seed: int, workers: int = 1,
              log_path: str | Path | None = None) -> FineTuneResult:
    """Refine a trained model's weights by evolutionary search on false positives.

    Per generation, population_size mutants of the anchor are scored; the
    anchor survives unless a mutant matches or beats it, so the anchor's
    false-positive count never increases between re-anchoring events.  On
    convergence (zero false positives, or no change across the stagnation
    window) the anchor joins the retained set and the search re-anchors on
    the mutant farthest from it in weight space.
    """
    train_windows = np.asarray(train_windows, dtype=np.float64)
    context = _FalsePositiveContext(
        genome_doc=best.genome.to_dict(),
        subspace=best.subspace,
        windows=train_windows,
        deviation_factor=cfg.deviation_factor,
    )
    anchor = TrainedModel(best.genome, best.weights.copy(), best.subspace)
    anchor_fp = count_false_positives(anchor, train_windows, cfg.deviation_factor)

    retained: list[FineTuneRecord] = []
    history: list[GenerationRecord] = []
    lineage: list[int] = []  # anchor FP per generation since the last re-anchor
    log_file = open(log_path, "a", encoding="utf-8") if log_path is not None else None

    try:
        with WorkerPool(workers, context) as pool:
            for g in range(cfg.generations):
                generation = g + 1
                mutants = [
                    mutate_weights(
                        anchor.weights, cfg.mutation_probability, cfg.mutation_power,
                        np.random.default_rng(evaluation_seed(seed, g, i)),
                    )
                    for i in range(cfg.population_size)
                ]
                fps = pool.map(mutants)

                best_i = int(np.argmin(fps))
                # The anchor survives unless some mutant matches or beats it,
                # so FP never increases within a lineage; on ties the lowest
                # mutant index wins.
                if fps[best_i] <= anchor_fp:
                    anchor = TrainedModel(best.genome, mutants[best_i], best.subspace)
                    anchor_fp = int(fps[best_i])

                stagnated = (
                    len(lineage) >= cfg.stagnation_window
                    and all(fp == anchor_fp for fp in lineage[-cfg.stagnation_window:])
                )
                converged = anchor_fp == 0 or stagnated
                history.append(GenerationRecord(generation, anchor_fp, converged))
                if log_file is not None:
                    log_file.write(json.dumps({
                        "generation": generation,
                        "best_fp": anchor_fp,
                        "re_anchored": converged,
                    }) + "\n")
                    log_file.flush()

                if converged:
                    retained.append(FineTuneRecord(anchor, anchor_fp, generation))
                    distances = [
                        weight_distance(anchor, TrainedModel(best.genome, m, best.subspace))
                        for m in mutants
                    ]
                    far_i = int(np.argmax(distances))
                    anchor = TrainedModel(best.genome, mutants[far_i], best.subspace)
                    anchor_fp = int(fps[far_i])
                    lineage = []
                else:
                    lineage.append(anchor_fp)
    finally:
        if log_file is not None:
            log_file.close()

    if not retained:
        retained.append(FineTuneRecord(anchor, anchor_fp, cfg.generations))
    return FineTuneResult(retained=retained, history=history)
