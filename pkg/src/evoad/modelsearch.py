"""Architecture search: one independent genome population per subspace.

Mutation picks one of three moves (channel width, encoder length, window
size); crossover either swaps a single layer or exchanges the parents'
lengths.  Both always hand back genomes with an intact channel chain.
Fitness is the negated size-weighted train/validation loss of a freshly
initialized and briefly trained model, and selection keeps the fittest
individuals plus a few of the most structurally distant ones to preserve
population diversity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .data import make_windows, split_train_val
from .errors import TrainingError
from .genetic import (EvolutionConfig, EvolutionResult, ScoredIndividual,
                      evolve, truncation_selector)
from .nn import (GenomeBounds, LayerSpec, ModelGenome, TrainedModel,
                 instantiate, train)
from .parallel import derive_seed
from .subspaces import weighted_validation_fitness


def _rebuild_chain(layers: list[LayerSpec], window_size: int) -> tuple[LayerSpec, ...]:
    """Force the adjacency chain: each in_channels follows its predecessor."""
    fixed = []
    prev = window_size
    for spec in layers:
        fixed.append(replace(spec, in_channels=prev))
        prev = spec.out_channels
    return tuple(fixed)


def mutate_model(genome: ModelGenome, bounds: GenomeBounds,
                 rng: np.random.Generator) -> ModelGenome:
    """Apply one of three mutation moves, sampled uniformly.

    0: re-draw one layer's out_channels between that layer's own channel
       endpoints, repairing the successor's in_channels;
    1: re-draw the encoder length, truncating the tail or appending layers
       whose widths grow by at most max_channel_growth per step;
    2: re-draw the window size, which feeds the first layer's in_channels.
    Sampled values clamp to the configured bounds.
    """
    move = int(rng.integers(0, 3))
    layers = list(genome.encoder_layers)

    if move == 0:
        l = int(rng.integers(0, len(layers)))
        lo, hi = sorted((layers[l].in_channels, layers[l].out_channels))
        c_new = bounds.clamp_channels(int(rng.integers(lo, hi + 1)))
        layers[l] = replace(layers[l], out_channels=c_new)
        return replace(genome, encoder_layers=_rebuild_chain(layers, genome.window_size))

    if move == 1:
        target = int(rng.integers(0, bounds.max_layers + 1))
        target = min(max(target, bounds.min_layers), bounds.max_layers)
        if target < len(layers):
            layers = layers[:target]
        else:
            template = layers[-1]
            while len(layers) < target:
                prev_oc = layers[-1].out_channels
                c_new = bounds.clamp_channels(
                    int(rng.integers(prev_oc, prev_oc + bounds.max_channel_growth + 1))
                )
                layers.append(replace(template, in_channels=prev_oc, out_channels=c_new))
        return replace(genome, encoder_layers=_rebuild_chain(layers, genome.window_size))

    w_new = int(rng.integers(1, bounds.max_window + 1))
    return replace(genome, window_size=w_new,
                   encoder_layers=_rebuild_chain(layers, w_new))


def crossover_models(f1: ModelGenome, f2: ModelGenome,
                     rng: np.random.Generator) -> tuple[ModelGenome, ModelGenome]:
    """Recombine two genomes, sampling one of two moves uniformly.

    0: swap one aligned encoder layer between the children and repair the
       channel chains around the swap point;
    1: exchange the encoder lengths: the longer parent's tail moves onto the
       shorter child, the longer child is truncated, and the boundary
       out_channels is reconciled with the shorter parent's latent width.
    Identical parents produce identical children under either move.
    """
    move = int(rng.integers(0, 2))
    l1, l2 = list(f1.encoder_layers), list(f2.encoder_layers)

    if move == 0:
        l = int(rng.integers(0, min(len(l1), len(l2))))
        l1[l], l2[l] = l2[l], l1[l]
        c1 = replace(f1, encoder_layers=_rebuild_chain(l1, f1.window_size))
        c2 = replace(f2, encoder_layers=_rebuild_chain(l2, f2.window_size))
        return c1, c2

    if len(l1) > len(l2):
        cut = len(l2)
        short_latent = l2[-1].out_channels
        new_1 = l1[:cut]
        new_1[-1] = replace(new_1[-1], out_channels=short_latent)
        new_2 = l2 + l1[cut:]
    else:
        cut = len(l1)
        short_latent = l1[-1].out_channels
        new_2 = l2[:cut]
        new_2[-1] = replace(new_2[-1], out_channels=short_latent)
        new_1 = l1 + l2[cut:]
    c1 = replace(f1, encoder_layers=_rebuild_chain(new_1, f1.window_size))
    c2 = replace(f2, encoder_layers=_rebuild_chain(new_2, f2.window_size))
    return c1, c2


def genome_distance(f_i: ModelGenome, f_j: ModelGenome) -> float:
    """Structural dissimilarity: layer-count gap plus relative channel gaps.

    Aligned encoder layers (common prefix) contribute |a - b| / min(a, b)
    on their out_channels; the length difference contributes its absolute
    value, making the distance symmetric and zero only for structurally
    identical genomes.
    """
    li, lj = f_i.encoder_layers, f_j.encoder_layers
    total = float(abs(len(li) - len(lj)))
    for a, b in zip(li, lj):
        ca, cb = a.out_channels, b.out_channels
        total += abs(ca - cb) / min(ca, cb)
    return total


def diversity_selector(n_elite: int, n_diverse: int
                       ) -> Callable[[list[ScoredIndividual]], list[ScoredIndividual]]:
    """Keep the n_elite fittest plus the n_diverse most distant from the best.

    Distance is genome_distance to the single best individual; ties break by
    higher fitness, then by lower index.  With n_diverse = 0 this is plain
    truncation selection.
    """
    if n_elite < 1:
        raise ValueError("n_elite must be >= 1")

    def select(scored: list[ScoredIndividual]) -> list[ScoredIndividual]:
        ranked = sorted(range(len(scored)), key=lambda i: (-scored[i].fitness, i))
        elite_idx = ranked[:n_elite]
        best = scored[elite_idx[0]]
        rest = ranked[n_elite:]
        rest_ranked = sorted(
            rest,
            key=lambda i: (-genome_distance(scored[i].solution, best.solution),
                           -scored[i].fitness, i),
        )
        chosen = elite_idx + rest_ranked[:n_diverse]
        return [scored[i] for i in chosen]

    return select


def model_fitness(genome: ModelGenome, train_windows: np.ndarray,
                  val_windows: np.ndarray, epochs: int, batch_size: int,
                  seed: int) -> float:
    """Train from fresh init and return the negated weighted loss; -inf on divergence."""
    weights = instantiate(genome, seed)
    model = TrainedModel(genome, weights)
    try:
        model = train(model, train_windows, epochs, batch_size, seed=seed)
    except TrainingError:
        return float("-inf")
    return weighted_validation_fitness(model, train_windows, val_windows)


@dataclass
class GenomeFitness:
    """Fitness hook over a subspace-projected series.

    Windows are rebuilt per genome because the window size is itself an
    evolved parameter; the chronological 80/20 split happens after
    windowing.
    """

    series: np.ndarray  # (rows, |subspace|), already projected
    stride: int
    epochs: int
    batch_size: int

    def __call__(self, genome: ModelGenome, seed: int) -> float:
        wd = make_windows(self.series, genome.window_size, self.stride)
        if wd.count < 5:
            return float("-inf")
        tr, va = split_train_val(wd)
        return model_fitness(genome, tr.windows, va.windows,
                             self.epochs, self.batch_size, seed)

    def run(self, task):
        genome, seed = task
        return self(genome, seed)


def random_genome(bounds: GenomeBounds, rng: np.random.Generator, kind: str,
                  kernel_size: int = 3, window_size: int | None = None,
                  learning_rate: float | None = None,
                  activation: str = "tanh") -> ModelGenome:
    """Draw a genome uniformly inside the bounds (log-uniform learning rate)."""
    n_layers = int(rng.integers(bounds.min_layers, bounds.max_layers + 1))
    w = window_size if window_size is not None else int(rng.integers(1, bounds.max_window + 1))
    if learning_rate is None:
        lo, hi = np.log(bounds.min_learning_rate), np.log(bounds.max_learning_rate)
        learning_rate = float(np.exp(rng.uniform(lo, hi)))
    layers = []
    prev = w
    for _ in range(n_layers):
        c = int(rng.integers(bounds.min_channels, bounds.max_channels + 1))
        layers.append(LayerSpec(kind, prev, c, kernel_size))
        prev = c
    return ModelGenome(encoder_layers=tuple(layers), window_size=w,
                       learning_rate=learning_rate, activation=activation)


@dataclass
class ModelSearchConfig:
    """Level configuration; genetic defaults follow the reference set-up."""

    population_size: int = 24
    generations: int = 16
    mutation_probability: float = 0.5
    crossover_probability: float = 0.5
    epochs: int = 5
    batch_size: int = 32
    stride: int = 1
    layer_kind: str = "fully_connected"
    kernel_size: int = 3
    activation: str = "tanh"
    learning_rate: float | None = None  # None: sampled log-uniformly per genome
    selection: str = "diversity"  # or "truncation"
    diverse_fraction: float = 0.25
    bounds: GenomeBounds = field(default_factory=GenomeBounds)


def evolve_models_for_subspace(series: np.ndarray, cfg: ModelSearchConfig,
                               seed: int, workers: int = 1,
                               log_path: str | Path | None = None,
                               level: str = "models"
                               ) -> tuple[ModelGenome, EvolutionResult]:
    """Evolve an architecture population on one subspace-projected series."""
    kernel = min(cfg.kernel_size, series.shape[1]) if cfg.layer_kind == "conv1d" else 1
    rng = np.random.default_rng(derive_seed(seed, 1))
    init = [
        random_genome(cfg.bounds, rng, cfg.layer_kind, kernel,
                      learning_rate=cfg.learning_rate, activation=cfg.activation)
        for _ in range(cfg.population_size)
    ]
    fitness = GenomeFitness(series=np.asarray(series, dtype=np.float64),
                            stride=cfg.stride, epochs=cfg.epochs,
                            batch_size=cfg.batch_size)

    if cfg.selection == "diversity":
        n_diverse = int(cfg.population_size * cfg.diverse_fraction)
        select_fn = diversity_selector(cfg.population_size - n_diverse, n_diverse)
    elif cfg.selection == "truncation":
        select_fn = truncation_selector(cfg.population_size)
    else:
        raise ValueError(f"unknown selection mode {cfg.selection!r}")

    def mutate(genome, rng):
        return mutate_model(genome, cfg.bounds, rng)

    result = evolve(
        init,
        crossover=crossover_models,
        mutate=mutate,
        fitness_fn=fitness,
        select_fn=select_fn,
        cfg=EvolutionConfig(
            population_size=cfg.population_size,
            generations=cfg.generations,
            mutation_probability=cfg.mutation_probability,
            crossover_probability=cfg.crossover_probability,
            seed=derive_seed(seed, 2),
        ),
        workers=workers,
        level=level,
        log_path=log_path,
    )
    return result.best.solution, result
