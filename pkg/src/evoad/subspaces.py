"""Evolution of feature-subspace partitions.

A partition holds a fixed number K of subspaces (feature-index sets); a
feature may sit in zero, one, or several subspaces.  The genetic operators
read from the parent partition and write into a fresh copy, so all draws
within one application see the original state.  Probability draws use
uniform [0, 1) throughout.  Operators may leave a subspace empty; callers
repair with repair_partition before any fitness evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from .data import make_windows, project_columns, split_train_val
from .errors import TrainingError
from .genetic import (EvolutionConfig, EvolutionResult, evolve,
                      truncation_selector)
from .nn import (LayerSpec, ModelGenome, TrainedModel, column_losses,
                 instantiate, loss, train)
from .parallel import derive_seed


@dataclass
class SubspacePartition:
    """An ordered list of K feature-index sets over n_features columns."""

    subspaces: list[set[int]]
    n_features: int

    def __post_init__(self):
        self.subspaces = [set(int(i) for i in s) for s in self.subspaces]
        for s in self.subspaces:
            for idx in s:
                if not 0 <= idx < self.n_features:
                    raise ValueError(f"feature index {idx} out of range [0, {self.n_features})")

    @property
    def k(self) -> int:
        return len(self.subspaces)

    def copy(self) -> "SubspacePartition":
        return SubspacePartition([set(s) for s in self.subspaces], self.n_features)

    def to_dict(self) -> dict:
        return {"n_features": self.n_features,
                "subspaces": [sorted(s) for s in self.subspaces]}

    @classmethod
    def from_dict(cls, d: dict) -> "SubspacePartition":
        return cls([set(s) for s in d["subspaces"]], d["n_features"])


def subspace_crossover(s1: SubspacePartition, s2: SubspacePartition,
                       rng: np.random.Generator) -> SubspacePartition:
    """Split-point recombination, one split per subspace index.

    For each index i a split gamma is drawn uniformly between the smallest
    and largest feature index present in either parent subspace; the child
    keeps the first parent's features strictly below gamma and the second
    parent's strictly above (the feature equal to gamma is dropped, so a
    child subspace can come out empty).
    """
    if s1.k != s2.k or s1.n_features != s2.n_features:
        raise ValueError("parents must have the same subspace count and feature universe")
    child: list[set[int]] = []
    for g1, g2 in zip(s1.subspaces, s2.subspaces):
        lo = min(min(g1), min(g2))
        hi = max(max(g1), max(g2))
        gamma = int(rng.integers(lo, hi + 1))
        child.append({k for k in g1 if k < gamma} | {k for k in g2 if k > gamma})
    return SubspacePartition(child, s1.n_features)


def moving_mutation(s: SubspacePartition, p_m: float,
                    rng: np.random.Generator) -> SubspacePartition:
    """With probability p_m per subspace, copy one of its features into the next one.

    The sampled feature stays in its source subspace; duplicate pruning is
    left to the vanishing mutation.  Draw order per subspace: gate first,
    then the feature choice (skipped when the source is empty).
    """
    if s.k < 2:
        raise ValueError("moving mutation needs at least two subspaces")
    out = s.copy()
    for i in range(s.k):
        if rng.random() < p_m:
            source = sorted(s.subspaces[i])
            if not source:
                continue
            kappa = source[int(rng.integers(0, len(source)))]
            out.subspaces[(i + 1) % s.k].add(kappa)
    return out


def vanishing_mutation(s: SubspacePartition,
                       rng: np.random.Generator) -> SubspacePartition:
    """Remove each feature occurrence with probability 1 - 1/C, C = how many subspaces hold it.

    A feature present in exactly one subspace is never removed.  Occurrence
    counts come from the input partition; features iterate in ascending
    order within each subspace.
    """
    counts: dict[int, int] = {}
    for sub in s.subspaces:
        for kappa in sub:
            counts[kappa] = counts.get(kappa, 0) + 1
    out = s.copy()
    for i in range(s.k):
        for kappa in sorted(s.subspaces[i]):
            if rng.random() > 1.0 / counts[kappa]:
                out.subspaces[i].discard(kappa)
    return out


def adding_mutation(s: SubspacePartition,
                    rng: np.random.Generator) -> SubspacePartition:
    """Offer every unused feature to each subspace with probability 1 - 1/K.

    A feature counts as unused when no subspace contains it.  With K = 1
    nothing is ever added.  Absent features iterate in ascending order, and
    for each one the subspaces are visited in order.
    """
    used: set[int] = set().union(*s.subspaces) if s.subspaces else set()
    absent = [f for f in range(s.n_features) if f not in used]
    out = s.copy()
    k = s.k
    for kappa in absent:
        for i in range(k):
            if rng.random() > 1.0 / k:
                out.subspaces[i].add(kappa)
    return out


def repair_partition(s: SubspacePartition,
                     rng: np.random.Generator) -> SubspacePartition:
    """Give every empty subspace one uniformly random feature.

    An empty subspace has no trainable model, so repair must run before any
    fitness evaluation.
    """
    if all(s.subspaces):
        return s
    out = s.copy()
    for i in range(out.k):
        if not out.subspaces[i]:
            out.subspaces[i].add(int(rng.integers(0, s.n_features)))
    return out


def correlation_matrix(values: np.ndarray) -> np.ndarray:
    """Pearson correlation between feature columns; constant features correlate 0."""
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(np.asarray(values, dtype=np.float64).T)
    corr = np.atleast_2d(corr)
    corr[~np.isfinite(corr)] = 0.0
    np.fill_diagonal(corr, 1.0)
    return corr


def correlation_clusters(values: np.ndarray, k: int) -> np.ndarray:
    """Average-linkage clustering of features into k groups, distance 1 - |corr|."""
    m = values.shape[1]
    if k < 1 or k > m:
        raise ValueError(f"need 1 <= k <= {m}, got {k}")
    if k == m:
        return np.arange(m, dtype=np.int64)
    corr = correlation_matrix(values)
    distance = 1.0 - np.abs(corr)
    np.fill_diagonal(distance, 0.0)
    condensed = squareform(distance, checks=False)
    tree = linkage(condensed, method="average")
    return fcluster(tree, t=k, criterion="maxclust").astype(np.int64) - 1


def _assignment_to_partition(assignment: np.ndarray, k: int) -> SubspacePartition:
    subs: list[set[int]] = [set() for _ in range(k)]
    for feature, cluster in enumerate(assignment):
        subs[int(cluster)].add(feature)
    return SubspacePartition(subs, n_features=len(assignment))


def init_population_correlation(train_values: np.ndarray, k: int, n_pop: int,
                                seed: int, reassign_probability: float = 0.2
                                ) -> list[SubspacePartition]:
    """Seed a population from correlation clustering plus per-individual noise.

    Every individual starts from the same average-linkage clustering of the
    features; each feature is then reassigned to a uniformly random subspace
    with the given probability, and empty subspaces are repaired.
    """
    base = correlation_clusters(train_values, k)
    rng = np.random.default_rng(seed)
    population = []
    for _ in range(n_pop):
        assignment = base.copy()
        mask = rng.random(len(assignment)) < reassign_probability
        assignment[mask] = rng.integers(0, k, size=int(mask.sum()))
        population.append(repair_partition(_assignment_to_partition(assignment, k), rng))
    return population


@dataclass
class ProxySettings:
    """Cheap fixed autoencoder used to score partitions: 3 fully-connected layers.

    Scores average over `restarts` independent initializations to damp
    init luck; an undercomplete width (channels < window rows) is what makes
    the proxy sensitive to how features are grouped.
    """

    channels: int = 16
    epochs: int = 3
    learning_rate: float = 0.01
    batch_size: int = 32
    restarts: int = 1


def proxy_genome(window_size: int, settings: ProxySettings) -> ModelGenome:
    c = settings.channels
    layers = (
        LayerSpec("fully_connected", window_size, c),
        LayerSpec("fully_connected", c, c),
        LayerSpec("fully_connected", c, c),
    )
    return ModelGenome(encoder_layers=layers, window_size=window_size,
                       learning_rate=settings.learning_rate)


def weighted_validation_fitness(model: TrainedModel, train_windows: np.ndarray,
                                val_windows: np.ndarray) -> float:
    """Negated size-weighted train/validation MSE; 0 is the best possible value."""
    n_t, n_v = train_windows.shape[0], val_windows.shape[0]
    d_t = loss(model, train_windows)
    d_v = loss(model, val_windows)
    return -(n_t * d_t + n_v * d_v) / (n_t + n_v)


@dataclass
class PartitionFitness:
    """Scores a partition by training one proxy autoencoder per subspace.

    Aggregation is per feature: each feature's score is the negated
    size-weighted train/validation loss of ITS column, averaged over the
    subspaces hosting it, and a feature hosted nowhere costs its variance
    (the loss of not modeling it at all).  Averaging per feature rather
    than per subspace keeps the score honest: padding a subspace with
    easy duplicate columns cannot dilute away a bad grouping.

    The proxy genome's shape does not depend on the subspace, so every
    proxy trains from the same fixed initializations (seeds 0..restarts-1):
    scores differ only through the grouping, never through init luck, and
    identical partitions always score identically.  Each hosting's estimate
    takes the elementwise MIN over restarts because the init distribution
    is heavy-tailed (an occasional stuck fit would otherwise drown the
    grouping signal).  Training divergence in any proxy scores the whole
    partition -inf.
    """

    train_windows: np.ndarray
    val_windows: np.ndarray
    settings: ProxySettings = field(default_factory=ProxySettings)

    def __call__(self, partition: SubspacePartition, seed: int) -> float:
        genome = proxy_genome(self.train_windows.shape[1], self.settings)
        n_t, n_v = self.train_windows.shape[0], self.val_windows.shape[0]
        per_feature: dict[int, list[float]] = {}
        for subspace in partition.subspaces:
            cols = sorted(subspace)
            x_t = project_columns(self.train_windows, cols)
            x_v = project_columns(self.val_windows, cols)
            restart_losses = []
            for restart in range(self.settings.restarts):
                model = TrainedModel(genome, instantiate(genome, restart), tuple(cols))
                try:
                    model = train(model, x_t, self.settings.epochs,
                                  self.settings.batch_size, seed=restart)
                except TrainingError:
                    return float("-inf")
                weighted = (n_t * column_losses(model, x_t)
                            + n_v * column_losses(model, x_v)) / (n_t + n_v)
                restart_losses.append(weighted)
            best_losses = np.min(restart_losses, axis=0)
            for col, col_loss in zip(cols, best_losses):
                per_feature.setdefault(col, []).append(float(col_loss))

        scores = []
        for feature in range(partition.n_features):
            if feature in per_feature:
                scores.append(-float(np.mean(per_feature[feature])))
            else:
                # unmodelled feature: the cost of reconstructing it by nothing
                var_t = float(self.train_windows[:, :, feature].var())
                var_v = float(self.val_windows[:, :, feature].var())
                scores.append(-(n_t * var_t + n_v * var_v) / (n_t + n_v))
        return float(np.mean(scores))

    # WorkerPool context protocol
    def run(self, task):
        partition, seed = task
        return self(partition, seed)


@dataclass
class SubspaceSearchConfig:
    """Level configuration; genetic defaults follow the reference set-up."""

    k_subspaces: int = 5
    population_size: int = 16
    generations: int = 10
    mutation_probability: float = 0.1
    crossover_probability: float = 0.1
    reassign_probability: float = 0.2
    window_size: int = 4
    stride: int = 1
    proxy: ProxySettings = field(default_factory=ProxySettings)


def evolve_subspace_partition(train_values: np.ndarray, cfg: SubspaceSearchConfig,
                              seed: int, workers: int = 1,
                              log_path: str | Path | None = None
                              ) -> tuple[SubspacePartition, EvolutionResult]:
    """Search for the best feature partition on (reduced) training data.

    The moving mutation self-gates at cfg.mutation_probability per subspace
    and the vanishing/adding mutations self-gate per feature occurrence, so
    the mutation pipeline runs on every offspring.  Selection is plain
    truncation elitism.
    """
    wd = make_windows(train_values, cfg.window_size, cfg.stride)
    tr, va = split_train_val(wd)
    fitness = PartitionFitness(tr.windows, va.windows, cfg.proxy)

    init = init_population_correlation(
        train_values, cfg.k_subspaces, cfg.population_size,
        derive_seed(seed, 1), cfg.reassign_probability,
    )

    def crossover(p1, p2, rng):
        return repair_partition(subspace_crossover(p1, p2, rng), rng)

    def mutate(s, rng):
        s = moving_mutation(s, cfg.mutation_probability, rng)
        s = vanishing_mutation(s, rng)
        s = adding_mutation(s, rng)
        return repair_partition(s, rng)

    result = evolve(
        init,
        crossover=crossover,
        mutate=mutate,
        fitness_fn=fitness,
        select_fn=truncation_selector(cfg.population_size),
        cfg=EvolutionConfig(
            population_size=cfg.population_size,
            generations=cfg.generations,
            mutation_probability=1.0,  # operators self-gate; see module docstring
            crossover_probability=cfg.crossover_probability,
            seed=derive_seed(seed, 2),
        ),
        workers=workers,
        level="subspaces",
        log_path=log_path,
    )
    return result.best.solution, result
