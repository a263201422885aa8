"""Architecture search walkthrough: one genome population on one subspace.

Shows the three mutation moves and the two crossover moves on concrete
genomes, the structural distance used by diversity selection, then a short
evolution run on sinusoid data.
"""

import numpy as np

from evoad import GenomeBounds, ModelSearchConfig, evolve_models_for_subspace
from evoad.modelsearch import (crossover_models, genome_distance, mutate_model,
                               random_genome)

bounds = GenomeBounds(min_layers=3, max_layers=4, min_channels=4, max_channels=16,
                      max_window=8, min_learning_rate=1e-3, max_learning_rate=0.3,
                      max_channel_growth=6)
rng = np.random.default_rng(5)


def describe(genome):
    widths = " -> ".join(str(s.out_channels) for s in genome.encoder_layers)
    return f"window={genome.window_size} channels {genome.window_size} -> {widths}"


parent = random_genome(bounds, rng, "conv1d", kernel_size=3, learning_rate=0.1)
print("parent      :", describe(parent))
for trial in range(3):
    print(f"mutation #{trial}  :", describe(mutate_model(parent, bounds, rng)))

other = random_genome(bounds, rng, "conv1d", kernel_size=3, learning_rate=0.1)
print("other parent:", describe(other))
c1, c2 = crossover_models(parent, other, rng)
print("child 1     :", describe(c1))
print("child 2     :", describe(c2))
print(f"distance(parent, other) = {genome_distance(parent, other):.3f}")
print(f"distance(parent, child1) = {genome_distance(parent, c1):.3f}")

# evolve on a 2-feature correlated series
n = 2500
driver = np.sin(2 * np.pi * np.arange(n) / 60.0)
series = np.stack([driver + rng.normal(0, 0.04, n),
                   0.8 * driver + rng.normal(0, 0.04, n)], axis=1)

cfg = ModelSearchConfig(
    population_size=8, generations=4, epochs=3, batch_size=64, stride=2,
    layer_kind="conv1d", kernel_size=3, learning_rate=0.15,
    selection="diversity", bounds=bounds,
)
best, result = evolve_models_for_subspace(series, cfg, seed=2)
print("\nevolution (best fitness per generation, higher is better):")
for stats in result.history:
    print(f"  generation {stats.generation}: {stats.best_fitness:.5f}")
print("best genome :", describe(best))
