"""Fine-tuning walkthrough: false positives and non-gradient weight search.

After gradient training, each generation perturbs the anchor model's weights
multiplicatively (theta * (1 +- p_m * tau)) and keeps the variant with the
fewest training windows flagged as anomalous (error above deviation_factor
times the mean error).  The anchor converges when it reaches zero false
positives or stagnates, joins the retained set, and the search re-anchors on
the most weight-distant mutant.
"""

import numpy as np

from evoad import FineTuneConfig, count_false_positives, fine_tune
from evoad.data import make_windows
from evoad.finetune import mutate_weights, weight_distance
from evoad.nn import (LayerSpec, ModelGenome, TrainedModel, instantiate,
                      reconstruction_errors, train)

rng = np.random.default_rng(1)
n = 6000
t = np.arange(n)
envelope = 1.0 + 0.004 * np.sin(2 * np.pi * t / (n / 2.5))
driver = envelope * np.sin(2 * np.pi * t / 47.0)
series = np.stack([driver + rng.normal(0, 2e-4, n),
                   0.8 * driver + rng.normal(0, 2e-4, n),
                   1.2 * driver + rng.normal(0, 2e-4, n)], axis=1)
windows = make_windows(series, 4, stride=1).windows

chain = (4, 8, 6, 3)
layers = tuple(LayerSpec("conv1d", a, b, 3) for a, b in zip(chain, chain[1:]))
genome = ModelGenome(layers, window_size=4, learning_rate=0.05)
model = train(TrainedModel(genome, instantiate(genome, 1)), windows,
              epochs=6, batch_size=64, seed=1)

# the mutation never changes architecture, only weight values
mutant_weights = mutate_weights(model.weights, p_m=0.02, tau=1 / 256, rng=rng)
mutant = TrainedModel(genome, mutant_weights)
print(f"weight distance anchor->mutant: {weight_distance(model, mutant):.5f}")

# place the detection threshold a hair below the worst training window
errors = reconstruction_errors(model, windows)
margins = np.sort(errors / errors.mean())[::-1]
c = float(margins[0] - 6e-4)
fp0 = count_false_positives(model, windows, c)
print(f"deviation factor c={c:.4f} -> {fp0} false positives before fine-tuning")

cfg = FineTuneConfig(population_size=16, generations=24,
                     mutation_probability=0.02, mutation_power=1 / 256,
                     deviation_factor=c, stagnation_window=24)
result = fine_tune(model, windows, cfg, seed=3)
print("\nfalse positives of the anchor per generation:")
for record in result.history:
    marker = "  <- converged, re-anchored" if record.re_anchored else ""
    print(f"  generation {record.generation:2d}: FP={record.best_fp}{marker}")
    if record.re_anchored:
        break
print(f"\nretained models: {len(result.retained)}; "
      f"best has FP={result.best.false_positives} "
      f"(generation {result.best.generation})")
