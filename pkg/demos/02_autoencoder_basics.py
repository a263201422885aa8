"""Autoencoder walkthrough: genomes, training, errors, and a gradient check.

A genome describes only the encoder; the decoder is always its mirrored
transpose.  Windows enter with time steps as channels and features as the
spatial axis, so conv1d layers mix neighbouring features while
fully-connected layers act per feature column.
"""

import numpy as np

from evoad import LayerSpec, ModelGenome, TrainedModel, instantiate, loss, train
from evoad.data import make_windows
from evoad.nn import gradients, reconstruction_errors

# a 3-layer conv encoder on windows of 4 time steps
genome = ModelGenome(
    encoder_layers=(
        LayerSpec("conv1d", in_channels=4, out_channels=8, kernel_size=3),
        LayerSpec("conv1d", in_channels=8, out_channels=6, kernel_size=3),
        LayerSpec("conv1d", in_channels=6, out_channels=3, kernel_size=3),
    ),
    window_size=4,
    learning_rate=0.1,
)
print("encoder :", [(s.in_channels, s.out_channels) for s in genome.encoder_layers])
print("decoder :", [(s.in_channels, s.out_channels) for s in genome.decoder_layers()])

# training data: two correlated sinusoid features plus noise
rng = np.random.default_rng(0)
n = 2000
driver = np.sin(2 * np.pi * np.arange(n) / 55.0)
series = np.stack([driver + rng.normal(0, 0.04, n),
                   0.8 * driver + rng.normal(0, 0.04, n),
                   1.1 * driver + rng.normal(0, 0.04, n)], axis=1)
windows = make_windows(series, genome.window_size, stride=1).windows

model = TrainedModel(genome, instantiate(genome, seed=1))
print(f"\nloss before training: {loss(model, windows):.5f}")
for epoch in range(1, 6):
    model = train(model, windows, epochs=1, batch_size=64)
    print(f"after epoch {epoch}: {loss(model, windows):.5f}")

# anomaly scores are per-window L2 reconstruction errors
errors = reconstruction_errors(model, windows)
print(f"\nreconstruction errors: mean={errors.mean():.4f} max={errors.max():.4f}")

# a corrupted window scores visibly higher than the clean ones
corrupted = windows[100].copy()
corrupted[2, 1] += 1.5
spike_error = reconstruction_errors(model, corrupted[None])[0]
print(f"clean window 100: {errors[100]:.4f}   corrupted copy: {spike_error:.4f}")

# spot-check the analytic gradient against central finite differences
batch = windows[:8]
_, analytic = gradients(model, batch)
w0 = model.weights.encoder[0][0]
h = 1e-5
keep = w0[0, 0, 0]
w0[0, 0, 0] = keep + h
up = loss(model, batch)
w0[0, 0, 0] = keep - h
down = loss(model, batch)
w0[0, 0, 0] = keep
numeric = (up - down) / (2 * h)
print(f"\ngradient check on one weight: analytic={analytic[0][0][0, 0, 0]:+.3e} "
      f"numeric={numeric:+.3e}")
