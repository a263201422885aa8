"""Autoencoder genomes, weights, forward/backward passes, and SGD training.

A window of `w` time steps over `m` features enters the network as an array
of shape (w, m): the time steps are the channels and the feature axis is the
spatial axis.  A fully_connected layer maps channels with a shared weight
matrix at every feature position (so output width always equals input
width); a conv1d layer additionally mixes neighbouring feature positions
with a same-padded kernel.  The decoder always mirrors the encoder with
transposed channel counts and is derived from the genome, never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import TrainingError

LAYER_KINDS = ("fully_connected", "conv1d")
ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class LayerSpec:
    """One encoder layer: a channel map, plus a kernel width for conv1d."""

    kind: str
    in_channels: int
    out_channels: int
    kernel_size: int = 1

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("channel counts must be positive")
        if self.kernel_size < 1:
            raise ValueError("kernel_size must be >= 1")


@dataclass(frozen=True)
class GenomeBounds:
    """Search-space limits for genomes; defaults follow the reference set-up."""

    min_layers: int = 3
    max_layers: int = 6
    min_channels: int = 16
    max_channels: int = 6144
    max_window: int = 12
    min_learning_rate: float = 1e-6
    max_learning_rate: float = 0.1
    max_channel_growth: int = 64

    def clamp_channels(self, c: int) -> int:
        return min(max(c, self.min_channels), self.max_channels)


@dataclass
class ModelGenome:
    """Architecture description: encoder layer list, window size, learning rate.

    The first layer consumes the window's time steps as channels, so
    encoder_layers[0].in_channels must equal window_size, and adjacent
    layers must chain (out_channels of one equals in_channels of the next).
    """

    encoder_layers: tuple[LayerSpec, ...]
    window_size: int
    learning_rate: float
    activation: str = "tanh"

    def __post_init__(self):
        self.encoder_layers = tuple(self.encoder_layers)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_layers(self) -> int:
        return len(self.encoder_layers)

    def decoder_layers(self) -> tuple[LayerSpec, ...]:
        """The mirror of the encoder: reversed order, transposed channel counts."""
        return tuple(
            LayerSpec(kind=spec.kind, in_channels=spec.out_channels,
                      out_channels=spec.in_channels, kernel_size=spec.kernel_size)
            for spec in reversed(self.encoder_layers)
        )

    def validate(self, bounds: GenomeBounds = GenomeBounds()) -> None:
        """Raise ValueError unless the genome satisfies all structural invariants."""
        n = self.n_layers
        if not bounds.min_layers <= n <= bounds.max_layers:
            raise ValueError(f"layer count {n} outside [{bounds.min_layers}, {bounds.max_layers}]")
        if not 1 <= self.window_size <= bounds.max_window:
            raise ValueError(f"window size {self.window_size} outside [1, {bounds.max_window}]")
        if not bounds.min_learning_rate <= self.learning_rate <= bounds.max_learning_rate:
            raise ValueError(f"learning rate {self.learning_rate} outside configured range")
        if self.encoder_layers[0].in_channels != self.window_size:
            raise ValueError("first layer in_channels must equal window_size")
        for i, spec in enumerate(self.encoder_layers):
            if not bounds.min_channels <= spec.out_channels <= bounds.max_channels:
                raise ValueError(
                    f"layer {i} out_channels {spec.out_channels} outside "
                    f"[{bounds.min_channels}, {bounds.max_channels}]"
                )
            if i + 1 < n and spec.out_channels != self.encoder_layers[i + 1].in_channels:
                raise ValueError(f"channel chain broken between layers {i} and {i + 1}")

    def to_dict(self) -> dict:
        return {
            "encoder_layers": [
                {"kind": s.kind, "in_channels": s.in_channels,
                 "out_channels": s.out_channels, "kernel_size": s.kernel_size}
                for s in self.encoder_layers
            ],
            "window_size": self.window_size,
            "learning_rate": self.learning_rate,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelGenome":
        layers = tuple(
            LayerSpec(kind=s["kind"], in_channels=s["in_channels"],
                      out_channels=s["out_channels"], kernel_size=s["kernel_size"])
            for s in d["encoder_layers"]
        )
        return cls(encoder_layers=layers, window_size=d["window_size"],
                   learning_rate=d["learning_rate"], activation=d["activation"])


@dataclass
class ModelWeights:
    """Per-layer weight and bias tensors for encoder and decoder.

    Weight shapes: (out, in) for fully_connected, (out, in, k) for conv1d;
    biases are (out,).  Tensor iteration order is fixed (encoder then
    decoder, weight then bias) so mutation and serialization stay
    deterministic.
    """

    encoder: list[tuple[np.ndarray, np.ndarray]]
    decoder: list[tuple[np.ndarray, np.ndarray]]

    def tensors(self) -> Iterator[np.ndarray]:
        for w, b in self.encoder + self.decoder:
            yield w
            yield b

    def named_tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        for side, layers in (("encoder", self.encoder), ("decoder", self.decoder)):
            for i, (w, b) in enumerate(layers):
                yield f"{side}.{i}.weight", w
                yield f"{side}.{i}.bias", b

    def copy(self) -> "ModelWeights":
        return ModelWeights(
            encoder=[(w.copy(), b.copy()) for w, b in self.encoder],
            decoder=[(w.copy(), b.copy()) for w, b in self.decoder],
        )

    def all_finite(self) -> bool:
        return all(np.isfinite(t).all() for t in self.tensors())


@dataclass
class TrainedModel:
    """A genome with concrete weights, tied to the feature subspace it models."""

    genome: ModelGenome
    weights: ModelWeights
    subspace: tuple[int, ...] | None = None


def _layer_shapes(spec: LayerSpec) -> tuple[tuple[int, ...], tuple[int, ...]]:
    if spec.kind == "conv1d":
        return (spec.out_channels, spec.in_channels, spec.kernel_size), (spec.out_channels,)
    return (spec.out_channels, spec.in_channels), (spec.out_channels,)


def instantiate(genome: ModelGenome, seed: int) -> ModelWeights:
    """Draw fresh weights: uniform(-b, b) with b = sqrt(6/(fan_in+fan_out)), zero biases."""
    rng = np.random.default_rng(seed)

    def init_side(specs: Sequence[LayerSpec]) -> list[tuple[np.ndarray, np.ndarray]]:
        layers = []
        for spec in specs:
            w_shape, b_shape = _layer_shapes(spec)
            if spec.kind == "conv1d":
                fan_in = spec.in_channels * spec.kernel_size
                fan_out = spec.out_channels * spec.kernel_size
            else:
                fan_in, fan_out = spec.in_channels, spec.out_channels
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            layers.append((rng.uniform(-limit, limit, size=w_shape), np.zeros(b_shape)))
        return layers

    return ModelWeights(
        encoder=init_side(genome.encoder_layers),
        decoder=init_side(genome.decoder_layers()),
    )


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    return np.tanh(z) if kind == "tanh" else np.maximum(z, 0.0)


def _activate_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    return 1.0 - a * a if kind == "tanh" else (z > 0.0).astype(z.dtype)


def _conv_patches(x: np.ndarray, k: int) -> np.ndarray:
    """Same-padded sliding patches: (batch, c, m) -> (batch, c, m, k)."""
    left = (k - 1) // 2
    right = k - 1 - left
    padded = np.pad(x, ((0, 0), (0, 0), (left, right)))
    return np.lib.stride_tricks.sliding_window_view(padded, k, axis=2)


def _apply_layer(spec: LayerSpec, w: np.ndarray, b: np.ndarray, x: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray | None]:
    """Apply one layer to a (batch, c_in, m) array; returns output and conv patches."""
    if spec.kind == "conv1d":
        patches = _conv_patches(x, spec.kernel_size)
        z = np.einsum("oik,bimk->bom", w, patches, optimize=True)
        return z + b[None, :, None], patches
    z = np.einsum("oc,bcm->bom", w, x, optimize=True)
    return z + b[None, :, None], None


def _layer_backward(spec: LayerSpec, w: np.ndarray, x: np.ndarray,
                    patches: np.ndarray | None, dz: np.ndarray
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients through one layer: returns (dx, dw, db)."""
    db = dz.sum(axis=(0, 2))
    if spec.kind == "conv1d":
        k = spec.kernel_size
        dw = np.einsum("bom,bimk->oik", dz, patches, optimize=True)
        dpatches = np.einsum("oik,bom->bimk", w, dz, optimize=True)
        left = (k - 1) // 2
        m = x.shape[2]
        dx_pad = np.zeros((x.shape[0], x.shape[1], m + k - 1))
        for kk in range(k):
            dx_pad[:, :, kk:kk + m] += dpatches[:, :, :, kk]
        dx = dx_pad[:, :, left:left + m]
        return dx, dw, db
    dw = np.einsum("bom,bcm->oc", dz, x, optimize=True)
    dx = np.einsum("oc,bom->bcm", w, dz, optimize=True)
    return dx, dw, db


def _all_layers(model: TrainedModel) -> list[tuple[LayerSpec, np.ndarray, np.ndarray]]:
    specs = list(model.genome.encoder_layers) + list(model.genome.decoder_layers())
    params = model.weights.encoder + model.weights.decoder
    return [(spec, w, b) for spec, (w, b) in zip(specs, params)]


def forward_batch(model: TrainedModel, windows: np.ndarray) -> np.ndarray:
    """Reconstruct a (count, window_size, m) stack of windows."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3 or windows.shape[1] != model.genome.window_size:
        raise ValueError(
            f"expected windows shaped (count, {model.genome.window_size}, m), "
            f"got {windows.shape}"
        )
    layers = _all_layers(model)
    act = model.genome.activation
    a = windows
    for idx, (spec, w, b) in enumerate(layers):
        z, _ = _apply_layer(spec, w, b, a)
        a = z if idx == len(layers) - 1 else _activate(z, act)
    return a


def forward(model: TrainedModel, window: np.ndarray) -> np.ndarray:
    """Reconstruct a single (window_size, m) window; output has the input's shape."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise ValueError(f"expected a 2-d window, got shape {window.shape}")
    return forward_batch(model, window[None])[0]


def reconstruction_error(model: TrainedModel, window: np.ndarray) -> float:
    """L2 norm of (input - reconstruction) over all window entries."""
    window = np.asarray(window, dtype=np.float64)
    residual = window - forward(model, window)
    return float(np.linalg.norm(residual.ravel()))


def reconstruction_errors(model: TrainedModel, windows: np.ndarray) -> np.ndarray:
    """Per-window L2 reconstruction errors for a stack of windows."""
    windows = np.asarray(windows, dtype=np.float64)
    residual = windows - forward_batch(model, windows)
    return np.sqrt((residual * residual).sum(axis=(1, 2)))


def loss(model: TrainedModel, windows: np.ndarray) -> float:
    """Mean squared reconstruction error over all windows and entries."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.shape[0] == 0:
        raise ValueError("loss of an empty window set is undefined")
    residual = windows - forward_batch(model, windows)
    return float(np.mean(residual * residual))


def column_losses(model: TrainedModel, windows: np.ndarray) -> np.ndarray:
    """Per-feature mean squared reconstruction error over a window stack."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.shape[0] == 0:
        raise ValueError("loss of an empty window set is undefined")
    residual = windows - forward_batch(model, windows)
    return (residual * residual).mean(axis=(0, 1))


def gradients(model: TrainedModel, windows: np.ndarray
              ) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Loss and its analytic gradient for a batch: one (dw, db) pair per layer."""
    windows = np.asarray(windows, dtype=np.float64)
    layers = _all_layers(model)
    act = model.genome.activation

    inputs: list[np.ndarray] = []
    pre_acts: list[np.ndarray] = []
    conv_caches: list[np.ndarray | None] = []
    a = windows
    for idx, (spec, w, b) in enumerate(layers):
        inputs.append(a)
        z, patches = _apply_layer(spec, w, b, a)
        conv_caches.append(patches)
        pre_acts.append(z)
        a = z if idx == len(layers) - 1 else _activate(z, act)

    residual = a - windows
    batch_loss = float(np.mean(residual * residual))
    da = 2.0 * residual / residual.size

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(layers)  # type: ignore[list-item]
    for idx in range(len(layers) - 1, -1, -1):
        spec, w, _ = layers[idx]
        if idx == len(layers) - 1:
            dz = da
        else:
            activated = _activate(pre_acts[idx], act)
            dz = da * _activate_grad(pre_acts[idx], activated, act)
        da, dw, db = _layer_backward(spec, w, inputs[idx], conv_caches[idx], dz)
        grads[idx] = (dw, db)
    return batch_loss, grads


def train(model: TrainedModel, windows: np.ndarray, epochs: int, batch_size: int,
          seed: int | None = None) -> TrainedModel:
    """Mini-batch SGD on the mean squared reconstruction error.

    Runs exactly `epochs` passes (no early stopping).  With a seed, the
    batch order is reshuffled deterministically each epoch; without one,
    batches run in series order.  Non-finite loss raises TrainingError
    carrying the last finite loss.
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.shape[0] == 0:
        raise ValueError("cannot train on an empty window set")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")

    out = TrainedModel(genome=model.genome, weights=model.weights.copy(),
                       subspace=model.subspace)
    if epochs == 0:
        return out

    rng = np.random.default_rng(seed) if seed is not None else None
    lr = model.genome.learning_rate
    n = windows.shape[0]
    n_layers = model.genome.n_layers
    last_finite: float | None = None

    for _ in range(epochs):
        order = rng.permutation(n) if rng is not None else np.arange(n)
        for start in range(0, n, batch_size):
            batch = windows[order[start:start + batch_size]]
            batch_loss, grads = gradients(out, batch)
            if not math.isfinite(batch_loss):
                raise TrainingError("training diverged (non-finite loss)",
                                    last_loss=last_finite)
            last_finite = batch_loss
            for li in range(n_layers):
                w, b = out.weights.encoder[li]
                dw, db = grads[li]
                out.weights.encoder[li] = (w - lr * dw, b - lr * db)
            for li in range(n_layers):
                w, b = out.weights.decoder[li]
                dw, db = grads[n_layers + li]
                out.weights.decoder[li] = (w - lr * dw, b - lr * db)
    if not out.weights.all_finite():
        raise TrainingError("training diverged (non-finite weights)", last_loss=last_finite)
    return out
