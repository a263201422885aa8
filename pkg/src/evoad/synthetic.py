"""Synthetic multivariate benchmark: correlated sinusoids plus injected anomalies.

The clean process mixes a small number of latent sinusoidal drivers into the
feature columns with additive noise, so features sharing a driver are
strongly correlated.  Test anomalies are point spikes, level shifts, and
correlation breaks (one feature temporarily follows a foreign waveform);
labels mark exactly the injected points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import TimeSeriesDataset

ANOMALY_KINDS = ("spike", "level_shift", "correlation_break")


@dataclass
class SyntheticSpec:
    features: int = 8
    length: int = 20_000
    test_length: int = 5_000
    anomaly_rate: float = 0.10
    anomaly_kinds: tuple[str, ...] = ANOMALY_KINDS
    noise_std: float = 0.04
    seed: int = 0

    def __post_init__(self):
        if self.features < 2:
            raise ValueError("need at least 2 features")
        if self.length < 1000:
            raise ValueError("need at least 1000 training points")
        unknown = set(self.anomaly_kinds) - set(ANOMALY_KINDS)
        if unknown:
            raise ValueError(f"unknown anomaly kinds: {sorted(unknown)}")


@dataclass
class _Process:
    periods: np.ndarray
    phases: np.ndarray
    assignment: np.ndarray  # feature -> driver
    scales: np.ndarray
    offsets: np.ndarray


def _draw_process(spec: SyntheticSpec, rng: np.random.Generator) -> _Process:
    n_drivers = max(2, round(spec.features / 3))
    # geometric period spacing keeps the drivers' time scales well separated,
    # so feature groups stay distinguishable after decimation
    periods = 24.0 * 1.7 ** np.arange(n_drivers) * rng.uniform(0.9, 1.1, n_drivers)
    return _Process(
        periods=periods,
        phases=rng.uniform(0.0, 2 * np.pi, size=n_drivers),
        assignment=np.arange(spec.features) % n_drivers,
        scales=rng.uniform(0.8, 1.2, size=spec.features),
        offsets=rng.uniform(-0.2, 0.2, size=spec.features),
    )


def _clean_series(proc: _Process, length: int, noise_std: float, t0: int,
                  rng: np.random.Generator) -> np.ndarray:
    t = np.arange(t0, t0 + length)[:, None]
    drivers = np.sin(2 * np.pi * t / proc.periods[None, :] + proc.phases[None, :])
    values = drivers[:, proc.assignment] * proc.scales[None, :] + proc.offsets[None, :]
    return values + rng.normal(0.0, noise_std, size=values.shape)


def _inject_anomalies(values: np.ndarray, proc: _Process, spec: SyntheticSpec,
                      rng: np.random.Generator) -> np.ndarray:
    """Overwrite disjoint segments with anomalies until the label budget is met."""
    n = values.shape[0]
    labels = np.zeros(n, dtype=np.int64)
    target = int(round(spec.anomaly_rate * n))
    kinds = list(spec.anomaly_kinds)
    occupied = np.zeros(n, dtype=bool)
    guard = 0
    ki = 0

    while labels.sum() < target and guard < 10_000:
        guard += 1
        kind = kinds[ki % len(kinds)]
        ki += 1
        remaining = target - int(labels.sum())
        if kind == "spike":
            seg_len = 1
        else:
            seg_len = int(rng.integers(20, 61))
            seg_len = min(seg_len, max(1, remaining))
        start = int(rng.integers(0, n - seg_len + 1))
        # keep one clean point of separation between anomaly segments
        lo, hi = max(0, start - 1), min(n, start + seg_len + 1)
        if occupied[lo:hi].any():
            continue
        feature = int(rng.integers(0, spec.features))
        scale = proc.scales[feature]
        sign = 1.0 if rng.random() < 0.5 else -1.0
        if kind == "spike":
            values[start, feature] += sign * rng.uniform(3.0, 5.0) * scale
        elif kind == "level_shift":
            values[start:start + seg_len, feature] += sign * rng.uniform(1.2, 2.0) * scale
        else:  # correlation_break: same amplitude, foreign waveform
            driver = proc.assignment[feature]
            period = proc.periods[driver] / rng.uniform(2.3, 3.1)
            phase = rng.uniform(0.0, 2 * np.pi)
            t = np.arange(start, start + seg_len)
            values[start:start + seg_len, feature] = (
                scale * np.sin(2 * np.pi * t / period + phase)
                + proc.offsets[feature]
                + rng.normal(0.0, spec.noise_std, size=seg_len)
            )
        labels[start:start + seg_len] = 1
        occupied[lo:hi] = True
    return labels


def generate_synthetic(spec: SyntheticSpec) -> tuple[TimeSeriesDataset, TimeSeriesDataset]:
    """Build an anomaly-free training set and a labelled test set.

    Both sets follow the same latent process (the test continues where the
    training series ends); the injected test anomalies cover approximately
    spec.anomaly_rate of the test points.
    """
    rng = np.random.default_rng(spec.seed)
    proc = _draw_process(spec, rng)
    feature_names = [f"f{i}" for i in range(spec.features)]

    train_values = _clean_series(proc, spec.length, spec.noise_std, 0, rng)
    test_values = _clean_series(proc, spec.test_length, spec.noise_std, spec.length, rng)
    test_labels = _inject_anomalies(test_values, proc, spec, rng)

    train = TimeSeriesDataset(values=train_values, feature_names=feature_names)
    test = TimeSeriesDataset(values=test_values, feature_names=feature_names,
                             labels=test_labels)
    return train, test
