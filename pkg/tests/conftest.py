"""Shared fixtures: tiny synthetic datasets and fast pipeline configs."""

import pytest

from evoad.config import RunConfig
from evoad.finetune import FineTuneConfig
from evoad.modelsearch import ModelSearchConfig
from evoad.nn import GenomeBounds
from evoad.pipeline import write_synthetic
from evoad.subspaces import ProxySettings, SubspaceSearchConfig
from evoad.synthetic import SyntheticSpec


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory):
    """A small but learnable benchmark: 4 features, 2k train / 1k test points."""
    out = tmp_path_factory.mktemp("tiny-synth")
    train_path, test_path = write_synthetic(
        SyntheticSpec(features=4, length=2000, test_length=1000,
                      anomaly_rate=0.10, seed=42),
        out,
    )
    return str(train_path), str(test_path)


def fast_config(train_csv, test_csv, out_dir, seed=0, workers=1, **overrides):
    """A pipeline config tuned for test speed, not detection quality."""
    bounds = GenomeBounds(min_layers=3, max_layers=3, min_channels=2,
                          max_channels=6, max_window=4,
                          min_learning_rate=1e-3, max_learning_rate=0.3,
                          max_channel_growth=2)
    cfg = RunConfig(
        train_csv=train_csv, test_csv=test_csv, sigma=2,
        subspaces=SubspaceSearchConfig(
            k_subspaces=2, population_size=4, generations=1, window_size=3,
            stride=2, proxy=ProxySettings(channels=2, epochs=1,
                                          learning_rate=0.05, batch_size=64)),
        models=ModelSearchConfig(
            population_size=4, generations=1, epochs=1, batch_size=64, stride=2,
            layer_kind="conv1d", kernel_size=3, learning_rate=0.1, bounds=bounds),
        finetune=FineTuneConfig(population_size=3, generations=3,
                                mutation_probability=0.02,
                                deviation_factor=2.0, stagnation_window=2),
        bounds=bounds,
        final_epochs=3, final_batch_size=128, final_stride=2,
        threshold_percentile=99.0,
        workers=workers, seed=seed, out_dir=str(out_dir),
    )
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg
