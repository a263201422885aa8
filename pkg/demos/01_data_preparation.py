"""Data preparation walkthrough: load, scale, reduce, window, split, project.

Generates a small synthetic benchmark, then shows each preparation step the
pipeline applies before any evolution starts.
"""

import tempfile
from pathlib import Path

import numpy as np

from evoad import (FeatureScaler, SyntheticSpec, load_csv, make_windows,
                   project_columns, reduce, split_train_val, write_synthetic)
from evoad.data import TimeSeriesDataset

out = Path(tempfile.mkdtemp(prefix="evoad-demo-"))
train_path, test_path = write_synthetic(
    SyntheticSpec(features=6, length=3000, test_length=1500, anomaly_rate=0.1, seed=7),
    out,
)
print(f"synthetic benchmark written to {out}")

train = load_csv(train_path)
test = load_csv(test_path, has_labels=True)
print(f"train: {train.n_samples} samples x {train.n_features} features")
print(f"test:  {test.n_samples} samples, {int(test.labels.sum())} anomalous points "
      f"({test.labels.mean():.1%})")

# per-feature min-max scaling, fitted on training data only
scaler = FeatureScaler().fit(train.values)
train_scaled = scaler.transform(train.values)
print(f"scaled train range: [{train_scaled.min():.3f}, {train_scaled.max():.3f}]")

# median decimation: disjoint blocks of sigma rows, lower-median convention
reduced = reduce(TimeSeriesDataset(train_scaled, train.feature_names), sigma=4)
print(f"reduced by sigma=4: {reduced.values.shape[0]} rows "
      f"(from {train.n_samples}, remainder dropped)")

# overlapping windows over the reduced series
wd = make_windows(reduced.values, window_size=6, stride=2)
print(f"windows: {wd.count} of shape {wd.windows.shape[1:]} "
      f"(stride 2, overlap {6 - 2} rows)")

# chronological 80/20 split: training windows strictly precede validation
tr, va = split_train_val(wd)
print(f"split: {tr.count} train / {va.count} val "
      f"(train ends at row {tr.origin_index[-1]}, val starts at {va.origin_index[0]})")

# subspace projection: column selection in ascending feature order
piece = project_columns(tr.windows, {4, 1})
print(f"projected onto features {{1, 4}}: windows now {piece.shape[1:]}")

rng = np.random.default_rng(0)
sample = rng.choice(tr.count, 3, replace=False)
print(f"three window origins drawn at random: {sorted(tr.origin_index[sample].tolist())}")
