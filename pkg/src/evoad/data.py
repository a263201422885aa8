"""Dataset ingestion and preparation for multivariate time series.

Covers CSV loading, median decimation of the training series, overlapping
window extraction, the chronological train/validation split, feature-column
projection, and per-feature min-max scaling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, ParseError

LABEL_COLUMN = "label"


@dataclass
class TimeSeriesDataset:
    """A raw multivariate series: N samples of M features, optional point labels."""

    values: np.ndarray
    feature_names: list[str]
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise DataError(f"expected a non-empty 2-d value matrix, got shape {self.values.shape}")
        if not np.isfinite(self.values).all():
            raise DataError("value matrix contains non-finite entries")
        if len(self.feature_names) != self.values.shape[1]:
            raise DataError(
                f"{len(self.feature_names)} feature names for {self.values.shape[1]} columns"
            )
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.values.shape[0],):
                raise DataError("labels must be one flag per sample")
            if not np.isin(self.labels, (0, 1)).all():
                raise DataError("labels must be 0 or 1")

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


@dataclass
class ReducedDataset:
    """A decimated series: one per-feature aggregate per block of `sigma` samples."""

    values: np.ndarray
    sigma: int
    labels: np.ndarray | None = None


@dataclass
class WindowedDataset:
    """Overlapping windows over a series.

    `windows` has shape (count, window_size, n_features); `origin_index[i]`
    is the source row where window i starts.  A window's label is 1 if any
    covered sample is labelled 1.
    """

    windows: np.ndarray
    stride: int
    origin_index: np.ndarray
    labels: np.ndarray | None = None

    @property
    def count(self) -> int:
        return self.windows.shape[0]

    @property
    def window_size(self) -> int:
        return self.windows.shape[1]


def load_csv(path: str | Path, has_labels: bool = False) -> TimeSeriesDataset:
    """Read a comma-separated series: header row, one sample per row.

    With `has_labels`, the final column must be named "label" and hold 0/1
    point flags (test sets).  Malformed rows raise ParseError with the
    1-based line number; non-finite values raise DataError.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if has_labels:
            if not header or header[-1] != LABEL_COLUMN:
                raise DataError(f"{path}: expected final column named '{LABEL_COLUMN}'")
            feature_names = header[:-1]
        else:
            feature_names = header
        if not feature_names:
            raise DataError(f"{path}: no feature columns")

        rows: list[list[float]] = []
        labels: list[int] = []
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, found {len(row)}", line_number
                )
            try:
                parsed = [float(cell) for cell in row]
            except ValueError as exc:
                raise ParseError(str(exc), line_number) from None
            if has_labels:
                lab = parsed.pop()
                if lab not in (0.0, 1.0):
                    raise ParseError(f"label must be 0 or 1, found {lab!r}", line_number)
                labels.append(int(lab))
            rows.append(parsed)

    if not rows:
        raise DataError(f"{path}: no data rows")
    values = np.array(rows, dtype=np.float64)
    if not np.isfinite(values).all():
        raise DataError(f"{path}: non-finite value in data")
    return TimeSeriesDataset(
        values=values,
        feature_names=feature_names,
        labels=np.array(labels, dtype=np.int64) if has_labels else None,
    )


def write_csv(path: str | Path, values: np.ndarray, feature_names: Sequence[str],
              labels: np.ndarray | None = None) -> None:
    """Dump a value matrix (and optional labels) in the load_csv format."""
    path = Path(path)
    values = np.asarray(values)
    header = list(feature_names) + ([LABEL_COLUMN] if labels is not None else [])
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(values.shape[0]):
            row = [repr(v) for v in values[i].tolist()]
            if labels is not None:
                row.append(str(int(labels[i])))
            writer.writerow(row)


def _lower_median(block: np.ndarray) -> np.ndarray:
    """Per-column median of a block, taking the lower middle element when even.

    Keeps outputs inside the observed value set (no interpolation).
    """
    ordered = np.sort(block, axis=0)
    return ordered[(block.shape[0] - 1) // 2]


def reduce(ds: TimeSeriesDataset, sigma: int, method: str = "median") -> ReducedDataset:
    """Decimate a series by aggregating disjoint blocks of `sigma` samples.

    Each output row aggregates source rows [t*sigma, (t+1)*sigma) per feature;
    trailing rows that do not fill a block are dropped.  Labels, when present,
    reduce by max over each block.  `method` is "median" (lower-median
    convention for even blocks) or "mean".
    """
    if sigma < 1:
        raise ValueError(f"sigma must be >= 1, got {sigma}")
    if sigma > ds.n_samples:
        raise ValueError(f"sigma={sigma} exceeds series length {ds.n_samples}")
    if method not in ("median", "mean"):
        raise ValueError(f"unknown reduction method {method!r}")

    n_blocks = ds.n_samples // sigma
    trimmed = ds.values[: n_blocks * sigma]
    blocks = trimmed.reshape(n_blocks, sigma, ds.n_features)
    if method == "median":
        ordered = np.sort(blocks, axis=1)
        reduced = ordered[:, (sigma - 1) // 2, :]
    else:
        reduced = blocks.mean(axis=1)

    labels = None
    if ds.labels is not None:
        labels = ds.labels[: n_blocks * sigma].reshape(n_blocks, sigma).max(axis=1)
    return ReducedDataset(values=reduced.copy(), sigma=sigma, labels=labels)


def make_windows(values: np.ndarray, window_size: int, stride: int = 1,
                 labels: np.ndarray | None = None) -> WindowedDataset:
    """Slice a series into overlapping windows of `window_size` rows.

    Produces floor((rows - window_size)/stride) + 1 windows when the series
    is long enough, otherwise an empty set.  Consecutive windows overlap by
    window_size - stride rows.
    """
    if window_size < 1:
        raise ValueError(f"window_size must be >= 1, got {window_size}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    values = np.asarray(values, dtype=np.float64)
    rows, n_features = values.shape

    if rows < window_size:
        empty = np.empty((0, window_size, n_features))
        return WindowedDataset(
            windows=empty,
            stride=stride,
            origin_index=np.empty(0, dtype=np.int64),
            labels=np.empty(0, dtype=np.int64) if labels is not None else None,
        )

    view = np.lib.stride_tricks.sliding_window_view(values, window_size, axis=0)
    windows = view[::stride].transpose(0, 2, 1).copy()
    origins = np.arange(0, rows - window_size + 1, stride, dtype=np.int64)

    window_labels = None
    if labels is not None:
        labels = np.asarray(labels)
        lab_view = np.lib.stride_tricks.sliding_window_view(labels, window_size)
        window_labels = lab_view[::stride].max(axis=1).astype(np.int64)
    return WindowedDataset(windows=windows, stride=stride, origin_index=origins,
                           labels=window_labels)


def split_train_val(wd: WindowedDataset, train_fraction: float = 0.8
                    ) -> tuple[WindowedDataset, WindowedDataset]:
    """Chronological split: the first ceil(fraction*count) windows train, the rest validate."""
    if wd.count < 5:
        raise ValueError(f"need at least 5 windows to split, got {wd.count}")
    n_train = math.ceil(train_fraction * wd.count)

    def piece(lo: int, hi: int) -> WindowedDataset:
        return WindowedDataset(
            windows=wd.windows[lo:hi],
            stride=wd.stride,
            origin_index=wd.origin_index[lo:hi],
            labels=wd.labels[lo:hi] if wd.labels is not None else None,
        )

    return piece(0, n_train), piece(n_train, wd.count)


def project_columns(matrix: np.ndarray, feature_indices: Iterable[int]) -> np.ndarray:
    """Select feature columns (ascending index order) from a window or series.

    Works on the last axis, so it applies equally to an (N, M) series or a
    (count, window_size, M) window stack.
    """
    matrix = np.asarray(matrix)
    cols = sorted(set(int(i) for i in feature_indices))
    if not cols:
        raise ValueError("cannot project onto an empty feature set")
    if cols[0] < 0 or cols[-1] >= matrix.shape[-1]:
        raise ValueError(f"feature index out of range for {matrix.shape[-1]} features: {cols}")
    return matrix[..., cols]


@dataclass
class FeatureScaler:
    """Per-feature min-max scaler fitted on training data only.

    Constant features map to 0 to keep transforms finite.
    """

    mins: np.ndarray = field(default=None)  # type: ignore[assignment]
    scales: np.ndarray = field(default=None)  # type: ignore[assignment]

    def fit(self, values: np.ndarray) -> "FeatureScaler":
        values = np.asarray(values, dtype=np.float64)
        self.mins = values.min(axis=0)
        span = values.max(axis=0) - self.mins
        span[span == 0.0] = 1.0
        self.scales = span
        return self

    def transform(self, values: np.ndarray) -> np.ndarray:
        if self.mins is None:
            raise ValueError("scaler not fitted")
        return (np.asarray(values, dtype=np.float64) - self.mins) / self.scales

    def to_dict(self) -> dict:
        return {"mins": self.mins.tolist(), "scales": self.scales.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureScaler":
        return cls(mins=np.array(d["mins"], dtype=np.float64),
                   scales=np.array(d["scales"], dtype=np.float64))
