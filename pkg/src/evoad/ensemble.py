"""Threshold calibration, crisp-vote ensembles, and point-wise evaluation.

Each ensemble member owns a threshold calibrated on anomaly-free validation
errors; a member votes anomaly when its reconstruction error meets or
exceeds its threshold, and the ensemble flags a point as soon as any member
votes.  Evaluation is point-wise precision/recall/F1 with no sequence-level
adjustment; a window's prediction lands on its last time point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import make_windows, project_columns
from .nn import TrainedModel, reconstruction_error, reconstruction_errors
from .subspaces import SubspacePartition


@dataclass
class ThresholdedModel:
    """A trained model plus its anomaly threshold."""

    model: TrainedModel
    threshold: float


@dataclass
class EnsembleModel:
    """K thresholded models, one per subspace, combined by any-member voting."""

    members: list[ThresholdedModel]
    partition: SubspacePartition

    def __post_init__(self):
        if len(self.members) != self.partition.k:
            raise ValueError("one member per subspace required")


def nearest_rank_percentile(values: np.ndarray, percentile: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    if not 0.0 < percentile <= 100.0:
        raise ValueError("percentile must lie in (0, 100]")
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    if ordered.size == 0:
        raise ValueError("percentile of an empty sample is undefined")
    rank = math.ceil(percentile / 100.0 * ordered.size)
    return float(ordered[rank - 1])


def calibrate_threshold(model: TrainedModel, val_windows: np.ndarray,
                        percentile: float = 99.9) -> float:
    """Set the threshold at a percentile of validation reconstruction errors.

    Validation windows must be anomaly-free; the default keeps the false
    alarm rate on normal data near one in a thousand windows.
    """
    val_windows = np.asarray(val_windows, dtype=np.float64)
    if val_windows.shape[0] == 0:
        raise ValueError("threshold calibration needs a non-empty window set")
    errors = reconstruction_errors(model, val_windows)
    return nearest_rank_percentile(errors, percentile)


def classify_point(tm: ThresholdedModel, window: np.ndarray) -> int:
    """1 iff the reconstruction error meets or exceeds the threshold."""
    return int(reconstruction_error(tm.model, window) >= tm.threshold)


def ensemble_predict(ensemble: EnsembleModel, window: np.ndarray) -> int:
    """Vote on one all-features window: 1 as soon as any member fires.

    Each member reads the trailing rows matching its own window size,
    projected onto its subspace, so members with different window sizes
    share the same decision point (the window's last row).
    """
    window = np.asarray(window, dtype=np.float64)
    for member, subspace in zip(ensemble.members, ensemble.partition.subspaces):
        w = member.model.genome.window_size
        if window.shape[0] < w:
            raise ValueError(
                f"window has {window.shape[0]} rows, member needs {w}"
            )
        piece = project_columns(window[window.shape[0] - w:], sorted(subspace))
        if classify_point(member, piece):
            return 1
    return 0


def predict_series(ensemble: EnsembleModel, values: np.ndarray) -> np.ndarray:
    """Point-wise ensemble votes over a full series.

    A member's vote for point t comes from its causal window ending at t;
    points too early to fill a member's window get no vote from it.  The
    returned array holds one 0/1 flag per input row.
    """
    values = np.asarray(values, dtype=np.float64)
    votes = np.zeros(values.shape[0], dtype=np.int64)
    for member, subspace in zip(ensemble.members, ensemble.partition.subspaces):
        w = member.model.genome.window_size
        series = project_columns(values, sorted(subspace))
        wd = make_windows(series, w, stride=1)
        if wd.count == 0:
            continue
        errors = reconstruction_errors(member.model, wd.windows)
        fired = errors >= member.threshold
        points = wd.origin_index + (w - 1)
        votes[points] |= fired.astype(np.int64)
    return votes


@dataclass
class MetricReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def evaluate_f1(predictions: np.ndarray, labels: np.ndarray) -> MetricReport:
    """Point-wise precision, recall, and F1; zero denominators score 0."""
    predictions = np.asarray(predictions).astype(np.int64)
    labels = np.asarray(labels).astype(np.int64)
    if predictions.shape != labels.shape:
        raise ValueError(
            f"prediction length {predictions.shape} != label length {labels.shape}"
        )
    tp = int(((predictions == 1) & (labels == 1)).sum())
    fp = int(((predictions == 1) & (labels == 0)).sum())
    fn = int(((predictions == 0) & (labels == 1)).sum())
    tn = int(((predictions == 0) & (labels == 0)).sum())
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return MetricReport(precision=precision, recall=recall, f1=f1,
                        tp=tp, fp=fp, fn=fn, tn=tn)
