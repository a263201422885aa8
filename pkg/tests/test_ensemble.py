"""Ensemble tests: percentile thresholds, vote semantics, point-wise metrics."""

import itertools

import numpy as np
import pytest

from evoad.ensemble import (EnsembleModel, ThresholdedModel,
                            calibrate_threshold, classify_point,
                            ensemble_predict, evaluate_f1,
                            nearest_rank_percentile, predict_series)
from evoad.nn import (LayerSpec, ModelGenome, ModelWeights, TrainedModel,
                      instantiate)
from evoad.subspaces import SubspacePartition


def zero_output_model(window, features):
    genome = ModelGenome((LayerSpec("fully_connected", window, 3),),
                         window_size=window, learning_rate=0.01)
    weights = instantiate(genome, 0)
    zeroed = ModelWeights(
        encoder=[(np.zeros_like(w), np.zeros_like(b)) for w, b in weights.encoder],
        decoder=[(np.zeros_like(w), np.zeros_like(b)) for w, b in weights.decoder],
    )
    return TrainedModel(genome, zeroed, tuple(range(features)))


class TestNearestRankPercentile:
    def test_constant_distribution(self):
        values = np.full(50, 3.25)
        for p in (1.0, 50.0, 99.9, 100.0):
            assert nearest_rank_percentile(values, p) == 3.25

    def test_one_to_hundred(self):
        values = np.arange(1.0, 101.0)
        assert nearest_rank_percentile(values, 99.0) == 99.0

    def test_percentile_100_is_max(self):
        values = np.array([5.0, 1.0, 9.0, 2.0])
        assert nearest_rank_percentile(values, 100.0) == 9.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            nearest_rank_percentile(np.array([1.0]), 0.0)


class TestCalibrateThreshold:
    def test_known_error_distribution(self):
        # zero-output model on 1x1 windows: errors are |values|
        model = zero_output_model(1, 1)
        windows = np.arange(1.0, 101.0).reshape(100, 1, 1)
        assert calibrate_threshold(model, windows, percentile=99.0) == 99.0

    def test_empty_set_rejected(self):
        model = zero_output_model(1, 1)
        with pytest.raises(ValueError):
            calibrate_threshold(model, np.zeros((0, 1, 1)))


class TestClassifyPoint:
    def test_boundary_error_counts_as_anomaly(self):
        model = zero_output_model(1, 1)
        tm = ThresholdedModel(model, threshold=4.0)
        assert classify_point(tm, np.array([[4.0]])) == 1

    def test_below_threshold_is_normal(self):
        model = zero_output_model(1, 1)
        tm = ThresholdedModel(model, threshold=4.0)
        assert classify_point(tm, np.array([[1.0]])) == 0

    def test_zero_threshold_flags_everything(self):
        model = zero_output_model(1, 1)
        tm = ThresholdedModel(model, threshold=0.0)
        assert classify_point(tm, np.array([[0.0]])) == 1


def voting_ensemble(k, fire_mask, window=1):
    """K single-feature members; member i fires on the test window iff fire_mask[i].

    Every member sees |value| = 1 on its column; a threshold of 0.5 makes it
    fire, 2.0 keeps it silent.
    """
    members = []
    for i in range(k):
        model = zero_output_model(window, 1)
        model.subspace = (i,)
        members.append(ThresholdedModel(model, 0.5 if fire_mask[i] else 2.0))
    partition = SubspacePartition([{i} for i in range(k)], k)
    return EnsembleModel(members, partition)


class TestEnsemblePredict:
    def test_all_silent_means_normal(self):
        ens = voting_ensemble(3, (False, False, False))
        assert ensemble_predict(ens, np.ones((1, 3))) == 0

    def test_single_vote_flags_anomaly(self):
        ens = voting_ensemble(3, (False, True, False))
        assert ensemble_predict(ens, np.ones((1, 3))) == 1

    def test_single_member_passthrough(self):
        assert ensemble_predict(voting_ensemble(1, (True,)), np.ones((1, 1))) == 1
        assert ensemble_predict(voting_ensemble(1, (False,)), np.ones((1, 1))) == 0

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_equals_max_over_members_exhaustively(self, k):
        window = np.ones((1, k))
        for mask in itertools.product([False, True], repeat=k):
            ens = voting_ensemble(k, mask)
            votes = [classify_point(m, window[:, [i]])
                     for i, m in enumerate(ens.members)]
            assert ensemble_predict(ens, window) == max(votes)

    def test_raising_threshold_never_flips_normal_to_anomaly(self):
        rng = np.random.default_rng(0)
        window = rng.normal(size=(1, 3))
        ens = voting_ensemble(3, (True, True, True))
        before = ensemble_predict(ens, window)
        for member in ens.members:
            member.threshold *= 10
        after = ensemble_predict(ens, window)
        assert not (before == 0 and after == 1)

    def test_short_window_rejected(self):
        ens = voting_ensemble(2, (True, True), window=3)
        with pytest.raises(ValueError):
            ensemble_predict(ens, np.ones((2, 2)))


class TestPredictSeries:
    def test_votes_land_on_window_end(self):
        # one member with window 2 and threshold 1: a spike at t=5 fires the
        # windows ending at t=5 and t=6, and nothing earlier
        model = zero_output_model(2, 1)
        ens = EnsembleModel([ThresholdedModel(model, 1.0)],
                            SubspacePartition([{0}], 1))
        series = np.zeros((10, 1))
        series[5, 0] = 5.0
        votes = predict_series(ens, series)
        np.testing.assert_array_equal(votes, [0, 0, 0, 0, 0, 1, 1, 0, 0, 0])

    def test_members_with_different_windows_combine(self):
        m1 = zero_output_model(2, 1)
        m2 = zero_output_model(3, 1)
        m2.subspace = (1,)
        ens = EnsembleModel(
            [ThresholdedModel(m1, 1.0), ThresholdedModel(m2, 1.0)],
            SubspacePartition([{0}, {1}], 2),
        )
        series = np.zeros((8, 2))
        series[4, 0] = 5.0   # fires member 1 at points 4, 5
        series[6, 1] = 5.0   # fires member 2 at points 6, 7 (window 3 caps at end)
        votes = predict_series(ens, series)
        np.testing.assert_array_equal(votes, [0, 0, 0, 0, 1, 1, 1, 1])


class TestEvaluateF1:
    def test_perfect_prediction(self):
        labels = np.array([0, 1, 0, 1, 1])
        report = evaluate_f1(labels, labels)
        assert report.f1 == 1.0
        assert report.precision == 1.0
        assert report.recall == 1.0

    def test_degenerate_all_normal_predictor(self):
        labels = np.array([0, 1, 0, 1])
        report = evaluate_f1(np.zeros(4, dtype=int), labels)
        assert report.recall == 0.0
        assert report.f1 == 0.0

    def test_hand_counts(self):
        predictions = np.array([1, 1, 1, 0, 0])
        labels = np.array([1, 1, 0, 1, 0])
        report = evaluate_f1(predictions, labels)
        assert (report.tp, report.fp, report.fn, report.tn) == (2, 1, 1, 1)
        assert report.precision == pytest.approx(2 / 3)
        assert report.recall == pytest.approx(2 / 3)
        assert report.f1 == pytest.approx(2 / 3)

    def test_matches_confusion_matrix_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            predictions = rng.integers(0, 2, 60)
            labels = rng.integers(0, 2, 60)
            report = evaluate_f1(predictions, labels)
            tp = int(np.sum((predictions == 1) & (labels == 1)))
            fp = int(np.sum((predictions == 1) & (labels == 0)))
            fn = int(np.sum((predictions == 0) & (labels == 1)))
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / (tp + fn) if tp + fn else 0.0
            f1 = (2 * precision * recall / (precision + recall)
                  if precision + recall else 0.0)
            assert report.precision == pytest.approx(precision)
            assert report.recall == pytest.approx(recall)
            assert report.f1 == pytest.approx(f1)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            evaluate_f1(np.zeros(3, dtype=int), np.zeros(4, dtype=int))
