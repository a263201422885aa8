"""Serialization round-trip tests for every persisted artifact kind."""

import numpy as np
import pytest

from evoad.ensemble import EnsembleModel, ThresholdedModel
from evoad.modelsearch import random_genome
from evoad.nn import GenomeBounds, ModelGenome, TrainedModel, instantiate
from evoad.serialize import (load_ensemble, load_genome, load_partition,
                             load_weights, save_ensemble, save_genome,
                             save_partition, save_weights)
from evoad.subspaces import SubspacePartition

BOUNDS = GenomeBounds(min_layers=3, max_layers=5, min_channels=2,
                      max_channels=32, max_window=8, max_channel_growth=8)


def random_partition(rng, m=10, k=3):
    subs = []
    for _ in range(k):
        size = int(rng.integers(1, m))
        subs.append(set(rng.choice(m, size=size, replace=False).tolist()))
    return SubspacePartition(subs, m)


class TestGenomeRoundTrip:
    def test_save_load_save_is_bit_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        for i in range(20):
            kind = "conv1d" if i % 2 else "fully_connected"
            genome = random_genome(BOUNDS, rng, kind, kernel_size=3)
            p1, p2 = tmp_path / f"g{i}.json", tmp_path / f"g{i}b.json"
            save_genome(genome, p1)
            save_genome(load_genome(p1), p2)
            assert p1.read_bytes() == p2.read_bytes()

    def test_fields_survive(self, tmp_path):
        rng = np.random.default_rng(1)
        genome = random_genome(BOUNDS, rng, "conv1d", kernel_size=3)
        path = tmp_path / "g.json"
        save_genome(genome, path)
        loaded = load_genome(path)
        assert loaded.to_dict() == genome.to_dict()

    def test_schema_version_checked(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text('{"schema": 99}')
        with pytest.raises(ValueError):
            load_genome(path)


class TestWeightsRoundTrip:
    def test_save_load_save_is_bit_identical(self, tmp_path):
        rng = np.random.default_rng(2)
        for i in range(20):
            genome = random_genome(BOUNDS, rng, "fully_connected")
            weights = instantiate(genome, int(rng.integers(0, 1 << 31)))
            p1, p2 = tmp_path / f"w{i}.bin", tmp_path / f"w{i}b.bin"
            save_weights(weights, p1)
            save_weights(load_weights(p1), p2)
            assert p1.read_bytes() == p2.read_bytes()

    def test_shapes_and_values_survive(self, tmp_path):
        rng = np.random.default_rng(3)
        genome = random_genome(BOUNDS, rng, "conv1d", kernel_size=3)
        weights = instantiate(genome, 7)
        path = tmp_path / "w.bin"
        save_weights(weights, path)
        loaded = load_weights(path)
        for a, b in zip(weights.tensors(), loaded.tensors()):
            assert a.shape == b.shape
            np.testing.assert_allclose(a, b, atol=1e-6)  # float32 storage

    def test_stream_is_little_endian_float32(self, tmp_path):
        rng = np.random.default_rng(4)
        genome = random_genome(BOUNDS, rng, "fully_connected")
        weights = instantiate(genome, 1)
        path = tmp_path / "w.bin"
        save_weights(weights, path)
        with path.open("rb") as fh:
            header = fh.readline()
            body = fh.read()
        n_scalars = sum(t.size for t in weights.tensors())
        assert b'"dtype": "<f4"' in header
        assert len(body) == 4 * n_scalars


class TestPartitionRoundTrip:
    def test_save_load_save_is_bit_identical(self, tmp_path):
        rng = np.random.default_rng(5)
        for i in range(20):
            partition = random_partition(rng)
            p1, p2 = tmp_path / f"p{i}.json", tmp_path / f"p{i}b.json"
            save_partition(partition, p1)
            save_partition(load_partition(p1), p2)
            assert p1.read_bytes() == p2.read_bytes()

    def test_sets_survive(self, tmp_path):
        partition = SubspacePartition([{3, 1}, {0, 2}, {4}], 5)
        path = tmp_path / "p.json"
        save_partition(partition, path)
        loaded = load_partition(path)
        assert [set(s) for s in loaded.subspaces] == [{1, 3}, {0, 2}, {4}]
        assert loaded.n_features == 5


class TestEnsembleRoundTrip:
    def build(self, rng):
        k, m = 2, 6
        subs = [{0, 1, 2}, {3, 4, 5}]
        members = []
        for i, s in enumerate(subs):
            genome = random_genome(BOUNDS, rng, "fully_connected")
            model = TrainedModel(genome, instantiate(genome, i), tuple(sorted(s)))
            members.append(ThresholdedModel(model, threshold=float(rng.uniform(0.1, 2))))
        return EnsembleModel(members, SubspacePartition(subs, m))

    def test_manifest_round_trip_is_bit_identical(self, tmp_path):
        rng = np.random.default_rng(6)
        for i in range(10):
            ens = self.build(rng)
            d1 = tmp_path / f"a{i}"
            d2 = tmp_path / f"b{i}"
            d1.mkdir()
            d2.mkdir()
            save_ensemble(ens, d1 / "ensemble.json")
            loaded = load_ensemble(d1 / "ensemble.json")
            save_ensemble(loaded, d2 / "ensemble.json")
            assert (d1 / "ensemble.json").read_bytes() == (d2 / "ensemble.json").read_bytes()
            for member_file in sorted(p.name for p in d1.iterdir()):
                assert (d1 / member_file).read_bytes() == (d2 / member_file).read_bytes()

    def test_thresholds_and_subspaces_survive(self, tmp_path):
        rng = np.random.default_rng(7)
        ens = self.build(rng)
        save_ensemble(ens, tmp_path / "ensemble.json")
        loaded = load_ensemble(tmp_path / "ensemble.json")
        assert [m.threshold for m in loaded.members] == [m.threshold for m in ens.members]
        assert [m.model.subspace for m in loaded.members] == \
               [m.model.subspace for m in ens.members]
