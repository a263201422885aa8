"""Subspace evolution tests: operator traces under pinned draws, probability
suites, correlation-seeded initialization, and the proxy fitness."""

import numpy as np
import pytest

from evoad.data import make_windows, split_train_val
from evoad.subspaces import (PartitionFitness, ProxySettings,
                             SubspacePartition, SubspaceSearchConfig,
                             adding_mutation, correlation_clusters,
                             evolve_subspace_partition,
                             init_population_correlation, moving_mutation,
                             repair_partition, subspace_crossover,
                             vanishing_mutation)


class FakeRng:
    """Scripted stand-in for a Generator: pops pinned values in draw order."""

    def __init__(self, integers=(), randoms=()):
        self._integers = list(integers)
        self._randoms = list(randoms)

    def integers(self, lo, hi=None):
        value = self._integers.pop(0)
        return np.int64(value)

    def random(self, size=None):
        if size is None:
            return self._randoms.pop(0)
        return np.array([self._randoms.pop(0) for _ in range(size)])


def part(subs, m):
    return SubspacePartition([set(s) for s in subs], m)


def as_sets(p):
    return [set(s) for s in p.subspaces]


class TestCrossover:
    def test_pinned_split_point_mixes_parents(self):
        # gamma pinned to 3: keep {0,2} from parent 1, {5} from parent 2
        s1 = part([{0, 2, 4}], 6)
        s2 = part([{1, 3, 5}], 6)
        child = subspace_crossover(s1, s2, FakeRng(integers=[3]))
        assert as_sets(child) == [{0, 2, 5}]

    def test_identical_singletons_force_empty_child(self):
        # both parents hold only feature 3, so gamma must be 3 and the child
        # subspace is empty (the split feature is excluded from both sides)
        s1 = part([{3}], 5)
        s2 = part([{3}], 5)
        child = subspace_crossover(s1, s2, FakeRng(integers=[3]))
        assert as_sets(child) == [set()]
        repaired = repair_partition(child, FakeRng(integers=[2]))
        assert as_sets(repaired) == [{2}]

    def test_split_below_all_indices_returns_second_parent(self):
        s1 = part([{4, 6, 8}], 10)
        s2 = part([{4, 6, 8}], 10)
        child = subspace_crossover(s1, s2, FakeRng(integers=[1]))
        assert as_sets(child) == [{4, 6, 8}]

    def test_per_subspace_draws(self):
        s1 = part([{0, 2}, {1, 5}], 6)
        s2 = part([{1, 3}, {0, 4}], 6)
        child = subspace_crossover(s1, s2, FakeRng(integers=[2, 3]))
        # subspace 0: gamma=2 -> {0} from s1, {3} from s2
        # subspace 1: gamma=3 -> {1} from s1, {4} from s2
        assert as_sets(child) == [{0, 3}, {1, 4}]

    def test_child_features_come_from_parents(self):
        rng = np.random.default_rng(0)
        for seed in range(25):
            r = np.random.default_rng(seed)
            m = 12
            s1 = part([set(r.choice(m, size=3, replace=False)) for _ in range(3)], m)
            s2 = part([set(r.choice(m, size=3, replace=False)) for _ in range(3)], m)
            child = subspace_crossover(s1, s2, rng)
            for c, g1, g2 in zip(child.subspaces, s1.subspaces, s2.subspaces):
                assert c <= g1 | g2

    def test_preserves_subspace_count(self):
        rng = np.random.default_rng(1)
        s1 = part([{0, 1}, {2, 3}, {4}], 5)
        s2 = part([{1, 4}, {0, 2}, {3}], 5)
        assert subspace_crossover(s1, s2, rng).k == 3


class TestMovingMutation:
    def test_zero_probability_is_identity(self):
        s = part([{0, 1}, {2}], 3)
        out = moving_mutation(s, 0.0, np.random.default_rng(0))
        assert as_sets(out) == as_sets(s)

    def test_certain_mutation_copies_one_feature_each(self):
        # p_m=1 on {{0},{1}}: each subspace донates its only feature to the next
        s = part([{0}, {1}], 2)
        out = moving_mutation(
            s, 1.0, FakeRng(randoms=[0.0, 0.0], integers=[0, 0])
        )
        assert as_sets(out) == [{0, 1}, {0, 1}]

    def test_sampled_feature_remains_in_source(self):
        s = part([{0, 1, 2}, {3}], 4)
        out = moving_mutation(s, 1.0, np.random.default_rng(5))
        assert s.subspaces[0] <= out.subspaces[0]
        assert s.subspaces[1] <= out.subspaces[1]

    def test_occurrence_count_never_decreases(self):
        rng = np.random.default_rng(2)
        s = part([{0, 1}, {2, 3}, {1, 4}], 5)
        before = sum(len(x) for x in s.subspaces)
        for _ in range(20):
            out = moving_mutation(s, 0.5, rng)
            assert sum(len(x) for x in out.subspaces) >= before

    def test_snapshot_semantics(self):
        # subspace 1 samples from the ORIGINAL subspace 1, not one augmented
        # by subspace 0's move in the same pass
        s = part([{0}, {1}], 2)
        out = moving_mutation(s, 1.0, FakeRng(randoms=[0.0, 0.0], integers=[0, 0]))
        # had the pass been sequential, subspace 1 could have sampled feature 0
        # (index 0 of {0, 1}) and sent it back; snapshot semantics forces 1
        assert 1 in out.subspaces[0]

    def test_empty_source_skipped(self):
        s = SubspacePartition([set(), {1}], 2)
        out = moving_mutation(s, 1.0, FakeRng(randoms=[0.0, 0.0], integers=[0]))
        assert as_sets(out) == [{1}, {1}]


class TestVanishingMutation:
    def test_unique_feature_never_removed(self):
        s = part([{0}, {1}, {2}], 3)
        rng = np.random.default_rng(3)
        for _ in range(50):
            out = vanishing_mutation(s, rng)
            assert as_sets(out) == as_sets(s)

    def test_removal_rate_matches_occupancy(self):
        # a feature held by all 4 subspaces vanishes from each with p = 3/4
        s = part([{0}, {0}, {0}, {0}], 1)
        rng = np.random.default_rng(4)
        trials = 100_000
        removed = 0
        for _ in range(trials):
            out = vanishing_mutation(s, rng)
            removed += sum(1 for sub in out.subspaces if 0 not in sub)
        rate = removed / (4 * trials)
        assert abs(rate - 0.75) < 0.01

    def test_never_grows_any_subspace(self):
        rng = np.random.default_rng(5)
        s = part([{0, 1, 2}, {1, 2}, {2, 3}], 4)
        out = vanishing_mutation(s, rng)
        twice = vanishing_mutation(out, rng)
        for a, b, c in zip(s.subspaces, out.subspaces, twice.subspaces):
            assert b <= a
            assert c <= b

    def test_counts_use_input_partition(self):
        # feature 0 sits in two subspaces: removal odds are 1/2 per occurrence
        # even if the first occurrence was just removed
        s = part([{0}, {0}], 1)
        out = vanishing_mutation(s, FakeRng(randoms=[0.9, 0.9]))
        assert as_sets(out) == [set(), set()]


class TestAddingMutation:
    def test_fully_used_features_are_untouched(self):
        s = part([{0, 1}, {2}], 3)
        out = adding_mutation(s, np.random.default_rng(6))
        assert as_sets(out) == as_sets(s)

    def test_single_subspace_never_adds(self):
        s = part([{0}], 3)
        rng = np.random.default_rng(7)
        for _ in range(50):
            out = adding_mutation(s, rng)
            assert as_sets(out) == [{0}]

    def test_addition_rate_matches_one_minus_inverse_k(self):
        # one absent feature, K=4: added to each subspace with p = 3/4
        s = part([{0}, {1}, {2}, {3}], 5)
        rng = np.random.default_rng(8)
        trials = 100_000
        added = 0
        for _ in range(trials):
            out = adding_mutation(s, rng)
            added += sum(1 for sub in out.subspaces if 4 in sub)
        rate = added / (4 * trials)
        assert abs(rate - 0.75) < 0.01

    def test_pinned_draws_add_selectively(self):
        s = part([{0}, {1}], 3)  # feature 2 absent, K=2 -> threshold 1/2
        out = adding_mutation(s, FakeRng(randoms=[0.9, 0.3]))
        assert as_sets(out) == [{0, 2}, {1}]


class TestRepair:
    def test_noop_when_all_populated(self):
        s = part([{0}, {1}], 2)
        assert repair_partition(s, np.random.default_rng(9)) is s

    def test_fills_every_empty_subspace(self):
        s = SubspacePartition([set(), {1}, set()], 4)
        out = repair_partition(s, FakeRng(integers=[3, 0]))
        assert as_sets(out) == [{3}, {1}, {0}]


class TestCorrelationInit:
    def make_values(self, seed=0):
        rng = np.random.default_rng(seed)
        n = 400
        a = np.sin(np.linspace(0, 30, n))
        b = rng.normal(size=n)
        # features 0 and 1 follow signal a; features 2 and 3 follow b
        return np.stack([
            a + rng.normal(0, 0.05, n),
            -2.0 * a + rng.normal(0, 0.05, n),
            b + rng.normal(0, 0.05, n),
            0.5 * b + rng.normal(0, 0.05, n),
        ], axis=1)

    def test_correlated_pair_lands_together(self):
        values = self.make_values()
        assignment = correlation_clusters(values, 2)
        assert assignment[0] == assignment[1]
        assert assignment[2] == assignment[3]
        assert assignment[0] != assignment[2]

    def test_k_equals_m_gives_singletons(self):
        values = self.make_values()
        assignment = correlation_clusters(values, 4)
        assert sorted(assignment.tolist()) == [0, 1, 2, 3]

    def test_constant_feature_treated_as_uncorrelated(self):
        values = self.make_values()
        values[:, 3] = 5.0
        assignment = correlation_clusters(values, 2)
        assert len(assignment) == 4  # no NaN blow-up

    def test_same_seed_reproduces_population(self):
        values = self.make_values()
        p1 = init_population_correlation(values, 2, 8, seed=11)
        p2 = init_population_correlation(values, 2, 8, seed=11)
        assert [as_sets(a) for a in p1] == [as_sets(b) for b in p2]

    def test_population_has_no_empty_subspaces(self):
        values = self.make_values()
        for p in init_population_correlation(values, 3, 16, seed=12):
            assert all(p.subspaces)
            assert p.k == 3


class TestPartitionFitness:
    @staticmethod
    def fitness_fixture():
        rng = np.random.default_rng(0)
        n = 2000
        driver = np.sin(2 * np.pi * np.arange(n) / 60.0)
        cols = [driver * s + rng.normal(0, 0.02, n) for s in (1.0, 0.9, 1.1)]
        cols.append(rng.normal(0, 0.5, n))  # pure noise feature
        values = np.stack(cols, axis=1)
        wd = make_windows(values, 6, 2)
        tr, va = split_train_val(wd)
        settings = ProxySettings(channels=2, epochs=3, learning_rate=0.05,
                                 batch_size=32)
        return PartitionFitness(tr.windows, va.windows, settings)

    def test_grouping_noise_with_structure_scores_worse(self):
        fit = self.fitness_fixture()
        mixed = SubspacePartition([{0, 1}, {2, 3}], 4)
        separated = SubspacePartition([{0, 1, 2}, {3}], 4)
        assert fit(separated, 7) > fit(mixed, 7)

    def test_deterministic_for_fixed_seed(self):
        fit = self.fitness_fixture()
        p = SubspacePartition([{0, 1}, {2, 3}], 4)
        assert fit(p, 3) == fit(p, 3)

    def test_fitness_is_never_positive(self):
        fit = self.fitness_fixture()
        p = SubspacePartition([{0, 1, 2}, {3}], 4)
        assert fit(p, 5) <= 0.0


class TestSubspaceLevel:
    def test_end_to_end_small_search(self, tmp_path):
        rng = np.random.default_rng(13)
        n = 800
        driver_a = np.sin(2 * np.pi * np.arange(n) / 40.0)
        driver_b = np.sin(2 * np.pi * np.arange(n) / 95.0 + 1.0)
        values = np.stack([
            driver_a + rng.normal(0, 0.03, n),
            driver_a * 0.8 + rng.normal(0, 0.03, n),
            driver_b + rng.normal(0, 0.03, n),
            driver_b * 1.2 + rng.normal(0, 0.03, n),
        ], axis=1)
        cfg = SubspaceSearchConfig(
            k_subspaces=2, population_size=4, generations=2,
            window_size=4, stride=2,
            proxy=ProxySettings(channels=2, epochs=2, learning_rate=0.05,
                                batch_size=32),
        )
        log = tmp_path / "subspaces.jsonl"
        best, result = evolve_subspace_partition(values, cfg, seed=3, log_path=log)
        assert best.k == 2
        assert all(best.subspaces)
        assert len(result.history) == 2
        assert log.exists()
