"""Config file parsing and snapshot tests."""

import pytest

from evoad.config import (RunConfig, config_from_entries, config_snapshot,
                          load_config, parse_flat, write_config)


class TestDefaults:
    def test_reference_genetic_defaults(self):
        cfg = RunConfig()
        assert cfg.subspaces.population_size == 16
        assert cfg.subspaces.generations == 10
        assert cfg.subspaces.mutation_probability == 0.1
        assert cfg.subspaces.crossover_probability == 0.1
        assert cfg.subspaces.k_subspaces == 5
        assert cfg.models.population_size == 24
        assert cfg.models.generations == 16
        assert cfg.models.mutation_probability == 0.5
        assert cfg.models.crossover_probability == 0.5
        assert cfg.finetune.population_size == 24
        assert cfg.finetune.generations == 64
        assert cfg.finetune.mutation_probability == 0.02
        assert cfg.finetune.mutation_power == 1 / 256
        assert cfg.sigma == 5

    def test_reference_bounds(self):
        cfg = RunConfig()
        assert (cfg.bounds.min_layers, cfg.bounds.max_layers) == (3, 6)
        assert (cfg.bounds.min_channels, cfg.bounds.max_channels) == (16, 6144)
        assert cfg.bounds.max_window == 12
        assert cfg.bounds.min_learning_rate == 1e-6
        assert cfg.bounds.max_learning_rate == 0.1


class TestParsing:
    def test_round_trip_through_file(self, tmp_path):
        cfg = RunConfig(train_csv="train.csv", test_csv="test.csv", sigma=3, seed=7)
        path = tmp_path / "run.cfg"
        write_config(cfg, path)
        loaded = load_config(path)
        assert config_snapshot(loaded) == config_snapshot(cfg)

    def test_comments_and_blanks_ignored(self):
        entries = parse_flat("# comment\n\ndata.sigma = 4\n")
        assert entries == {"data.sigma": "4"}

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            config_from_entries({"data.unknown": "1"})

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError):
            parse_flat("data.sigma 4")

    def test_typed_coercion(self):
        cfg = config_from_entries({
            "data.sigma": "2",
            "data.normalize": "false",
            "models.learning_rate": "0.05",
            "bounds.min_channels": "4",
        })
        assert cfg.sigma == 2
        assert cfg.normalize is False
        assert cfg.models.learning_rate == 0.05
        assert cfg.bounds.min_channels == 4
        # the model search bounds follow the shared bounds
        assert cfg.models.bounds.min_channels == 4

    def test_sampled_learning_rate_spelled_out(self):
        cfg = config_from_entries({"models.learning_rate": "sample"})
        assert cfg.models.learning_rate is None
        assert config_snapshot(cfg)["models.learning_rate"] == "sample"

    def test_validate_requires_training_data(self):
        with pytest.raises(ValueError):
            RunConfig().validate()
