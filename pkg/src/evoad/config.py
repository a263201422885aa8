"""Run configuration: defaults, flat dotted-key config files, and snapshots.

Config files are plain text, one `section.key = value` per line, `#` for
comments.  Every genetic hyperparameter has a key whose default is the
reference value (subspaces 16/10 at p_m 0.1, models 24/16 at p_m 0.5,
fine-tuning 24/64 at p_m 0.02 with power 1/256), so an empty file is a
valid configuration apart from the dataset paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .finetune import FineTuneConfig
from .modelsearch import ModelSearchConfig
from .nn import GenomeBounds
from .subspaces import SubspaceSearchConfig


@dataclass
class RunConfig:
    train_csv: str = ""
    test_csv: str = ""
    sigma: int = 5
    normalize: bool = True
    subspaces: SubspaceSearchConfig = field(default_factory=SubspaceSearchConfig)
    models: ModelSearchConfig = field(default_factory=ModelSearchConfig)
    finetune: FineTuneConfig = field(default_factory=FineTuneConfig)
    bounds: GenomeBounds = field(default_factory=GenomeBounds)
    final_epochs: int = 30
    final_batch_size: int = 64
    final_stride: int = 1
    threshold_percentile: float = 99.9
    workers: int = 1
    seed: int = 0
    out_dir: str = "runs"

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        # the model search and the proxy share the genome bounds
        self.models = replace(self.models, bounds=self.bounds)

    def validate(self) -> None:
        if not self.train_csv:
            raise ValueError("data.train_csv is required")
        if self.sigma < 1:
            raise ValueError("data.sigma must be >= 1")
        if not 1 <= self.subspaces.k_subspaces <= 5:
            raise ValueError("subspaces.k must lie in [1, 5]")


# flat key -> (attribute path, type); "optfloat" admits the string "sample"
_FIELDS: dict[str, tuple[str, str]] = {
    "data.train_csv": ("train_csv", "str"),
    "data.test_csv": ("test_csv", "str"),
    "data.sigma": ("sigma", "int"),
    "data.normalize": ("normalize", "bool"),
    "subspaces.k": ("subspaces.k_subspaces", "int"),
    "subspaces.population_size": ("subspaces.population_size", "int"),
    "subspaces.generations": ("subspaces.generations", "int"),
    "subspaces.mutation_probability": ("subspaces.mutation_probability", "float"),
    "subspaces.crossover_probability": ("subspaces.crossover_probability", "float"),
    "subspaces.reassign_probability": ("subspaces.reassign_probability", "float"),
    "subspaces.window_size": ("subspaces.window_size", "int"),
    "subspaces.stride": ("subspaces.stride", "int"),
    "subspaces.proxy_channels": ("subspaces.proxy.channels", "int"),
    "subspaces.proxy_epochs": ("subspaces.proxy.epochs", "int"),
    "subspaces.proxy_learning_rate": ("subspaces.proxy.learning_rate", "float"),
    "subspaces.proxy_batch_size": ("subspaces.proxy.batch_size", "int"),
    "models.population_size": ("models.population_size", "int"),
    "models.generations": ("models.generations", "int"),
    "models.mutation_probability": ("models.mutation_probability", "float"),
    "models.crossover_probability": ("models.crossover_probability", "float"),
    "models.epochs": ("models.epochs", "int"),
    "models.batch_size": ("models.batch_size", "int"),
    "models.stride": ("models.stride", "int"),
    "models.layer_kind": ("models.layer_kind", "str"),
    "models.kernel_size": ("models.kernel_size", "int"),
    "models.activation": ("models.activation", "str"),
    "models.learning_rate": ("models.learning_rate", "optfloat"),
    "models.selection": ("models.selection", "str"),
    "models.diverse_fraction": ("models.diverse_fraction", "float"),
    "bounds.min_layers": ("bounds.min_layers", "int"),
    "bounds.max_layers": ("bounds.max_layers", "int"),
    "bounds.min_channels": ("bounds.min_channels", "int"),
    "bounds.max_channels": ("bounds.max_channels", "int"),
    "bounds.max_window": ("bounds.max_window", "int"),
    "bounds.min_learning_rate": ("bounds.min_learning_rate", "float"),
    "bounds.max_learning_rate": ("bounds.max_learning_rate", "float"),
    "bounds.max_channel_growth": ("bounds.max_channel_growth", "int"),
    "finetune.population_size": ("finetune.population_size", "int"),
    "finetune.generations": ("finetune.generations", "int"),
    "finetune.mutation_probability": ("finetune.mutation_probability", "float"),
    "finetune.mutation_power": ("finetune.mutation_power", "float"),
    "finetune.deviation_factor": ("finetune.deviation_factor", "float"),
    "finetune.stagnation_window": ("finetune.stagnation_window", "int"),
    "train.final_epochs": ("final_epochs", "int"),
    "train.final_batch_size": ("final_batch_size", "int"),
    "train.final_stride": ("final_stride", "int"),
    "ensemble.threshold_percentile": ("threshold_percentile", "float"),
    "run.workers": ("workers", "int"),
    "run.seed": ("seed", "int"),
    "run.out_dir": ("out_dir", "str"),
}


def _coerce(raw: str, kind: str):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        lowered = raw.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "optfloat":
        return None if raw.lower() in ("sample", "none") else float(raw)
    return raw


def _get_attr(cfg: RunConfig, path: str):
    obj = cfg
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def _set_attr(cfg: RunConfig, path: str, value) -> None:
    parts = path.split(".")
    obj = cfg
    for part in parts[:-1]:
        obj = getattr(obj, part)
    # nested configs are dataclasses; frozen ones are replaced on the parent
    if isinstance(obj, (GenomeBounds,)):
        parent_path = parts[:-2]
        holder = cfg
        for part in parent_path:
            holder = getattr(holder, part)
        setattr(holder, parts[-2], replace(obj, **{parts[-1]: value}))
    else:
        setattr(obj, parts[-1], value)


def parse_flat(text: str) -> dict[str, str]:
    """Parse `key = value` lines; blank lines and # comments are ignored."""
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def config_from_entries(entries: dict[str, str]) -> RunConfig:
    cfg = RunConfig()
    for key, raw in entries.items():
        if key not in _FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        path, kind = _FIELDS[key]
        _set_attr(cfg, path, _coerce(raw, kind))
    cfg.models = replace(cfg.models, bounds=cfg.bounds)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    return config_from_entries(parse_flat(Path(path).read_text(encoding="utf-8")))


def config_snapshot(cfg: RunConfig) -> dict[str, str]:
    """The full flat key set, defaults included, as written to the run directory."""
    snapshot = {}
    for key in sorted(_FIELDS):
        path, _ = _FIELDS[key]
        value = _get_attr(cfg, path)
        snapshot[key] = "sample" if value is None else (
            str(value).lower() if isinstance(value, bool) else str(value)
        )
    return snapshot


def write_config(cfg: RunConfig, path: str | Path) -> None:
    lines = [f"{key} = {value}" for key, value in config_snapshot(cfg).items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
