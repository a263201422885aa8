"""File formats for genomes, weights, partitions, and ensemble manifests.

Text artifacts are schema-versioned JSON written with sorted keys so that
identical objects always produce identical bytes.  Weights are stored as a
one-line JSON shape manifest followed by a flat little-endian float32
stream; save -> load -> save is bit-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import FeatureScaler
from .ensemble import EnsembleModel, ThresholdedModel
from .nn import ModelGenome, ModelWeights, TrainedModel
from .subspaces import SubspacePartition

SCHEMA_VERSION = 1
_WEIGHT_DTYPE = "<f4"


def _dump_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


def _load_json(path: Path, kind: str) -> dict:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported {kind} schema {payload.get('schema')!r}")
    return payload


def save_genome(genome: ModelGenome, path: str | Path) -> None:
    _dump_json(Path(path), {"schema": SCHEMA_VERSION, **genome.to_dict()})


def load_genome(path: str | Path) -> ModelGenome:
    return ModelGenome.from_dict(_load_json(Path(path), "genome"))


def save_weights(weights: ModelWeights, path: str | Path) -> None:
    tensors = list(weights.named_tensors())
    header = {
        "schema": SCHEMA_VERSION,
        "dtype": _WEIGHT_DTYPE,
        "tensors": [{"name": name, "shape": list(t.shape)} for name, t in tensors],
    }
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for _, t in tensors:
            fh.write(np.ascontiguousarray(t, dtype=_WEIGHT_DTYPE).tobytes())


def load_weights(path: str | Path) -> ModelWeights:
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported weights schema")
        raw = fh.read()
    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        chunk = np.frombuffer(raw, dtype=_WEIGHT_DTYPE, count=count, offset=offset)
        offset += chunk.nbytes
        tensors[entry["name"]] = chunk.reshape(shape).astype(np.float64)

    encoder: list[tuple[np.ndarray, np.ndarray]] = []
    decoder: list[tuple[np.ndarray, np.ndarray]] = []
    for name in tensors:
        side, idx, part = name.split(".")
        target = encoder if side == "encoder" else decoder
        i = int(idx)
        while len(target) <= i:
            target.append((None, None))  # type: ignore[arg-type]
        w, b = target[i]
        target[i] = (tensors[name], b) if part == "weight" else (w, tensors[name])
    return ModelWeights(encoder=encoder, decoder=decoder)


def save_partition(partition: SubspacePartition, path: str | Path) -> None:
    _dump_json(Path(path), {"schema": SCHEMA_VERSION, **partition.to_dict()})


def load_partition(path: str | Path) -> SubspacePartition:
    return SubspacePartition.from_dict(_load_json(Path(path), "partition"))


def save_scaler(scaler: FeatureScaler, path: str | Path) -> None:
    _dump_json(Path(path), {"schema": SCHEMA_VERSION, **scaler.to_dict()})


def load_scaler(path: str | Path) -> FeatureScaler:
    return FeatureScaler.from_dict(_load_json(Path(path), "scaler"))


def save_ensemble(ensemble: EnsembleModel, path: str | Path) -> None:
    """Write the ensemble manifest plus one genome and weights file per member.

    Member files sit next to the manifest and are referenced by relative
    name, so a run directory can be moved as a unit.
    """
    path = Path(path)
    members = []
    for i, member in enumerate(ensemble.members):
        genome_file = f"{path.stem}.member{i}.genome.json"
        weights_file = f"{path.stem}.member{i}.weights.bin"
        save_genome(member.model.genome, path.parent / genome_file)
        save_weights(member.model.weights, path.parent / weights_file)
        members.append({
            "genome": genome_file,
            "weights": weights_file,
            "threshold": member.threshold,
            "subspace": sorted(member.model.subspace or ()),
        })
    _dump_json(path, {
        "schema": SCHEMA_VERSION,
        "partition": ensemble.partition.to_dict(),
        "members": members,
    })


def load_ensemble(path: str | Path) -> EnsembleModel:
    path = Path(path)
    payload = _load_json(path, "ensemble")
    partition = SubspacePartition.from_dict(payload["partition"])
    members = []
    for entry in payload["members"]:
        genome = load_genome(path.parent / entry["genome"])
        weights = load_weights(path.parent / entry["weights"])
        model = TrainedModel(genome, weights, tuple(entry["subspace"]))
        members.append(ThresholdedModel(model=model, threshold=entry["threshold"]))
    return EnsembleModel(members=members, partition=partition)
