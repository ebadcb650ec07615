"""Run artifacts on disk: JSONL generation logs, CSV tables, genome
snapshots, and the manifest that ties every output to its config hash.

All text is UTF-8 with plain newline line endings, and every writer is
deterministic: the same data produces byte-identical files, so reruns of a
seeded experiment can be compared directly.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .evolution import GenerationRecord
from .genome import Genome, genome_from_dict, genome_to_dict

SCHEMA_VERSION = 1


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def config_hash(config_doc: dict) -> str:
    return hashlib.sha256(canonical_json(config_doc).encode("utf-8")).hexdigest()


# ------------------------------------------------------------ JSONL


def write_jsonl(path, records) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(canonical_json(record))
            fh.write("\n")


def read_jsonl(path) -> list[dict]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _maybe_list(values):
    return None if values is None else [float(v) for v in values]


def record_to_doc(record: GenerationRecord) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "generation": record.generation,
        "fitness": _maybe_list(record.fitness),
        "operator_tags": list(record.operator_tags),
        "delta": _maybe_list(record.delta),
        "mean_fitness": record.mean_fitness,
        "max_fitness": record.max_fitness,
        "mean_delta": record.mean_delta,
    }


def record_from_doc(doc: dict) -> GenerationRecord:
    delta = doc.get("delta")
    return GenerationRecord(
        generation=int(doc["generation"]),
        fitness=np.array(doc["fitness"], dtype=float),
        operator_tags=list(doc["operator_tags"]),
        delta=None if delta is None else np.array(delta, dtype=float),
        mean_fitness=float(doc["mean_fitness"]),
        max_fitness=float(doc["max_fitness"]),
        mean_delta=(None if doc.get("mean_delta") is None
                    else float(doc["mean_delta"])),
    )


# ------------------------------------------------------------ CSV


def write_csv(path, header, rows) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(list(row))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path} is empty")
    return rows[0], rows[1:]


def read_csv_column(path, name: str) -> np.ndarray:
    """One named column as floats; a headerless single column also works."""
    header, rows = read_csv(path)
    if name in header:
        k = header.index(name)
        return np.array([float(row[k]) for row in rows], dtype=float)
    if len(header) == 1:
        try:
            first = [float(header[0])]
        except ValueError as err:
            raise ValueError(f"{path} has no column {name!r}") from err
        return np.array(first + [float(row[0]) for row in rows], dtype=float)
    raise ValueError(f"{path} has no column {name!r}")


# ------------------------------------------------------------ genome snapshots


def save_genome_snapshot(path, generation: int, genomes, fitness=None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "generation": int(generation),
        "fitness": _maybe_list(fitness),
        "genomes": [genome_to_dict(g) for g in genomes],
    }
    Path(path).write_text(canonical_json(doc) + "\n", encoding="utf-8")


def load_genome_snapshot(path) -> tuple[int, list[Genome], list[float] | None]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    genomes = [genome_from_dict(entry) for entry in doc["genomes"]]
    return int(doc["generation"]), genomes, doc.get("fitness")


# ------------------------------------------------------------ manifest


def build_manifest(config_doc: dict, master_seed: int, version: str,
                   files: list[tuple[str, str]]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config_doc,
        "config_hash": config_hash(config_doc),
        "master_seed": int(master_seed),
        "version": version,
        "files": [
            {"path": path, "role": role, "config_hash": config_hash(config_doc)}
            for path, role in sorted(files)
        ],
    }


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
