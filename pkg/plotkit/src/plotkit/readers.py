"""Readers for the documented run-directory file formats.

Each loader returns plain numpy/python containers and checks just enough
structure to fail loudly on the wrong file: a `schema_version` field other
than 1 or a missing column raises SchemaError instead of producing an
empty figure.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """Input file exists but does not match the documented schema."""


def _check_version(doc: dict, path: Path) -> None:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{path}: schema_version {version!r}, expected {SCHEMA_VERSION}")


def read_jsonl(path: Path) -> list[dict]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                docs.append(json.loads(line))
    for doc in docs:
        _check_version(doc, path)
    if not docs:
        raise SchemaError(f"{path}: no records")
    return docs


def read_csv_rows(path: Path, columns: list[str]) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_json(path: Path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    _check_version(doc, path)
    return doc


def load_generation_logs(run_dir: Path) -> dict[str, list[dict]]:
    """All log_*.jsonl files keyed by stem, each a list of generation docs."""
    run_dir = Path(run_dir)
    paths = sorted(run_dir.glob("log_*.jsonl"))
    if not paths:
        raise FileNotFoundError(f"no log_*.jsonl under {run_dir}")
    return {p.stem: read_jsonl(p) for p in paths}


def load_heatcap(run_dir: Path):
    """Per-organism heat-capacity curves plus the regime table.

    Returns (curves, regime) where curves maps organism id to
    (c_beta, heat_capacity) arrays sorted by c_beta and regime is a list of
    dicts with organism, c_beta_crit, delta, flag.
    """
    run_dir = Path(run_dir)
    rows = read_csv_rows(run_dir / "heatcap.csv",
                         ["organism", "c_beta", "heat_capacity"])
    by_org: dict[int, list[tuple[float, float]]] = {}
    for row in rows:
        by_org.setdefault(int(row["organism"]), []).append(
            (float(row["c_beta"]), float(row["heat_capacity"])))
    curves = {}
    for org, pairs in sorted(by_org.items()):
        pairs.sort()
        arr = np.asarray(pairs, dtype=float)
        curves[org] = (arr[:, 0], arr[:, 1])
    regime = [
        {"organism": int(r["organism"]),
         "c_beta_crit": float(r["c_beta_crit"]),
         "delta": float(r["delta"]),
         "flag": r["flag"]}
        for r in read_csv_rows(run_dir / "regime.csv",
                               ["organism", "c_beta_crit", "delta", "flag"])
    ]
    return curves, regime


def load_generalize(run_dir: Path) -> list[dict]:
    rows = read_csv_rows(Path(run_dir) / "analysis" / "generalize.csv",
                         ["gamma", "t_train", "t_extend", "fitness_train",
                          "fitness_extend", "flag", "cluster"])
    return [
        {"gamma": float(r["gamma"]),
         "t_train": int(r["t_train"]),
         "t_extend": int(r["t_extend"]),
         "fitness_train": float(r["fitness_train"]),
         "fitness_extend": float(r["fitness_extend"]),
         "flag": r["flag"],
         "cluster": r["cluster"]}
        for r in rows
    ]


def load_perturbation(run_dir: Path):
    """Per-seed perturbation samples plus the fit summary JSON."""
    run_dir = Path(run_dir)
    rows = read_csv_rows(run_dir / "analysis" / "perturbation.csv",
                         ["f_pert", "seed", "mean_fitness"])
    samples = [(float(r["f_pert"]), int(r["seed"]), float(r["mean_fitness"]))
               for r in rows]
    fit = read_json(run_dir / "analysis" / "perturbation.json")
    return samples, fit


def load_operators(run_dir: Path):
    """Histogram rows plus the windowing summary JSON."""
    run_dir = Path(run_dir)
    rows = read_csv_rows(run_dir / "analysis" / "operators.csv",
                         ["operator", "bin_left", "bin_right", "count"])
    hist: dict[str, list[tuple[float, float, int]]] = {}
    for r in rows:
        hist.setdefault(r["operator"], []).append(
            (float(r["bin_left"]), float(r["bin_right"]), int(r["count"])))
    meta = read_json(run_dir / "analysis" / "operators.json")
    return hist, meta
