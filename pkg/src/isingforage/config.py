"""Experiment configuration: TOML file with [world], [evolution],
[criticality] and [run] sections, plus command-line overrides.

Precedence is overrides > file > dataclass defaults. The [run] section owns
everything about the experiment as a whole: replicate count, the list of
initial inverse temperatures (either directly or as regime targets, mapped
through beta = 10^-delta), seeding, output location, and measurement
strides. Per-run fields living on EvolutionConfig (seed, beta_init,
delta_stride) are therefore rejected inside [evolution]; the run section is
their single source of truth.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .criticality import CriticalityParams, validate_criticality_params
from .evolution import EvolutionConfig, validate_evolution_config
from .world import WorldConfig, validate_world_config


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field path."""


@dataclass
class RunConfig:
    n_replicates: int = 1
    beta_init: list[float] = field(default_factory=lambda: [1.0])
    output_dir: str = "runs/experiment"
    master_seed: int = 0
    delta_stride: int = 0      # measure per-organism delta every this many generations
    snapshot_stride: int = 0   # extra genome snapshots between first and last
    workers: int = 0           # worker pool size; 0 = hardware parallelism


@dataclass
class ExperimentConfig:
    world: WorldConfig
    evolution: EvolutionConfig
    criticality: CriticalityParams
    run: RunConfig


_SECTIONS = {
    "world": WorldConfig,
    "evolution": EvolutionConfig,
    "criticality": CriticalityParams,
    "run": RunConfig,
}
_RESERVED = {"evolution": ("seed", "beta_init", "delta_stride")}


def _apply(section: str, target, key: str, value) -> None:
    if key in _RESERVED.get(section, ()):
        raise ConfigError(f"{section}.{key} is controlled by the run section")
    if not any(f.name == key for f in dataclasses.fields(target)):
        raise ConfigError(f"unknown config field {section}.{key}")
    current = getattr(target, key)
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{section}.{key} must be a boolean")
    elif isinstance(current, int) and not isinstance(value, bool):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{section}.{key} must be an integer")
    elif isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number")
        value = float(value)
    elif isinstance(current, str):
        if not isinstance(value, str):
            raise ConfigError(f"{section}.{key} must be a string")
    elif isinstance(current, list):
        if not isinstance(value, list):
            raise ConfigError(f"{section}.{key} must be a list")
        value = [float(v) for v in value]
    setattr(target, key, value)


def _parse_override(text: str) -> tuple[str, str, object]:
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    path, raw = text.split("=", 1)
    section, key = path.split(".", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return section, key, value


def load_config(path=None, overrides=()) -> ExperimentConfig:
    """Defaults, then the TOML file, then `--set section.key=value` overrides."""
    config = ExperimentConfig(
        world=WorldConfig(),
        evolution=EvolutionConfig(),
        criticality=CriticalityParams(),
        run=RunConfig(),
    )
    doc = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = tomli.loads(path.read_text(encoding="utf-8"))
        except tomli.TOMLDecodeError as err:
            raise ConfigError(f"config file {path}: {err}") from err
    delta_init = None
    for section, content in doc.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(content, dict):
            raise ConfigError(f"config section [{section}] must be a table")
        for key, value in content.items():
            if section == "run" and key == "delta_init":
                delta_init = value
                continue
            _apply(section, getattr(config, section), key, value)
    if delta_init is not None:
        if "beta_init" in doc.get("run", {}):
            raise ConfigError("run.beta_init and run.delta_init are exclusive")
        config.run.beta_init = [10.0 ** (-float(d)) for d in delta_init]
    for text in overrides:
        section, key, value = _parse_override(text)
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section in override: {section}")
        if section == "run" and key == "delta_init":
            if not isinstance(value, list):
                raise ConfigError("run.delta_init must be a list")
            config.run.beta_init = [10.0 ** (-float(d)) for d in value]
            continue
        _apply(section, getattr(config, section), key, value)
    validate_config(config)
    return config


def validate_config(config: ExperimentConfig) -> None:
    try:
        validate_world_config(config.world)
    except ValueError as err:
        raise ConfigError(f"world: {err}") from err
    try:
        validate_evolution_config(config.evolution)
    except ValueError as err:
        raise ConfigError(f"evolution: {err}") from err
    try:
        validate_criticality_params(config.criticality)
    except ValueError as err:
        raise ConfigError(f"criticality: {err}") from err
    run = config.run
    if run.n_replicates < 1:
        raise ConfigError("run.n_replicates must be at least 1")
    if not run.beta_init or any(b <= 0 for b in run.beta_init):
        raise ConfigError("run.beta_init must be a nonempty list of positives")
    if run.delta_stride < 0 or run.snapshot_stride < 0 or run.workers < 0:
        raise ConfigError("run strides and workers must be nonnegative")
    if not run.output_dir:
        raise ConfigError("run.output_dir must be set")
    if config.world.n_organisms != config.evolution.population_size:
        raise ConfigError(
            "world.n_organisms must equal evolution.population_size "
            f"({config.world.n_organisms} != {config.evolution.population_size})"
        )


def config_to_doc(config: ExperimentConfig) -> dict:
    return {
        "world": dataclasses.asdict(config.world),
        "evolution": dataclasses.asdict(config.evolution),
        "criticality": dataclasses.asdict(config.criticality),
        "run": dataclasses.asdict(config.run),
    }


def config_from_doc(doc: dict) -> ExperimentConfig:
    config = ExperimentConfig(
        world=WorldConfig(**doc["world"]),
        evolution=EvolutionConfig(**doc["evolution"]),
        criticality=CriticalityParams(**doc["criticality"]),
        run=RunConfig(**doc["run"]),
    )
    validate_config(config)
    return config


def resolve_output_dir(config: ExperimentConfig) -> Path:
    """Relative output dirs live under ISINGFORAGE_OUTPUT_ROOT when it is set."""
    out = Path(config.run.output_dir)
    root = os.environ.get("ISINGFORAGE_OUTPUT_ROOT")
    if root and not out.is_absolute():
        out = Path(root) / out
    return out
