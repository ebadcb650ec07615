"""TOML experiment config: sections, overrides, validation, round trips."""

from pathlib import Path

import pytest

from isingforage.config import (
    ConfigError,
    config_from_doc,
    config_to_doc,
    load_config,
    resolve_output_dir,
)


def write_config(tmp_path, text):
    path = tmp_path / "exp.toml"
    path.write_text(text, encoding="utf-8")
    return path


GOOD = """
[world]
n_organisms = 6
lifetime = 40

[evolution]
generations = 5
population_size = 6
n_selected = 3
n_copy = 2
n_mutants = 2
n_mated = 2

[run]
n_replicates = 2
beta_init = [0.5, 2.0]
master_seed = 7
"""


def test_defaults_without_file():
    config = load_config()
    assert config.run.n_replicates == 1
    assert config.run.beta_init == [1.0]
    assert config.world.lifetime == 2000
    assert config.evolution.generations == 4000


def test_file_sections_applied(tmp_path):
    config = load_config(write_config(tmp_path, GOOD))
    assert config.world.n_organisms == 6
    assert config.evolution.population_size == 6
    assert config.run.beta_init == [0.5, 2.0]
    assert config.run.master_seed == 7
    # untouched fields keep their defaults
    assert config.world.arena_side == 16.0


def test_overrides_beat_file(tmp_path):
    path = write_config(tmp_path, GOOD)
    config = load_config(path, ["world.lifetime=99", "run.master_seed=123",
                                "run.beta_init=[1.5]"])
    assert config.world.lifetime == 99
    assert config.run.master_seed == 123
    assert config.run.beta_init == [1.5]


def test_delta_init_maps_through_inverse_power(tmp_path):
    text = GOOD.replace("beta_init = [0.5, 2.0]", "delta_init = [1.0, 0.0, -2.0]")
    config = load_config(write_config(tmp_path, text))
    assert config.run.beta_init == pytest.approx([0.1, 1.0, 100.0])


def test_beta_and_delta_init_are_exclusive(tmp_path):
    text = GOOD.replace("master_seed = 7",
                        "master_seed = 7\ndelta_init = [0.0]")
    with pytest.raises(ConfigError, match="exclusive"):
        load_config(write_config(tmp_path, text))


def test_unknown_section_and_field_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown config section"):
        load_config(write_config(tmp_path, "[nonsense]\nx = 1\n"))
    with pytest.raises(ConfigError, match="world.no_such_field"):
        load_config(write_config(tmp_path, "[world]\nno_such_field = 1\n"))


def test_run_owned_fields_rejected_in_evolution_section(tmp_path):
    for key in ("seed = 3", "beta_init = 2.0", "delta_stride = 5"):
        with pytest.raises(ConfigError, match="controlled by the run section"):
            load_config(write_config(tmp_path, f"[evolution]\n{key}\n"))


def test_type_mismatches_name_the_field(tmp_path):
    with pytest.raises(ConfigError, match="world.lifetime"):
        load_config(write_config(tmp_path, '[world]\nlifetime = "long"\n'))
    with pytest.raises(ConfigError, match="world.hard_task"):
        load_config(write_config(tmp_path, "[world]\nhard_task = 1\n"))


def test_validation_errors_carry_field_paths(tmp_path):
    with pytest.raises(ConfigError, match="world"):
        load_config(None, ["world.lifetime=-5"])
    with pytest.raises(ConfigError, match="n_replicates"):
        load_config(None, ["run.n_replicates=0"])
    with pytest.raises(ConfigError, match="beta_init"):
        load_config(None, ["run.beta_init=[]"])
    with pytest.raises(ConfigError, match="population_size"):
        load_config(None, ["world.n_organisms=7"])


def test_malformed_overrides_rejected():
    with pytest.raises(ConfigError, match="section.key=value"):
        load_config(None, ["lifetime=40"])
    with pytest.raises(ConfigError, match="unknown config section"):
        load_config(None, ["nope.x=1"])


def test_missing_file_and_bad_toml(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.toml")
    with pytest.raises(ConfigError, match="exp.toml"):
        load_config(write_config(tmp_path, "[world\n"))


def test_doc_round_trip(tmp_path):
    config = load_config(write_config(tmp_path, GOOD))
    doc = config_to_doc(config)
    back = config_from_doc(doc)
    assert config_to_doc(back) == doc


def test_output_root_env_applies_to_relative_dirs(tmp_path, monkeypatch):
    config = load_config(None, ["run.output_dir=myrun"])
    monkeypatch.setenv("ISINGFORAGE_OUTPUT_ROOT", str(tmp_path))
    assert resolve_output_dir(config) == tmp_path / "myrun"
    config_abs = load_config(None, [f"run.output_dir={tmp_path}/fixed"])
    assert resolve_output_dir(config_abs) == tmp_path / "fixed"
    monkeypatch.delenv("ISINGFORAGE_OUTPUT_ROOT")
    assert resolve_output_dir(config) == Path("myrun")
