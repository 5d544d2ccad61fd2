from dataclasses import fields
from pathlib import Path

import pytest

from thzvr.channel import absorption_coefficient
from thzvr.engine.config import (
    SECTIONS, SimConfig, build_config, dump_config, load_config, with_overrides,
)
from thzvr.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]


def _all_keys():
    return sorted(f"{section}.{f.name}" for section, factory in SECTIONS.items()
                  for f in fields(factory()))


def test_empty_file_gives_defaults_and_lists_every_key(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    cfg, defaulted = load_config(path, environ={})
    assert cfg == SimConfig()
    assert sorted(defaulted) == _all_keys()


def test_defaults_match_reference_parameters():
    cfg, _ = build_config({}, environ={})
    assert (cfg.scene.n_users, cfg.thz.n_mec_antennas, cfg.thz.n_ris_elements) == (5, 30, 20)
    assert cfg.thz.frequency_hz == 3e11
    assert cfg.latency.t_th_downlink == 0.012
    assert cfg.agent.gamma == 0.9


def test_given_keys_are_not_reported_as_defaulted():
    cfg, defaulted = build_config({"scene": {"n_users": 7}}, environ={})
    assert cfg.scene.n_users == 7
    assert "scene.n_users" not in defaulted
    assert "scene.speed" in defaulted


@pytest.mark.parametrize("data", [
    {"scenery": {}},
    {"scene": {"n_user": 3}},
    {"scene": {"n_users": None}},
    {"scene": {"n_users": 0}},
    {"scene": {"n_users": 2.5}},
    {"thz": {"phase_bits": 9}},
    {"agent": {"mode": "greedy"}},
    {"agent": {"codebook_size": 1}},
    {"qoe": {"predicted_axes": ["w"]}},
    {"scene": {"height_range": [1.8, 1.2]}},
    {"agent": {"exhaustive_full": "yes"}},
    {"scene": 5},
])
def test_invalid_configurations_are_rejected(data):
    with pytest.raises(ConfigError):
        build_config(data, environ={})


def test_invalid_yaml_and_missing_file(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("scene: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(bad, environ={})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml", environ={})


def test_environment_overrides_file():
    cfg, defaulted = build_config({"scene": {"n_users": 4}},
                                  environ={"THZVR_SCENE__N_USERS": "9", "THZVR_AGENT__MODE": "random"})
    assert cfg.scene.n_users == 9
    assert cfg.agent.mode == "random"
    assert "agent.mode" not in defaulted


def test_environment_is_read_by_default(monkeypatch):
    monkeypatch.setenv("THZVR_RUN__SLOTS", "12")
    cfg, _ = build_config({})
    assert cfg.run.slots == 12


def test_dump_and_reload_round_trip(tmp_path):
    cfg = with_overrides(SimConfig(), scene__n_users=3, agent__hidden=[16, 8])
    dump_config(cfg, tmp_path / "out" / "effective.yaml")
    reloaded, defaulted = load_config(tmp_path / "out" / "effective.yaml", environ={})
    assert reloaded == cfg
    assert defaulted == []


def test_relative_input_paths_resolve_against_config_file(tmp_path, monkeypatch):
    conf = tmp_path / "conf"
    conf.mkdir()
    (conf / "tau.txt").write_text("3e11 0.0033\n")
    path = conf / "run.yaml"
    path.write_text("thz:\n  absorption_table: tau.txt\n"
                    "predictors:\n  cnn_checkpoint: ckpt/cnn.bin\n  trace_csv: ''\n")
    elsewhere = tmp_path / "elsewhere"
    elsewhere.mkdir()
    monkeypatch.chdir(elsewhere)
    cfg, _ = load_config(path, environ={})
    base = conf.resolve()
    assert cfg.thz.absorption_table == str(base / "tau.txt")
    assert absorption_coefficient(3e11, cfg.thz.absorption_table) == 0.0033
    assert cfg.predictors.cnn_checkpoint == str(base / "ckpt" / "cnn.bin")
    assert cfg.predictors.trace_csv == ""


def test_inline_and_absolute_paths_are_kept(tmp_path):
    table = tmp_path / "tau.txt"
    path = tmp_path / "run.yaml"
    path.write_text(f"thz:\n  absorption_table: {table}\n"
                    "predictors:\n  cnn_checkpoint: ''\n")
    cfg, _ = load_config(path, environ={})
    assert cfg.thz.absorption_table == str(table)
    path.write_text("thz:\n  absorption_table: [[3.0e+11, 0.0033]]\n")
    cfg, _ = load_config(path, environ={})
    assert cfg.thz.absorption_table == [[3e11, 0.0033]]


def test_with_overrides_revalidates():
    cfg = SimConfig()
    assert with_overrides(cfg, thz__n_ris_elements=4).thz.n_ris_elements == 4
    assert cfg.thz.n_ris_elements == 20
    with pytest.raises(ConfigError):
        with_overrides(cfg, thz__n_ris_elements=0)


@pytest.mark.parametrize("name", ["default.yaml", "fast.yaml"])
def test_shipped_configs_load(name, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg, _ = load_config(ROOT / "configs" / name, environ={})
    assert cfg.scene.n_users >= 1
    if isinstance(cfg.thz.absorption_table, str):
        assert absorption_coefficient(cfg.thz.frequency_hz, cfg.thz.absorption_table) > 0
