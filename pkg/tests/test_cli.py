import logging
import os

import pandas as pd
import pytest
import yaml

from thzvr.cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, main, parse_values
from thzvr.errors import ConfigError

SMALL = {
    "scene": {"n_users": 2},
    "thz": {"n_ris_elements": 4},
    "predictors": {"mode": "genie", "los_classifier": "geometric", "cnn_filters": 2,
                   "cnn_hidden": 8, "cnn_epochs": 2, "cnn_batch": 8},
    "agent": {"codebook_size": 4, "hidden": [8], "warmup": 2, "minibatch": 2},
    "run": {"slots": 6},
}


@pytest.fixture(autouse=True)
def restore_root_logger():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def small_config(tmp_path, monkeypatch):
    for name in list(os.environ):
        if name.startswith("THZVR_"):
            monkeypatch.delenv(name)
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump({**SMALL, "run": {**SMALL["run"], "out_dir": str(tmp_path / "run")}}))
    return path


def test_parse_values():
    assert parse_values("5,10, 15") == [5, 10, 15]
    with pytest.raises(ConfigError):
        parse_values("5,ten")


def test_simulate_writes_run_directory(small_config, tmp_path, capsys):
    assert main(["simulate", "--config", str(small_config), "--mode", "random"]) == EXIT_OK
    run = tmp_path / "run"
    for name in ("metrics.csv", "metrics.jsonl", "summary.csv", "config.effective.yaml", "defaults.txt"):
        assert (run / name).exists()
    assert "mean_qoe" in capsys.readouterr().out
    effective = yaml.safe_load((run / "config.effective.yaml").read_text())
    assert effective["agent"]["mode"] == "random"


def test_out_flag_overrides_config(small_config, tmp_path):
    out = tmp_path / "elsewhere"
    assert main(["simulate", "--config", str(small_config), "--out", str(out), "--seed", "4"]) == EXIT_OK
    assert (out / "metrics.csv").exists()


def test_configuration_errors_exit_with_code_2(tmp_path, small_config):
    bad = tmp_path / "bad.yaml"
    bad.write_text("scene:\n  n_users: 0\n")
    assert main(["simulate", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["sweep", "--config", str(small_config), "--axis", "users", "--values", "1,x"]) == EXIT_CONFIG


def test_missing_absorption_table_exits_with_code_2(tmp_path, small_config):
    body = yaml.safe_load(small_config.read_text())
    body["thz"]["absorption_table"] = "no_such_table.txt"
    bad = tmp_path / "no_table.yaml"
    bad.write_text(yaml.safe_dump(body))
    assert main(["simulate", "--config", str(bad)]) == EXIT_CONFIG


def test_other_failures_exit_with_code_3(small_config, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr("thzvr.cli.simulate", broken)
    assert main(["simulate", "--config", str(small_config)]) == EXIT_FAILURE


def test_sweep_writes_table(small_config, tmp_path):
    assert main(["sweep", "--config", str(small_config), "--axis", "users", "--values", "1,2"]) == EXIT_OK
    table = pd.read_csv(tmp_path / "run" / "sweep_users.csv")
    assert list(table["value"]) == [1, 2]


def test_grad_check_passes(capsys):
    assert main(["grad-check", "--seed", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "lstm" in out


def test_pretrain_cnn_saves_checkpoint_and_curve(small_config, tmp_path, capsys):
    out = tmp_path / "ckpt" / "cnn.bin"
    assert main(["pretrain-cnn", "--config", str(small_config), "--scenes", "10", "--out", str(out)]) == EXIT_OK
    assert out.exists()
    curve = pd.read_csv(f"{out}.curve.csv")
    assert list(curve["epoch"]) == [0, 1]
    assert "held-out accuracy" in capsys.readouterr().out


def test_emit_plots_from_simulate_run(small_config, tmp_path):
    assert main(["simulate", "--config", str(small_config)]) == EXIT_OK
    run = tmp_path / "run"
    assert main(["emit-plots", "--in", str(run)]) == EXIT_OK
    figures = run / "figures"
    for stem in ("fig_viewpoint_mse", "fig_reward_slot"):
        assert (figures / f"{stem}.png").exists()
        assert (figures / f"{stem}.csv").exists()


def test_emit_plots_from_sweep_table(tmp_path):
    pd.DataFrame({"value": [5, 10], "mean_qoe": [1.0, 0.5], "mean_t_vr": [0.02, 0.03]}).to_csv(
        tmp_path / "sweep_users.csv", index=False)
    assert main(["emit-plots", "--in", str(tmp_path), "--out", str(tmp_path / "figs")]) == EXIT_OK
    assert (tmp_path / "figs" / "fig_qoe_vs_users.png").exists()
    assert (tmp_path / "figs" / "fig_latency_vs_users.csv").exists()
