import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from thzvr.channel import build_channels
from thzvr.engine.config import build_config, with_overrides
from thzvr.engine.episode import (
    episode_codebook, n_actions, run_episode, run_experiment, run_training, simulate,
)
from thzvr.engine.metrics import aggregate, parse_slot_json, read_metrics, write_metrics
from thzvr.engine.slot import run_slot, score_config
from thzvr.engine.world import build_world
from thzvr.errors import ConfigError, SimulationError
from thzvr.geometry import LinkState
from thzvr.latency import qoe
from thzvr.nn.params import ParameterTree
from thzvr.phy import PhaseConfig, downlink_rates, reflection_matrix, uplink_rates
from thzvr.plots import read_jsonl

BASE = {
    "scene": {"n_users": 3},
    "thz": {"n_ris_elements": 6},
    "predictors": {"mode": "genie", "los_classifier": "geometric", "window": 3,
                   "gru_hidden": 4, "lstm_hidden": 4, "lstm_minibatch": 8},
    "agent": {"mode": "random", "codebook_size": 8, "hidden": [8], "warmup": 4,
              "minibatch": 4, "eps_decay_slots": 20},
    "run": {"slots": 10, "seed": 3},
}


def _cfg(**overrides):
    cfg, _ = build_config(BASE, environ={})
    return with_overrides(cfg, **overrides) if overrides else cfg


def _slot_channels(world, flags=None):
    s = world.cfg.scene
    return build_channels(world.scene, world.params, np.deg2rad(s.mec_broadside_deg),
                          np.deg2rad(s.ris_broadside_deg), flags=flags)


def test_latency_budget_adds_up_per_user():
    result = run_episode(_cfg())
    assert len(result.records) == 10
    for rec in result.records:
        assert len(rec.users) == 3
        for u in rec.users:
            assert u.t_vr == pytest.approx(u.t_uplink + u.t_render + u.t_downlink)


def test_genie_predictions_are_exact():
    result = run_episode(_cfg())
    for rec in result.records:
        assert rec.viewpoint_mse == 0.0
        assert all(u.hit == 1 and u.los_pred == u.los_true for u in rec.users)


def test_first_uplink_uses_all_zero_phases():
    cfg = _cfg()
    world = build_world(cfg, seed=5)
    world.codebook = episode_codebook(world)
    rec = run_slot(world)
    zero = reflection_matrix(PhaseConfig.zeros(6, cfg.thz.phase_bits))
    expected = uplink_rates(_slot_channels(world), zero, cfg.thz.tx_power_w, world.noise_up)
    np.testing.assert_allclose([u.rate_up for u in rec.users], expected, rtol=1e-12)


def test_exhaustive_genie_slot_matches_hand_composed_oracle():
    cfg = _cfg(agent__mode="exhaustive")
    world = build_world(cfg, seed=11)
    world.codebook = episode_codebook(world)
    rec = run_slot(world)
    channels = _slot_channels(world)
    flags = list(world.scene.los_flags)
    values = []
    for phase_cfg in world.codebook:
        rates = downlink_rates(channels, reflection_matrix(phase_cfg), flags,
                               cfg.thz.tx_power_w, world.noise_down)
        values.append(sum(qoe(1, r, r, cfg.qoe.r_th, cfg.qoe.q_min).qoe for r in rates))
    assert rec.action == int(np.argmax(values))
    assert rec.reward == pytest.approx(max(values), rel=1e-12)


def test_all_los_slot_scores_every_configuration_alike():
    cfg = _cfg()
    world = build_world(cfg, seed=2)
    world.codebook = episode_codebook(world)
    flags = [LinkState.LOS] * 3
    score = score_config(world, _slot_channels(world, flags), flags, [1, 1, 1], None)
    values = [score(c) for c in world.codebook]
    assert values == [values[0]] * len(values)


def test_failing_phase_is_named(monkeypatch):
    def boom(*args, **kwargs):
        raise FloatingPointError("overflow")

    monkeypatch.setattr("thzvr.engine.slot.downlink_rates", boom)
    with pytest.raises(SimulationError) as exc:
        run_episode(_cfg())
    assert (exc.value.slot, exc.value.phase) == (0, "downlink")
    assert "downlink" in str(exc.value)


def test_cdrl_agent_persists_across_episodes(tmp_path):
    cfg = _cfg(agent__mode="cdrl", run__checkpoint_dir=str(tmp_path / "ckpt"))
    agent, results = run_training(cfg, episodes=2)
    assert [r.episode for r in results] == [0, 1]
    assert agent.act_steps == 20
    assert agent.n_actions == n_actions(cfg) == 8
    assert agent.train_steps > 0
    assert agent.multiplier >= 0.0
    assert (tmp_path / "ckpt" / "agent.eval.bin").exists()
    assert all(0 <= rec.action < 8 for r in results for rec in r.records)
    assert [rec.epsilon for rec in results[0].records[:3]] == [1.0, 1.0, 1.0]


def test_learned_predictors_run_with_geometric_los():
    cfg = _cfg(predictors__mode="learned", agent__mode="cdrl", run__slots=8)
    result = run_episode(cfg)
    assert len(result.records) == 8
    assert all(np.isfinite(rec.viewpoint_mse) for rec in result.records)


def test_learned_predictors_are_checkpointed(tmp_path):
    cfg = _cfg(predictors__mode="learned", run__slots=6, run__checkpoint_dir=str(tmp_path))
    run_episode(cfg)
    gru = ParameterTree.load(tmp_path / "viewpoint_gru.bin")
    lstm = ParameterTree.load(tmp_path / "direction_lstm.bin")
    assert gru.names() and all(name.startswith("y.") for name in gru.names())
    assert lstm.size > 0


def test_simulation_is_deterministic(tmp_path):
    cfg = _cfg(predictors__mode="learned", agent__mode="cdrl", run__slots=12)
    simulate(cfg, tmp_path / "a")
    simulate(cfg, tmp_path / "b")
    for name in ("metrics.csv", "metrics.jsonl", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_outputs_and_aggregate(tmp_path):
    cfg = _cfg()
    records, summary = simulate(cfg, tmp_path, defaulted=["scene.speed"])
    assert (tmp_path / "config.effective.yaml").exists()
    assert (tmp_path / "defaults.txt").read_text() == "scene.speed\n"
    df = read_metrics(tmp_path / "metrics.csv")
    assert len(df) == 10 * 3
    assert summary["mean_qoe"] == pytest.approx(df["qoe"].mean(), rel=1e-9, abs=1e-9)
    assert summary["mean_reward"] == pytest.approx(np.mean([r.reward for r in records]))
    assert len((tmp_path / "metrics.jsonl").read_text().splitlines()) == 10
    windowed = aggregate(records, window=(0, 5))
    assert windowed["mean_qoe"] == pytest.approx(df[df["slot"] < 5]["qoe"].mean(), rel=1e-9, abs=1e-9)


def test_vr_budget_violations_are_counted():
    cfg = _cfg()
    result = run_episode(cfg)
    for rec in result.records:
        assert rec.vr_violations == sum(u.t_vr > cfg.latency.t_th_vr for u in rec.users)
    df = pd.DataFrame([row for rec in result.records for row in rec.user_rows()])
    summary = aggregate(result.records)
    assert summary["vr_violation_rate"] == pytest.approx((df["t_vr"] > cfg.latency.t_th_vr).mean())
    strict = run_episode(_cfg(latency__t_th_vr=1e-12))
    assert all(rec.vr_violations == 3 for rec in strict.records)
    assert aggregate(strict.records)["vr_violation_rate"] == 1.0


def _reject_constant(token):
    raise ValueError(f"non-standard JSON token {token}")


def test_jsonl_is_strict_json_and_decodes_back(tmp_path):
    rec = run_episode(_cfg(run__slots=2)).records[0]
    users = (replace(rec.users[0], t_vr=float("inf"), rate_down=0.0),) + rec.users[1:]
    dead = replace(rec, train_loss=float("nan"), users=users)
    line = dead.to_json()
    body = json.loads(line, parse_constant=_reject_constant)
    assert body["train_loss"] is None
    assert body["t_vr"][0] == "inf"
    write_metrics([dead], tmp_path)
    frame = read_jsonl(tmp_path / "metrics.jsonl")
    assert np.isnan(frame["train_loss"][0])
    assert frame["t_vr"][0][0] == float("inf")
    assert frame["t_vr"][0][1:] == [u.t_vr for u in rec.users[1:]]
    assert parse_slot_json(line)["vr_violations"] == dead.vr_violations


def test_sweep_over_users(tmp_path):
    cfg = _cfg(run__slots=4)
    table = run_experiment(cfg, "users", [1, 2, 3, 4, 5], tmp_path)
    assert list(table["value"]) == [1, 2, 3, 4, 5]
    assert (tmp_path / "sweep_users.csv").exists()
    assert len(read_metrics(tmp_path / "users_4" / "metrics.csv")) == 4 * 4
    with pytest.raises(ConfigError):
        run_experiment(cfg, "bandwidth", [1], tmp_path)


def test_parallel_sweep_matches_serial(tmp_path):
    cfg = _cfg(run__slots=4)
    serial = run_experiment(cfg, "ris-elements", [4, 8], tmp_path / "s", workers=1)
    parallel = run_experiment(cfg, "ris-elements", [4, 8], tmp_path / "p", workers=2)
    pd.testing.assert_frame_equal(serial, parallel)


@pytest.mark.slow
def test_exhaustive_beats_random_on_average():
    means = {}
    for mode in ("exhaustive", "random"):
        cfg = _cfg(agent__mode=mode, run__slots=100, agent__codebook_size=32)
        means[mode] = run_episode(cfg).mean_qoe
    assert means["exhaustive"] > means["random"]
