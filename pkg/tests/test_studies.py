import numpy as np
import pytest

from thzvr.engine.config import build_config
from thzvr.engine.episode import run_training
from thzvr.studies import (
    block_means, cnn_study, episode_rewards, lstm_curve, lstm_window_sweep, mode_comparison,
    monotone_with_slack, relative_change, sweep_trend, viewpoint_comparison,
)

TINY = {
    "scene": {"n_users": 2},
    "thz": {"n_ris_elements": 4},
    "predictors": {"mode": "genie", "los_classifier": "geometric", "window": 3, "gru_hidden": 4,
                   "lstm_hidden": 4, "lstm_minibatch": 16, "cnn_filters": 2, "cnn_hidden": 8,
                   "cnn_batch": 16},
    "agent": {"codebook_size": 4, "hidden": [8], "warmup": 4, "minibatch": 4},
    "run": {"slots": 5},
}


@pytest.fixture
def cfg():
    return build_config(TINY, environ={})[0]


def test_lstm_curve_columns(cfg):
    df = lstm_curve(cfg, np.random.default_rng(0), epochs=3, n_scenes=2, n_slots=15)
    assert list(df.columns) == ["epoch", "train_loss", "val_loss"]
    assert len(df) == 3
    assert np.all(np.isfinite(df[["train_loss", "val_loss"]].to_numpy()))


def test_lstm_window_sweep_rows(cfg):
    df = lstm_window_sweep(cfg, np.random.default_rng(1), windows=(2, 4), repeats=2, epochs=2,
                           n_scenes=2, n_slots=20)
    assert list(df["window"]) == [2, 4]
    assert df["error"].between(0.0, 1.0).all()
    assert (df["stderr"] >= 0).all()


def test_cnn_study_reports_every_user_count(cfg):
    curve, acc = cnn_study(cfg, np.random.default_rng(2), user_counts=(2, 4), train_scenes=6,
                           test_scenes=2, epochs=2)
    assert list(curve["epoch"]) == [0, 1]
    assert list(acc["n_users"]) == [2, 4]
    assert acc["accuracy"].between(0.0, 1.0).all()


def test_viewpoint_comparison_rows(cfg):
    df = viewpoint_comparison(cfg, seeds=[0], slots=12, burn_in=4, window=3)
    assert list(df["mode"]) == ["centralized", "fedavg"]
    assert (df["mse"] >= 0).all()


def test_mode_comparison_and_sweep(cfg):
    modes = mode_comparison(cfg, seeds=[0], episodes=1)
    assert list(modes["mode"]) == ["cdrl", "exhaustive", "random"]
    trend = sweep_trend(cfg, "users", [1, 2], seeds=[0, 1])
    assert list(trend["value"]) == [1, 2]
    assert (trend["qoe_stderr"] >= 0).all()


def test_episode_rewards_rolls_over_episodes(cfg):
    _, results = run_training(cfg, episodes=3)
    df = episode_rewards(results, window=2)
    assert list(df["episode"]) == [0, 1, 2]
    assert df["rolling"].iloc[1] == pytest.approx(df["reward"].iloc[:2].mean())


def test_relative_change_and_block_means():
    assert relative_change([10.0, 20.0, 11.0], 2) == pytest.approx(0.1)
    assert relative_change([4.0, 5.0], 10) == pytest.approx(0.25)
    np.testing.assert_allclose(block_means(np.arange(7.0), 3), [1.0, 4.0])


@pytest.mark.parametrize("values,errors,increasing,expected", [
    ([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], True, True),
    ([3.0, 2.0, 1.0], [0.0, 0.0, 0.0], False, True),
    ([1.0, 2.0, 1.9, 3.0], [0.2, 0.2, 0.2, 0.2], True, True),
    ([1.0, 2.0, 1.0, 3.0], [0.2, 0.2, 0.2, 0.2], True, False),
    ([1.0, 0.9, 2.0, 1.9], [0.2, 0.2, 0.2, 0.2], True, False),
])
def test_monotone_with_slack(values, errors, increasing, expected):
    assert monotone_with_slack(values, errors, increasing) is expected
