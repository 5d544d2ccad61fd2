"""Desk-scale trend studies: predictor curves, mode comparison and sweeps.

Each study returns a pandas frame whose columns match the CSV inputs that
`thzvr.plots.emit_plots` looks for.
"""
import logging

import numpy as np
import pandas as pd
from scipy import stats

from thzvr.engine.config import with_overrides
from thzvr.engine.episode import SWEEP_AXES, run_episode, run_training
from thzvr.engine.metrics import aggregate
from thzvr.engine.world import room_of, scene_factory
from thzvr.nn import RecurrentNet
from thzvr.predictors.los_cnn import generate_dataset, train_cnn
from thzvr.predictors.mobility import (
    N_DIRECTIONS, N_FEATURES, direction_dataset, direction_error, train_epochs, vrmm_trajectories,
)
from thzvr.predictors.traces import synthetic_traces
from thzvr.predictors.viewpoint import ViewpointPredictor, viewpoint_mse

log = logging.getLogger(__name__)

MODES = ("cdrl", "exhaustive", "random")


def _split(X, y, rng, val_frac=0.2):
    order = rng.permutation(len(X))
    n_val = max(1, int(len(X) * val_frac))
    val, train = order[:n_val], order[n_val:]
    return X[train], y[train], X[val], y[val]


def _walks(cfg, n_scenes, n_slots, rng):
    return vrmm_trajectories(scene_factory(cfg), n_scenes, n_slots, rng, room_of(cfg))


def _lstm(cfg, X, y, rng, epochs, lr, X_val=None, y_val=None):
    p = cfg.predictors
    model = RecurrentNet("lstm", N_FEATURES, p.lstm_hidden, N_DIRECTIONS, rng, loss="xent")
    curves = train_epochs(model, X, y, epochs, lr, p.lstm_minibatch, rng, X_val, y_val)
    return model, curves


def lstm_curve(cfg, rng, epochs=60, n_scenes=20, n_slots=60, lr=0.1):
    """Offline LSTM training on VRMM walks: per-epoch train and validation loss."""
    s = cfg.scene
    X, y = direction_dataset(_walks(cfg, n_scenes, n_slots, rng), cfg.predictors.window,
                             s.room_width, s.speed)
    X_tr, y_tr, X_val, y_val = _split(X, y, rng)
    _, (train, val) = _lstm(cfg, X_tr, y_tr, rng, epochs, lr, X_val, y_val)
    return pd.DataFrame({"epoch": np.arange(epochs), "train_loss": train, "val_loss": val})


def lstm_window_sweep(cfg, rng, windows=(2, 5, 10, 15), repeats=3, epochs=30, n_scenes=20,
                      n_slots=60, lr=0.1):
    """Held-out direction error per window length, mean and standard error over repeats."""
    s = cfg.scene
    walks = _walks(cfg, n_scenes, n_slots, rng)
    rows = []
    for window in windows:
        X, y = direction_dataset(walks, window, s.room_width, s.speed)
        errors = []
        for _ in range(repeats):
            X_tr, y_tr, X_val, y_val = _split(X, y, rng)
            model, _ = _lstm(cfg, X_tr, y_tr, rng, epochs, lr)
            errors.append(direction_error(model, X_val, y_val))
        rows.append({"window": window, "error": float(np.mean(errors)),
                     "stderr": float(stats.sem(errors)) if repeats > 1 else 0.0})
        log.info("window %d: direction error %.4f", window, rows[-1]["error"])
    return pd.DataFrame(rows)


def cnn_study(cfg, rng, user_counts=(5, 10, 15, 20, 25), train_scenes=200, test_scenes=40,
              epochs=None, pca_components=None):
    """One classifier trained on scenes of mixed K; returns (loss curve, accuracy per K)."""
    p = cfg.predictors
    make = scene_factory(cfg)
    room = room_of(cfg)
    tall = float(np.mean(cfg.scene.height_range))

    def mixed(r):
        return make(r, int(r.choice(user_counts)))

    images, labels = generate_dataset(mixed, train_scenes, rng, room, tall)
    clf, curve = train_cnn(images, labels, rng, epochs or p.cnn_epochs, p.cnn_batch, room,
                           p.cnn_filters, p.cnn_hidden, p.cnn_lr,
                           p.pca_components if pca_components is None else pca_components)
    rows = []
    for k in user_counts:
        test_images, test_labels = generate_dataset(lambda r, k=k: make(r, k), test_scenes, rng,
                                                    room, tall)
        rows.append({"n_users": k, "accuracy": clf.accuracy(test_images, test_labels)})
    curve_df = pd.DataFrame({"epoch": np.arange(len(curve)), "loss": curve})
    return curve_df, pd.DataFrame(rows)


def viewpoint_comparison(cfg, seeds, slots=300, burn_in=100, window=50):
    """Rolling viewpoint MSE after the burn-in, centralized vs FedAvg, one row per seed and mode."""
    p = cfg.predictors
    axes = cfg.qoe.predicted_axes
    rows = []
    for seed in seeds:
        traces = synthetic_traces(cfg.scene.n_users, slots, np.random.default_rng(seed))
        for mode in ("centralized", "fedavg"):
            vp = ViewpointPredictor(
                cfg.scene.n_users, np.random.default_rng(seed + 1), mode=mode, axes=axes,
                window=p.window, hidden=p.gru_hidden, lr=p.gru_lr, optimizer=p.gru_optimizer,
                replay=p.gru_replay, local_steps=p.fed_local_steps)
            errors = []
            for t in range(slots):
                errors.append(viewpoint_mse(vp.predict(), traces[:, t], axes))
                vp.update(traces[:, t])
            rolled = pd.Series(errors).rolling(window, min_periods=1).mean().to_numpy()
            rows.append({"seed": seed, "mode": mode, "mse": float(np.mean(rolled[burn_in:]))})
    return pd.DataFrame(rows)


def mode_comparison(cfg, seeds, episodes=20, los_classifier=None):
    """Greedy evaluation episode after training, per seed and agent mode."""
    rows = []
    for seed in seeds:
        for mode in MODES:
            mcfg = with_overrides(cfg, agent__mode=mode, run__seed=seed)
            agent = None
            if mode == "cdrl":
                agent, _ = run_training(mcfg, episodes=episodes, los_classifier=los_classifier)
            result = run_episode(mcfg, agent, seed, episode=episodes, train=False,
                                 los_classifier=los_classifier)
            summary = aggregate(result.records, cfg.latency.latency_cap_s)
            rows.append({"seed": seed, "mode": mode, "mean_qoe": summary["mean_qoe"],
                         "mean_t_vr": summary["mean_t_vr"]})
            log.info("seed %d %s: mean QoE %.4f", seed, mode, summary["mean_qoe"])
    return pd.DataFrame(rows)


def sweep_trend(cfg, axis, values, seeds, episodes=1):
    """Mean QoE / VR latency per axis value with standard errors across seeds."""
    rows = []
    for value in values:
        qoes, lats = [], []
        for seed in seeds:
            vcfg = with_overrides(cfg, **{SWEEP_AXES[axis]: value, "run__seed": seed})
            _, results = run_training(vcfg, episodes=episodes)
            summary = aggregate(results[-1].records, cfg.latency.latency_cap_s)
            qoes.append(summary["mean_qoe"])
            lats.append(summary["mean_t_vr"])
        many = len(seeds) > 1
        rows.append({"value": value, "mean_qoe": float(np.mean(qoes)),
                     "qoe_stderr": float(stats.sem(qoes)) if many else 0.0,
                     "mean_t_vr": float(np.mean(lats)),
                     "t_vr_stderr": float(stats.sem(lats)) if many else 0.0})
    return pd.DataFrame(rows)


def episode_rewards(results, window=50):
    rewards = [r.total_reward for r in results]
    rolling = pd.Series(rewards).rolling(window, min_periods=1).mean().to_numpy()
    return pd.DataFrame({"episode": np.arange(len(rewards)), "reward": rewards, "rolling": rolling})


def relative_change(series, span):
    """|last − value `span` entries earlier| / |value `span` entries earlier|."""
    values = np.asarray(series, dtype=float)
    span = min(span, len(values) - 1)
    ref = values[-1 - span]
    return abs(values[-1] - ref) / max(abs(ref), 1e-12)


def block_means(values, block):
    values = np.asarray(values, dtype=float)
    n = len(values) // block
    return values[:n * block].reshape(n, block).mean(axis=1)


def monotone_with_slack(values, errors, increasing, max_inversions=1):
    """Trend holds with at most `max_inversions` adjacent inversions, each within one standard error."""
    values = np.asarray(values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    steps = np.diff(values) if increasing else -np.diff(values)
    bad = np.flatnonzero(steps < 0)
    if len(bad) > max_inversions:
        return False
    return all(-steps[i] <= max(errors[i], errors[i + 1]) for i in bad)
