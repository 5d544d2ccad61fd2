import os

import numpy as np

from thzvr.engine.config import load_config, with_overrides
from thzvr.engine.episode import run_training
from thzvr.studies import (
    block_means, cnn_study, episode_rewards, lstm_curve, lstm_window_sweep, mode_comparison,
    monotone_with_slack, relative_change, sweep_trend, viewpoint_comparison,
)

# --- CONFIGURATION ---
CONFIG = "configs/fast.yaml"
OUT_DIR = "runs/acceptance"
REPORT = "acceptance_report.txt"
SEED = 0

CONV_EPISODES = 300
CONV_SLOTS = 30
MODE_SEEDS = list(range(10))
MODE_EPISODES = 40
SWEEP_SEEDS = [0, 1, 2]
USERS = [5, 10, 15, 20, 25]
RIS_ELEMENTS = [8, 16, 32, 64]
CNN_USERS = [5, 10, 15, 20, 25]
WINDOWS = [2, 5, 10, 15]
VP_SEEDS = list(range(10))


def check(lines, name, passed, detail):
    status = "PASS" if passed else "FAIL"
    lines.append(f"[{status}] {name}: {detail}")
    print(lines[-1])
    return passed


def convergence(cfg, lines):
    ccfg = with_overrides(cfg, agent__mode="cdrl", run__slots=CONV_SLOTS)
    _, results = run_training(ccfg, episodes=CONV_EPISODES)
    df = episode_rewards(results, 50)
    change = relative_change(df["rolling"], 100)
    check(lines, "C-DRL reward plateau", change < 0.05,
          f"rolling-mean change over the last 100 episodes {change:.2%} (< 5%)")


def predictors(cfg, rng, lines):
    curve = lstm_curve(cfg, rng, epochs=60)
    means = block_means(curve["val_loss"], 10)
    check(lines, "LSTM validation loss", bool(np.all(np.diff(means) <= 0)),
          "10-epoch means " + ", ".join(f"{m:.3f}" for m in means))

    windows = lstm_window_sweep(cfg, rng, WINDOWS)
    best = windows["error"].idxmin()
    at10 = windows.loc[windows["window"] == 10].iloc[0]
    tied = at10["error"] <= windows.loc[best, "error"] + max(at10["stderr"], windows.loc[best, "stderr"])
    check(lines, "LSTM window optimum", bool(tied),
          ", ".join(f"w={w}: {e:.3f}" for w, e in zip(windows["window"], windows["error"])))

    cnn_curve, acc = cnn_study(cfg, rng, CNN_USERS, epochs=150)
    tail = cnn_curve["loss"].to_numpy()
    flat = abs(tail[-10:].mean() - tail[-20:-10].mean()) / max(tail[-20:-10].mean(), 1e-12)
    check(lines, "CNN loss plateau", flat < 0.05, f"last-10 vs previous-10 epoch change {flat:.2%}")
    small = acc[acc["n_users"] <= 15]["accuracy"]
    a5 = acc.loc[acc["n_users"] == 5, "accuracy"].iloc[0]
    a25 = acc.loc[acc["n_users"] == 25, "accuracy"].iloc[0]
    check(lines, "CNN accuracy", bool((small >= 0.9).all() and a25 < a5),
          ", ".join(f"K={k}: {a:.3f}" for k, a in zip(acc["n_users"], acc["accuracy"])))

    vp = viewpoint_comparison(cfg, VP_SEEDS).groupby("mode")["mse"].mean()
    check(lines, "Centralized vs FedAvg viewpoint MSE", vp["centralized"] <= vp["fedavg"],
          f"centralized {vp['centralized']:.3f}, fedavg {vp['fedavg']:.3f}")


def modes(cfg, lines):
    df = mode_comparison(cfg, MODE_SEEDS, MODE_EPISODES)
    q = df.groupby("mode")["mean_qoe"].mean()
    check(lines, "C-DRL vs random", q["cdrl"] >= 1.5 * q["random"],
          f"QoE {q['cdrl']:.4f} vs {q['random']:.4f} (>= 1.5x)")
    check(lines, "C-DRL vs exhaustive", q["cdrl"] >= 0.85 * q["exhaustive"],
          f"QoE {q['cdrl']:.4f} vs {q['exhaustive']:.4f} (>= 0.85x)")


def sweeps(cfg, lines):
    for axis, values, qoe_up in (("users", USERS, False), ("ris-elements", RIS_ELEMENTS, True)):
        t = sweep_trend(cfg, axis, values, SWEEP_SEEDS)
        t.to_csv(f"{OUT_DIR}/sweep_{axis}.csv", index=False, float_format="%.12g")
        check(lines, f"QoE trend vs {axis}",
              monotone_with_slack(t["mean_qoe"], t["qoe_stderr"], increasing=qoe_up),
              ", ".join(f"{v}: {q:.4f}" for v, q in zip(t["value"], t["mean_qoe"])))
        check(lines, f"Latency trend vs {axis}",
              monotone_with_slack(t["mean_t_vr"], t["t_vr_stderr"], increasing=not qoe_up),
              ", ".join(f"{v}: {s:.4g}" for v, s in zip(t["value"], t["mean_t_vr"])))


def main():
    if not os.path.exists(OUT_DIR):
        os.makedirs(OUT_DIR)
    cfg, _ = load_config(CONFIG)
    cfg = with_overrides(cfg, run__seed=SEED)
    rng = np.random.default_rng(SEED)

    lines = []
    print("Starting acceptance-trend study...")
    convergence(cfg, lines)
    predictors(cfg, rng, lines)
    modes(cfg, lines)
    sweeps(cfg, lines)

    passed = sum(line.startswith("[PASS]") for line in lines)
    lines.append(f"{passed}/{len(lines)} checks passed")
    with open(f"{OUT_DIR}/{REPORT}", "w") as f:
        f.write("\n".join(lines) + "\n")
    print(f"Data saved to {OUT_DIR}/{REPORT}")


if __name__ == "__main__":
    main()
