"""Figure emission from run directories: one CSV plus one PNG per figure.

Inputs looked up in the run directory (each optional):
    metrics.jsonl            per-slot records of a simulate run
    sweep_users.csv          aggregate rows of a K sweep
    sweep_ris-elements.csv   aggregate rows of an N sweep
    lstm_curve.csv           epoch, train_loss, val_loss
    lstm_window.csv          window, error, stderr
    cnn_curve.csv            epoch, loss
    cnn_accuracy.csv         n_users, accuracy
    mode_*/metrics.jsonl     per-mode runs for the QoE/latency comparison
"""
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from thzvr.engine.metrics import parse_slot_json  # noqa: E402

log = logging.getLogger(__name__)

ACCENT = "#D50032"
MODE_COLORS = {"cdrl": ACCENT, "exhaustive": "black", "random": "#1f77b4"}

plt.rcParams.update({
    "font.size": 12,
    "axes.labelsize": 13,
    "axes.titlesize": 13,
    "legend.fontsize": 11,
})


def read_jsonl(path):
    lines = Path(path).read_text().splitlines()
    return pd.DataFrame([parse_slot_json(line) for line in lines if line.strip()])


def slot_series(records):
    """Per-slot means from a metrics.jsonl frame."""
    out = pd.DataFrame({
        "episode": records["episode"],
        "slot": records["slot"],
        "reward": records["reward"],
        "viewpoint_mse": records["viewpoint_mse"],
        "mean_qoe": records["qoe"].apply(np.mean),
        "mean_t_vr": records["t_vr"].apply(lambda v: float(np.mean(v))),
        "hit_rate": records["hit"].apply(np.mean),
        "multiplier": records["multiplier"],
    })
    return out


def _finish(fig, ax, out_dir, stem, xlabel, ylabel, title=None):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = Path(out_dir) / f"{stem}.png"
    fig.savefig(path, dpi=300)
    plt.close(fig)
    return path


def _line(df, x, ys, out_dir, stem, xlabel, ylabel, labels=None):
    df.to_csv(Path(out_dir) / f"{stem}.csv", index=False, float_format="%.12g")
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, y in enumerate(ys):
        ax.plot(df[x], df[y], "o-" if len(df) < 30 else "-", lw=1.5,
                color=ACCENT if i == 0 else None, label=(labels or ys)[i])
    if len(ys) > 1:
        ax.legend(frameon=False)
    return _finish(fig, ax, out_dir, stem, xlabel, ylabel)


def rolling(values, window):
    return pd.Series(values).rolling(window, min_periods=1).mean().to_numpy()


def emit_run_figures(records, out_dir, window=50):
    """Viewpoint MSE and reward against slot, rolled over `window` slots."""
    series = slot_series(records)
    last = series[series["episode"] == series["episode"].max()].reset_index(drop=True)
    last = last.assign(viewpoint_mse_rolling=rolling(last["viewpoint_mse"], window),
                       reward_rolling=rolling(last["reward"], window))
    written = [
        _line(last, "slot", ["viewpoint_mse", "viewpoint_mse_rolling"], out_dir,
              "fig_viewpoint_mse", "Time slot", "Viewpoint MSE (deg$^2$)", ["per slot", "rolling"]),
        _line(last, "slot", ["reward", "reward_rolling"], out_dir, "fig_reward_slot",
              "Time slot", "Reward", ["per slot", "rolling"]),
    ]
    per_episode = series.groupby("episode", as_index=False)["reward"].sum()
    if len(per_episode) > 1:
        written.append(_line(per_episode, "episode", ["reward"], out_dir, "fig_reward_episode",
                             "Episode", "Episode reward"))
    return written


def emit_mode_comparison(mode_frames, out_dir, window=50):
    """QoE and VR latency against slot, one line per agent mode."""
    rows = []
    for mode, records in mode_frames.items():
        s = slot_series(records)
        s = s[s["episode"] == s["episode"].max()]
        for slot, q, t in zip(s["slot"], rolling(s["mean_qoe"], window), rolling(s["mean_t_vr"], window)):
            rows.append({"mode": mode, "slot": slot, "mean_qoe": q, "mean_t_vr": t})
    table = pd.DataFrame(rows)
    table.to_csv(Path(out_dir) / "fig_mode_comparison.csv", index=False, float_format="%.12g")
    written = []
    for col, label, stem in (("mean_qoe", "Mean QoE", "fig_qoe_slot"),
                             ("mean_t_vr", "Mean VR latency (s)", "fig_latency_slot")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for mode, part in table.groupby("mode"):
            ax.plot(part["slot"], part[col], lw=1.5, color=MODE_COLORS.get(mode), label=mode)
        ax.legend(frameon=False)
        written.append(_finish(fig, ax, out_dir, stem, "Time slot", label))
    return written


def emit_sweep(table, axis, out_dir):
    xlabel = {"users": "Number of users K", "ris-elements": "Number of RIS elements N"}[axis]
    stem = axis.replace("-", "_")
    return [
        _line(table, "value", ["mean_qoe"], out_dir, f"fig_qoe_vs_{stem}", xlabel, "Mean QoE"),
        _line(table, "value", ["mean_t_vr"], out_dir, f"fig_latency_vs_{stem}", xlabel,
              "Mean VR latency (s)"),
    ]


def emit_plots(in_dir, out_dir=None):
    """Writes every figure whose inputs are present; returns the PNG paths."""
    in_dir = Path(in_dir)
    out_dir = Path(out_dir or in_dir / "figures")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if (in_dir / "metrics.jsonl").exists():
        written += emit_run_figures(read_jsonl(in_dir / "metrics.jsonl"), out_dir)
    modes = {p.parent.name[len("mode_"):]: read_jsonl(p)
             for p in sorted(in_dir.glob("mode_*/metrics.jsonl"))}
    if modes:
        written += emit_mode_comparison(modes, out_dir)
    for axis in ("users", "ris-elements"):
        path = in_dir / f"sweep_{axis}.csv"
        if path.exists():
            written += emit_sweep(pd.read_csv(path), axis, out_dir)
    if (in_dir / "lstm_curve.csv").exists():
        df = pd.read_csv(in_dir / "lstm_curve.csv")
        written.append(_line(df, "epoch", ["train_loss", "val_loss"], out_dir, "fig_lstm_loss",
                             "Epoch", "Cross-entropy", ["train", "validation"]))
    if (in_dir / "lstm_window.csv").exists():
        written.append(_line(pd.read_csv(in_dir / "lstm_window.csv"), "window", ["error"], out_dir,
                             "fig_lstm_window", "Window length", "Direction error"))
    if (in_dir / "cnn_curve.csv").exists():
        written.append(_line(pd.read_csv(in_dir / "cnn_curve.csv"), "epoch", ["loss"], out_dir,
                             "fig_cnn_loss", "Epoch", "Cross-entropy"))
    if (in_dir / "cnn_accuracy.csv").exists():
        written.append(_line(pd.read_csv(in_dir / "cnn_accuracy.csv"), "n_users", ["accuracy"],
                             out_dir, "fig_cnn_accuracy", "Number of users K", "Accuracy"))
    if not written:
        log.warning("no plottable inputs found in %s", in_dir)
    for path in written:
        log.info("Plot saved to %s", path)
    return written
