import os
import shutil

from thzvr.engine.config import load_config, with_overrides
from thzvr.engine.episode import run_training, simulate
from thzvr.engine.metrics import write_metrics
from thzvr.plots import emit_plots
from thzvr.studies import MODES, sweep_trend

# --- CONFIGURATION ---
CONFIG = "configs/fast.yaml"
OUT_DIR = "runs/final"
STUDIES_DIR = "runs/studies"   # written by run_predictor_studies.py, copied in if present
SEEDS = [0, 1, 2]
TRAIN_EPISODES = 20
USERS = [5, 10, 15, 20, 25]
RIS_ELEMENTS = [8, 16, 32, 64]
STUDY_FILES = ["lstm_curve.csv", "lstm_window.csv", "cnn_curve.csv", "cnn_accuracy.csv"]


def run_modes(cfg):
    """Trained C-DRL against both baselines on the same seed, one directory per mode."""
    for mode in MODES:
        mcfg = with_overrides(cfg, agent__mode=mode)
        print(f"Running mode {mode}...")
        if mode == "cdrl":
            _, results = run_training(mcfg, episodes=TRAIN_EPISODES)
            write_metrics(results[-1].records, f"{OUT_DIR}/mode_{mode}")
        else:
            simulate(mcfg, f"{OUT_DIR}/mode_{mode}")
        print(f"Data saved to {OUT_DIR}/mode_{mode}/metrics.csv")


def run_sweeps(cfg):
    for axis, values in (("users", USERS), ("ris-elements", RIS_ELEMENTS)):
        print(f"Sweeping {axis} over {values}...")
        table = sweep_trend(cfg, axis, values, SEEDS)
        table.to_csv(f"{OUT_DIR}/sweep_{axis}.csv", index=False, float_format="%.12g")
        print(f"Data saved to {OUT_DIR}/sweep_{axis}.csv")


def main():
    if not os.path.exists(OUT_DIR):
        os.makedirs(OUT_DIR)
    cfg, _ = load_config(CONFIG)

    print("Reference run...")
    simulate(cfg, OUT_DIR)
    run_modes(cfg)
    run_sweeps(cfg)

    for name in STUDY_FILES:
        src = os.path.join(STUDIES_DIR, name)
        if os.path.exists(src):
            shutil.copy(src, OUT_DIR)
        else:
            print(f"  {src} missing; run scripts/run_predictor_studies.py first")

    for path in emit_plots(OUT_DIR):
        print(f"Plot saved to {path}")


if __name__ == "__main__":
    main()
