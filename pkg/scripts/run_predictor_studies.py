import os

import numpy as np

from thzvr.engine.config import load_config
from thzvr.studies import cnn_study, lstm_curve, lstm_window_sweep, viewpoint_comparison

# --- CONFIGURATION ---
CONFIG = "configs/fast.yaml"
OUT_DIR = "runs/studies"
SEED = 0

# LSTM direction prediction (offline, VRMM walks)
LSTM_EPOCHS = 60
LSTM_LR = 0.1
WINDOWS = [2, 5, 10, 15]
WINDOW_REPEATS = 3
WALK_SCENES = 40
WALK_SLOTS = 80

# CNN LoS classifier
CNN_USERS = [5, 10, 15, 20, 25]
CNN_TRAIN_SCENES = 200
CNN_TEST_SCENES = 40
CNN_EPOCHS = 150

# Viewpoint GRU, centralized vs FedAvg
VP_SEEDS = list(range(10))
VP_SLOTS = 300


def main():
    if not os.path.exists(OUT_DIR):
        os.makedirs(OUT_DIR)
    cfg, _ = load_config(CONFIG)
    rng = np.random.default_rng(SEED)

    print("LSTM loss curve...")
    curve = lstm_curve(cfg, rng, LSTM_EPOCHS, WALK_SCENES, WALK_SLOTS, LSTM_LR)
    curve.to_csv(f"{OUT_DIR}/lstm_curve.csv", index=False, float_format="%.12g")
    print(f"Data saved to {OUT_DIR}/lstm_curve.csv")

    print(f"LSTM window sweep over {WINDOWS}...")
    windows = lstm_window_sweep(cfg, rng, WINDOWS, WINDOW_REPEATS, LSTM_EPOCHS // 2, WALK_SCENES,
                                WALK_SLOTS, LSTM_LR)
    windows.to_csv(f"{OUT_DIR}/lstm_window.csv", index=False, float_format="%.12g")
    print(f"Data saved to {OUT_DIR}/lstm_window.csv")

    print(f"CNN training on {CNN_TRAIN_SCENES} scenes...")
    cnn_curve, accuracy = cnn_study(cfg, rng, CNN_USERS, CNN_TRAIN_SCENES, CNN_TEST_SCENES, CNN_EPOCHS)
    cnn_curve.to_csv(f"{OUT_DIR}/cnn_curve.csv", index=False, float_format="%.12g")
    accuracy.to_csv(f"{OUT_DIR}/cnn_accuracy.csv", index=False, float_format="%.12g")
    print(f"Data saved to {OUT_DIR}/cnn_curve.csv, {OUT_DIR}/cnn_accuracy.csv")
    for k, acc in zip(accuracy["n_users"], accuracy["accuracy"]):
        print(f"  K={k:>2}: accuracy {acc:.3f}")

    print(f"Viewpoint MSE, centralized vs FedAvg over {len(VP_SEEDS)} seeds...")
    vp = viewpoint_comparison(cfg, VP_SEEDS, VP_SLOTS)
    vp.to_csv(f"{OUT_DIR}/viewpoint_modes.csv", index=False, float_format="%.12g")
    print(f"Data saved to {OUT_DIR}/viewpoint_modes.csv")
    print(vp.groupby("mode")["mse"].mean().to_string())


if __name__ == "__main__":
    main()
