import os

from thzvr.engine.config import load_config, with_overrides
from thzvr.engine.episode import run_training
from thzvr.studies import episode_rewards, relative_change

# --- CONFIGURATION ---
CONFIG = "configs/fast.yaml"
OUT_DIR = "runs/convergence"
EPISODES = 300
SLOTS_PER_EPISODE = 30
ROLLING = 50      # episodes in the rolling mean
PLATEAU_SPAN = 100
PLATEAU_TOL = 0.05
SEED = 0


def main():
    if not os.path.exists(OUT_DIR):
        os.makedirs(OUT_DIR)

    cfg, _ = load_config(CONFIG)
    cfg = with_overrides(cfg, agent__mode="cdrl", run__slots=SLOTS_PER_EPISODE, run__seed=SEED,
                         run__checkpoint_dir=os.path.join(OUT_DIR, "checkpoints"))
    print(f"Training C-DRL for {EPISODES} episodes of {SLOTS_PER_EPISODE} slots...")
    agent, results = run_training(cfg, episodes=EPISODES)

    df = episode_rewards(results, ROLLING)
    df.to_csv(f"{OUT_DIR}/episode_rewards.csv", index=False, float_format="%.12g")
    print(f"Data saved to {OUT_DIR}/episode_rewards.csv")

    change = relative_change(df["rolling"], PLATEAU_SPAN)
    status = "plateau" if change < PLATEAU_TOL else "still moving"
    print(f"Rolling reward change over the last {PLATEAU_SPAN} episodes: {change:.2%} ({status})")
    print(f"Final multiplier: {agent.multiplier:.4f}, epsilon: {agent.epsilon:.3f}")

    try:
        import matplotlib.pyplot as plt
        plt.figure(figsize=(6, 4))
        plt.plot(df["episode"], df["reward"], color="gray", alpha=0.4, lw=1, label="episode")
        plt.plot(df["episode"], df["rolling"], color="#D50032", lw=2, label=f"{ROLLING}-episode mean")
        plt.xlabel("Episode")
        plt.ylabel("Episode reward")
        plt.title("C-DRL Reward Convergence")
        plt.grid(True, alpha=0.3)
        plt.legend(frameon=False)
        plt.tight_layout()
        plt.savefig(f"{OUT_DIR}/Fig_Convergence_Reward.png", dpi=300)
        print(f"Plot saved to {OUT_DIR}/Fig_Convergence_Reward.png")
    except ImportError:
        print("Matplotlib not found. Skipping plot generation.")


if __name__ == "__main__":
    main()
