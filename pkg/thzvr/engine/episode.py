"""Episodes, multi-episode training and one-axis parameter sweeps."""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from thzvr.control.agent import CDQNAgent
from thzvr.control.codebook import build_codebook
from thzvr.control.state import state_dim
from thzvr.channel import build_channels
from thzvr.engine.config import dump_config, with_overrides
from thzvr.engine.metrics import aggregate, write_metrics
from thzvr.engine.slot import run_slot
from thzvr.engine.world import build_world, pretrain_los_classifier, save_predictors
from thzvr.errors import ConfigError
from thzvr.geometry import LinkState

log = logging.getLogger(__name__)

SWEEP_AXES = {
    "users": "scene__n_users",
    "ris-elements": "thz__n_ris_elements",
}


@dataclass
class EpisodeResult:
    episode: int
    records: list = field(default_factory=list)

    @property
    def total_reward(self):
        return float(sum(r.reward for r in self.records))

    @property
    def mean_qoe(self):
        return float(np.mean([u.qoe for r in self.records for u in r.users]))


def n_actions(cfg):
    return min(cfg.agent.codebook_size, (2 ** cfg.thz.phase_bits) ** cfg.thz.n_ris_elements)


def make_agent(cfg, rng):
    a = cfg.agent
    return CDQNAgent(
        state_dim(cfg.scene.n_users), n_actions(cfg), rng, hidden=tuple(a.hidden), lr=a.lr,
        gamma=a.gamma, alpha=a.alpha, replay_capacity=a.replay_capacity, minibatch=a.minibatch,
        warmup=a.warmup, eps_start=a.eps_start, eps_min=a.eps_min,
        eps_decay_steps=a.eps_decay_slots, target_period=a.target_period, grad_clip=a.grad_clip)


def episode_codebook(world):
    """Codebook from the episode's opening scene; NLoS users' steering entries come first."""
    cfg = world.cfg
    s = cfg.scene
    channels = build_channels(world.scene, world.params, np.deg2rad(s.mec_broadside_deg),
                              np.deg2rad(s.ris_broadside_deg))
    flags = world.scene.los_flags
    order = ([k for k, f in enumerate(flags) if f != LinkState.LOS]
             + [k for k, f in enumerate(flags) if f == LinkState.LOS])
    return build_codebook(channels, cfg.thz.phase_bits, cfg.agent.codebook_size, world.rng, order)


def needs_classifier(cfg):
    p = cfg.predictors
    return p.mode == "learned" and p.los_classifier == "cnn"


def run_episode(cfg, agent=None, seed=None, episode=0, train=True, los_classifier=None):
    """One episode of `cfg.run.slots` slots on a world seeded with `seed + episode`."""
    seed = cfg.run.seed if seed is None else seed
    world = build_world(cfg, seed + episode, los_classifier)
    world.codebook = episode_codebook(world)
    if cfg.agent.mode == "cdrl" and agent is None:
        agent = make_agent(cfg, np.random.default_rng(seed))
    result = EpisodeResult(episode)
    for t in range(cfg.run.slots):
        terminal = t == cfg.run.slots - 1
        result.records.append(run_slot(world, agent, train=train, episode=episode, terminal=terminal))
    if cfg.run.checkpoint_dir and cfg.predictors.mode == "learned":
        save_predictors(world, cfg.run.checkpoint_dir)
    log.info("episode %d: reward %.3f, mean QoE %.4f", episode, result.total_reward, result.mean_qoe)
    return result


def run_training(cfg, seed=None, episodes=None, los_classifier=None):
    """Agent persisting over `episodes` reseeded episodes; returns (agent, results)."""
    seed = cfg.run.seed if seed is None else seed
    episodes = cfg.run.episodes if episodes is None else episodes
    if needs_classifier(cfg) and los_classifier is None:
        los_classifier = pretrain_los_classifier(cfg, np.random.default_rng(seed + 10_007))
    agent = make_agent(cfg, np.random.default_rng(seed)) if cfg.agent.mode == "cdrl" else None
    results = [run_episode(cfg, agent, seed, ep, True, los_classifier) for ep in range(episodes)]
    if agent is not None and cfg.run.checkpoint_dir:
        Path(cfg.run.checkpoint_dir).mkdir(parents=True, exist_ok=True)
        agent.save(str(Path(cfg.run.checkpoint_dir) / "agent"))
    return agent, results


def simulate(cfg, out_dir=None, defaulted=()):
    """Trains over the configured episodes and writes metrics plus the effective config."""
    out_dir = Path(out_dir or cfg.run.out_dir)
    _, results = run_training(cfg)
    records = [r for res in results for r in res.records]
    write_metrics(records, out_dir)
    dump_config(cfg, out_dir / "config.effective.yaml")
    (out_dir / "defaults.txt").write_text("".join(f"{k}\n" for k in defaulted))
    summary = aggregate(records, cfg.latency.latency_cap_s)
    pd.DataFrame([summary]).to_csv(out_dir / "summary.csv", index=False, float_format="%.12g")
    return records, summary


def _sweep_point(args):
    cfg, axis, value = args
    _, results = run_training(cfg)
    last = results[-1].records
    row = {"axis": axis, "value": value, **aggregate(last, cfg.latency.latency_cap_s)}
    return row, last


def run_experiment(cfg, axis, values, out_dir=None, workers=None):
    """Sweeps one axis holding everything else fixed; one aggregate row per value."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis '{axis}', expected one of {sorted(SWEEP_AXES)}")
    out_dir = Path(out_dir or cfg.run.out_dir)
    variants = [(with_overrides(cfg, **{SWEEP_AXES[axis]: v}), axis, v) for v in values]
    workers = cfg.run.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_point, variants))
    else:
        outcomes = [_sweep_point(v) for v in variants]
    rows = []
    for (row, records), (_, _, value) in zip(outcomes, variants):
        write_metrics(records, out_dir / f"{axis}_{value}")
        rows.append(row)
    table = pd.DataFrame(rows)
    out_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_dir / f"sweep_{axis}.csv", index=False, float_format="%.12g")
    return table
