"""Per-episode world: scene, channel parameters, traces, predictors and carried-over slot state."""
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from thzvr.channel import ChannelParams, absorption_coefficient
from thzvr.geometry import Obstacle, Position3, Room, random_scene
from thzvr.phy import PhaseConfig, dbm_to_watts
from thzvr.predictors.los_cnn import LosClassifier, generate_dataset
from thzvr.predictors.mobility import DirectionPredictor
from thzvr.predictors.traces import trace_source
from thzvr.predictors.viewpoint import ViewpointPredictor

log = logging.getLogger(__name__)


def room_of(cfg):
    s = cfg.scene
    return Room(width=s.room_width, height=s.room_height, grid_step=s.grid_step)


def obstacles_of(cfg):
    return tuple(Obstacle(tuple(o["x_range"]), tuple(o["y_range"]), float(o["height"]))
                 for o in cfg.scene.obstacles)


def channel_params_of(cfg):
    t = cfg.thz
    return ChannelParams(
        frequency=t.frequency_hz,
        tau=absorption_coefficient(t.frequency_hz, t.absorption_table),
        n_mec_antennas=t.n_mec_antennas,
        n_ris_elements=t.n_ris_elements,
        ris_gain=t.ris_gain,
    )


def scene_factory(cfg):
    """`rng -> SceneState` drawing users on free lattice points."""
    s = cfg.scene
    room, obstacles = room_of(cfg), obstacles_of(cfg)
    mec, ris = Position3(*s.mec), Position3(*s.ris)

    def make(rng, n_users=None):
        return random_scene(rng, room, mec, ris, obstacles, n_users or s.n_users,
                            tuple(s.height_range), s.speed, s.colinear_tol)

    return make


@dataclass
class World:
    cfg: object
    rng: np.random.Generator
    room: Room
    scene: object
    params: ChannelParams
    traces: np.ndarray
    viewpoint: ViewpointPredictor
    direction: DirectionPredictor
    los_classifier: object = None
    theta_prev: PhaseConfig = None
    prev_rates: np.ndarray = None
    prev_qoe: np.ndarray = None
    codebook: object = None
    pending: tuple = None
    slot: int = 0
    noise_down: float = field(default=0.0)
    noise_up: float = field(default=0.0)

    @property
    def n_users(self):
        return len(self.scene.users)


def pretrain_los_classifier(cfg, rng, checkpoint=None, force=False):
    """CNN for LoS prediction: loaded from `checkpoint` if present (unless `force`), otherwise trained."""
    p = cfg.predictors
    clf = LosClassifier(rng, room=room_of(cfg), filters=p.cnn_filters, hidden=p.cnn_hidden,
                        lr=p.cnn_lr, tall_threshold=float(np.mean(cfg.scene.height_range)))
    checkpoint = checkpoint or p.cnn_checkpoint
    if checkpoint and Path(checkpoint).exists() and not force:
        clf.load(checkpoint)
        log.info("loaded CNN checkpoint %s", checkpoint)
        return clf
    if not force:
        log.warning("no CNN checkpoint found; pretraining on %d generated scenes", p.cnn_pretrain_scenes)
    images, labels = generate_dataset(scene_factory(cfg), p.cnn_pretrain_scenes, rng, room_of(cfg),
                                      clf.tall_threshold)
    clf.fit(images, labels, p.cnn_epochs, p.cnn_batch, rng, p.pca_components)
    if checkpoint:
        clf.save(checkpoint)
        log.info("saved CNN checkpoint %s", checkpoint)
    return clf


def build_world(cfg, seed, los_classifier=None):
    rng = np.random.default_rng(seed)
    s, p = cfg.scene, cfg.predictors
    scene = scene_factory(cfg)(rng)
    K = s.n_users
    traces = trace_source(K, cfg.run.slots, rng, p.trace_csv or None)
    viewpoint = ViewpointPredictor(
        K, rng, mode=p.viewpoint, axes=cfg.qoe.predicted_axes, window=p.window,
        hidden=p.gru_hidden, lr=p.gru_lr, optimizer=p.gru_optimizer, replay=p.gru_replay,
        local_steps=p.fed_local_steps)
    direction = DirectionPredictor(
        K, rng, window=p.window, hidden=p.lstm_hidden, lr=p.lstm_lr, minibatch=p.lstm_minibatch,
        replay_capacity=p.lstm_replay, room_width=s.room_width, speed=s.speed)
    params = channel_params_of(cfg)
    return World(
        cfg=cfg, rng=rng, room=room_of(cfg), scene=scene, params=params, traces=traces,
        viewpoint=viewpoint, direction=direction, los_classifier=los_classifier,
        theta_prev=PhaseConfig.zeros(params.n_ris_elements, cfg.thz.phase_bits),
        prev_qoe=np.zeros(K),
        noise_down=dbm_to_watts(cfg.thz.noise_dbm),
        noise_up=dbm_to_watts(cfg.thz.uplink_noise_dbm),
    )


def save_predictors(world, directory):
    """Writes the viewpoint GRU and direction LSTM parameters under `directory`."""
    directory = Path(directory)
    world.viewpoint.state_tree().save(directory / "viewpoint_gru.bin")
    world.direction.model.params.save(directory / "direction_lstm.bin")
    log.info("saved predictor checkpoints under %s", directory)
