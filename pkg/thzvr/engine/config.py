"""Simulation configuration: YAML file -> validated dataclass tree.

Every key has a default. Loading reports which dotted keys were left at
their default. Environment variables THZVR_<SECTION>__<KEY> override the
file before validation; their values are parsed as YAML scalars.
"""
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from thzvr.errors import ConfigError

ENV_PREFIX = "THZVR_"


def _default_obstacles():
    return [
        {"x_range": [4.0, 8.0], "y_range": [8.0, 12.0], "height": 3.0},
        {"x_range": [12.0, 16.0], "y_range": [8.0, 12.0], "height": 3.0},
    ]


@dataclass
class SceneConfig:
    room_width: float = 20.0
    room_height: float = 3.0
    grid_step: float = 1.0
    mec: list = field(default_factory=lambda: [0.0, 0.0, 3.0])
    ris: list = field(default_factory=lambda: [10.0, 20.0, 3.0])
    mec_broadside_deg: float = 45.0
    ris_broadside_deg: float = -90.0
    n_users: int = 5
    height_range: list = field(default_factory=lambda: [1.2, 1.8])
    obstacles: list = field(default_factory=_default_obstacles)
    speed: float = 1.0
    colinear_tol: float = 0.3


@dataclass
class ThzConfig:
    frequency_hz: float = 3e11
    absorption_table: object = field(default_factory=lambda: [[3e11, 0.0033]])
    n_mec_antennas: int = 30
    n_ris_elements: int = 20
    phase_bits: int = 2
    ris_gain: float = 1.0
    tx_power_w: float = 1.0
    bandwidth_hz: float = 1e9
    noise_dbm: float = -110.0
    uplink_noise_dbm: float = -110.0
    fading_std: float = 0.0


@dataclass
class FovConfig:
    n_p: int = 3840
    n_v: int = 2160
    views: int = 2
    compression_ratio: float = 6000.0


@dataclass
class MecConfig:
    cpu_hz: float = 5e9
    cycles_per_bit: float = 1000.0


@dataclass
class LatencyConfig:
    t_th_downlink: float = 0.012
    t_th_vr: float = 0.020
    latency_cap_s: float = 1.0
    viewpoint_packet_bits: int = 192
    model_bits_per_value: int = 32


@dataclass
class QoeConfig:
    r_th: float = 1.0
    q_min: float = -20.0
    q_max: float = 10.0
    hit_tolerance_deg: float = 15.0
    predicted_axes: list = field(default_factory=lambda: ["y"])


@dataclass
class PredictorsConfig:
    mode: str = "learned"
    viewpoint: str = "centralized"
    window: int = 10
    gru_hidden: int = 64
    gru_lr: float = 0.005
    gru_optimizer: str = "adam"
    gru_replay: int = 8
    fed_local_steps: int = 1
    lstm_hidden: int = 64
    lstm_lr: float = 0.005
    lstm_minibatch: int = 64
    lstm_replay: int = 2000
    los_classifier: str = "cnn"
    cnn_filters: int = 64
    cnn_hidden: int = 128
    cnn_lr: float = 0.001
    cnn_epochs: int = 30
    cnn_batch: int = 32
    cnn_pretrain_scenes: int = 200
    cnn_checkpoint: str = ""
    pca_components: int = 0
    trace_csv: str = ""


@dataclass
class AgentConfig:
    mode: str = "cdrl"
    codebook_size: int = 64
    hidden: list = field(default_factory=lambda: [128, 128])
    lr: float = 0.05
    alpha: float = 0.05
    gamma: float = 0.9
    replay_capacity: int = 10000
    minibatch: int = 64
    warmup: int = 500
    eps_start: float = 1.0
    eps_min: float = 0.05
    eps_decay_slots: int = 3000
    target_period: int = 50
    grad_clip: float = 10.0
    exhaustive_full: bool = False


@dataclass
class RunConfig:
    slots: int = 300
    episodes: int = 1
    seed: int = 0
    out_dir: str = "runs/default"
    workers: int = 1
    checkpoint_dir: str = ""


@dataclass
class SimConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    thz: ThzConfig = field(default_factory=ThzConfig)
    fov: FovConfig = field(default_factory=FovConfig)
    mec: MecConfig = field(default_factory=MecConfig)
    latency: LatencyConfig = field(default_factory=LatencyConfig)
    qoe: QoeConfig = field(default_factory=QoeConfig)
    predictors: PredictorsConfig = field(default_factory=PredictorsConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    run: RunConfig = field(default_factory=RunConfig)


SECTIONS = {f.name: f.default_factory for f in fields(SimConfig)}

CHOICES = {
    "predictors.mode": ("genie", "learned"),
    "predictors.viewpoint": ("centralized", "fedavg"),
    "predictors.gru_optimizer": ("sgd", "adam"),
    "predictors.los_classifier": ("cnn", "geometric"),
    "agent.mode": ("cdrl", "exhaustive", "random"),
}


def _coerce(key, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        try:
            as_float = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
        if as_float != int(as_float):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(as_float)
    if isinstance(default, float):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    if isinstance(default, list) and not isinstance(value, (list, str)):
        raise ConfigError(f"{key}: expected a list, got {value!r}")
    return value


def _env_overrides(environ):
    out = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX) or "__" not in name:
            continue
        section, key = name[len(ENV_PREFIX):].lower().split("__", 1)
        out.setdefault(section, {})[key] = yaml.safe_load(raw)
    return out


def build_config(data, environ=None):
    """Returns (SimConfig, defaulted dotted keys) from a nested mapping."""
    if data is not None and not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    data = dict(data or {})
    for section, values in _env_overrides(os.environ if environ is None else environ).items():
        merged = dict(data.get(section) or {})
        merged.update(values)
        data[section] = merged

    cfg = SimConfig()
    defaulted = []
    for section in data:
        if section not in SECTIONS:
            raise ConfigError(f"unknown configuration section '{section}'")
    for section, factory in SECTIONS.items():
        given = data.get(section) or {}
        if not isinstance(given, dict):
            raise ConfigError(f"section '{section}' must be a mapping")
        obj = factory()
        known = {f.name for f in fields(obj)}
        for key in given:
            if key not in known:
                raise ConfigError(f"unknown configuration key '{section}.{key}'")
        for name in sorted(known):
            dotted = f"{section}.{name}"
            if name not in given:
                defaulted.append(dotted)
                continue
            value = given[name]
            if value is None:
                raise ConfigError(f"required key '{dotted}' is null")
            setattr(obj, name, _coerce(dotted, value, getattr(obj, name)))
        setattr(cfg, section, obj)
    validate(cfg)
    return cfg, defaulted


PATH_KEYS = (("thz", "absorption_table"), ("predictors", "cnn_checkpoint"),
             ("predictors", "trace_csv"))


def _resolve_paths(data, base):
    for section, key in PATH_KEYS:
        body = data.get(section) if isinstance(data, dict) else None
        if not isinstance(body, dict):
            continue
        value = body.get(key)
        if isinstance(value, str) and value and not Path(value).is_absolute():
            body[key] = str(base / value)


def load_config(path=None, environ=None):
    """Parses the YAML file at `path` (None or empty file -> all defaults).

    Relative input paths in the file (absorption table, CNN checkpoint, trace
    CSV) are resolved against the directory holding the file.
    """
    data = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
        _resolve_paths(data, Path(path).resolve().parent)
    return build_config(data, environ)


def dump_config(cfg, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(asdict(cfg), sort_keys=True))


def _positive(key, value):
    if value <= 0:
        raise ConfigError(f"{key} must be positive, got {value}")


def validate(cfg):
    s, t = cfg.scene, cfg.thz
    for key in ("room_width", "room_height", "grid_step", "speed"):
        _positive(f"scene.{key}", getattr(s, key))
    _positive("scene.n_users", s.n_users)
    if len(s.mec) != 3 or len(s.ris) != 3:
        raise ConfigError("scene.mec and scene.ris need three coordinates")
    if len(s.height_range) != 2:
        raise ConfigError(f"scene.height_range needs [low, high], got {s.height_range}")
    lo, hi = s.height_range
    if not 0 < lo <= hi <= s.room_height:
        raise ConfigError(f"scene.height_range must satisfy 0 < lo <= hi <= room height, got {s.height_range}")
    for i, obs in enumerate(s.obstacles):
        missing = {"x_range", "y_range", "height"} - set(obs)
        if missing:
            raise ConfigError(f"scene.obstacles[{i}] lacks {sorted(missing)}")
        if obs["height"] > s.room_height:
            raise ConfigError(f"scene.obstacles[{i}] taller than the room")
    for key in ("frequency_hz", "bandwidth_hz", "tx_power_w", "ris_gain", "n_mec_antennas",
                "n_ris_elements"):
        _positive(f"thz.{key}", getattr(t, key))
    if not 1 <= t.phase_bits <= 8:
        raise ConfigError(f"thz.phase_bits must be in 1..8, got {t.phase_bits}")
    for key in ("n_p", "n_v", "views", "compression_ratio"):
        _positive(f"fov.{key}", getattr(cfg.fov, key))
    _positive("mec.cpu_hz", cfg.mec.cpu_hz)
    _positive("mec.cycles_per_bit", cfg.mec.cycles_per_bit)
    _positive("qoe.r_th", cfg.qoe.r_th)
    for key, allowed in CHOICES.items():
        section, name = key.split(".")
        value = getattr(getattr(cfg, section), name)
        if value not in allowed:
            raise ConfigError(f"{key} must be one of {allowed}, got {value!r}")
    if not set(cfg.qoe.predicted_axes) <= {"x", "y", "z"} or not cfg.qoe.predicted_axes:
        raise ConfigError("qoe.predicted_axes must be a non-empty subset of x, y, z")
    _positive("predictors.window", cfg.predictors.window)
    if cfg.agent.codebook_size < 2:
        raise ConfigError(f"agent.codebook_size must be >= 2, got {cfg.agent.codebook_size}")
    if not 0 <= cfg.agent.gamma < 1:
        raise ConfigError(f"agent.gamma must be in [0, 1), got {cfg.agent.gamma}")
    _positive("run.slots", cfg.run.slots)
    _positive("run.episodes", cfg.run.episodes)


def with_overrides(cfg, **dotted):
    """Copy of `cfg` with `section__key=value` replacements, re-validated."""
    data = asdict(cfg)
    for name, value in dotted.items():
        section, key = name.split("__", 1)
        data[section][key] = value
    return build_config(data, environ={})[0]
