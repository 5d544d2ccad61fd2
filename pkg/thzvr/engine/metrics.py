"""Per-slot records and their CSV / JSONL / aggregate outputs (schema in docs/metrics_schema.md)."""
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from thzvr.errors import ThzVrError

USER_COLUMNS = ["episode", "slot", "user", "x", "y", "z", "los_true", "los_pred", "hit",
                "rate_up", "rate_down", "t_uplink", "t_render", "t_downlink", "t_vr", "qoe"]


def _encode(value):
    """JSON-safe scalar: NaN becomes null, infinities become "inf" / "-inf"."""
    if isinstance(value, float) and not np.isfinite(value):
        return None if np.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def _decode(value):
    if value is None:
        return float("nan")
    if value in ("inf", "-inf"):
        return float(value)
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def parse_slot_json(line):
    """Inverse of SlotMetrics.to_json: nulls back to NaN, "inf" strings back to floats."""
    return {k: _decode(v) for k, v in json.loads(line).items()}


@dataclass(frozen=True)
class UserMetrics:
    user: int
    x: float
    y: float
    z: float
    los_true: str
    los_pred: str
    hit: int
    rate_up: float
    rate_down: float
    t_uplink: float
    t_render: float
    t_downlink: float
    t_vr: float
    qoe: float


@dataclass(frozen=True)
class SlotMetrics:
    episode: int
    slot: int
    mode: str
    action: int
    reward: float
    cost: float
    cost_signed: float
    multiplier: float
    epsilon: float
    viewpoint_mse: float
    train_loss: float
    vr_violations: int = 0
    users: tuple = field(default_factory=tuple)

    def user_rows(self):
        return [{"episode": self.episode, "slot": self.slot, **asdict(u)} for u in self.users]

    def to_json(self):
        body = {k: _encode(v) for k, v in asdict(self).items() if k != "users"}
        for key in ("rate_down", "t_vr", "qoe", "hit"):
            body[key] = [_encode(getattr(u, key)) for u in self.users]
        return json.dumps(body, sort_keys=True, allow_nan=False)


def metrics_frame(records):
    rows = [row for r in records for row in r.user_rows()]
    return pd.DataFrame(rows, columns=USER_COLUMNS)


def write_metrics(records, out_dir, stem="metrics"):
    """Writes `<stem>.csv` (one row per slot per user) and `<stem>.jsonl` (one object per slot)."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{stem}.csv"
        metrics_frame(records).to_csv(csv_path, index=False, float_format="%.12g")
        jsonl_path = out_dir / f"{stem}.jsonl"
        jsonl_path.write_text("".join(r.to_json() + "\n" for r in records))
    except OSError as exc:
        raise ThzVrError(f"cannot write metrics under {out_dir}: {exc}") from exc
    return csv_path, jsonl_path


def aggregate(records, latency_cap=1.0, window=None):
    """Means over (slot, user) pairs; `window=(lo, hi)` restricts the slot range."""
    df = metrics_frame(records)
    if window is not None:
        df = df[(df["slot"] >= window[0]) & (df["slot"] < window[1])]
    slots = {(r.episode, r.slot): r for r in records}
    kept = [slots[k] for k in sorted(set(zip(df["episode"], df["slot"])))]
    return {
        "mean_qoe": float(df["qoe"].mean()),
        "mean_t_vr": float(np.minimum(df["t_vr"], latency_cap).mean()),
        "mean_t_downlink": float(np.minimum(df["t_downlink"], latency_cap).mean()),
        "dead_links": float(np.isinf(df["t_downlink"]).mean()),
        "hit_rate": float(df["hit"].mean()),
        "vr_violation_rate": (float(sum(r.vr_violations for r in kept)) / len(df)
                              if len(df) else float("nan")),
        "mean_reward": float(np.mean([r.reward for r in kept])) if kept else float("nan"),
        "final_multiplier": kept[-1].multiplier if kept else 0.0,
    }


def read_metrics(path):
    return pd.read_csv(path)
