"""Head-motion traces: a synthetic generator and a CSV reader/writer.

Angles are in degrees, ordered (x, y, z). Synthetic traces sum a slow
sinusoid, a random-walk drift and fixation noise per axis, kept strictly
inside the per-axis limits.
"""
import numpy as np
import pandas as pd

from thzvr.errors import ConfigError

AXES = ("x", "y", "z")
AXIS_LIMITS = np.array([50.0, 150.0, 50.0])
TRACE_COLUMNS = ["slot", "user", "x_deg", "y_deg", "z_deg"]


def axis_indices(axes):
    try:
        return [AXES.index(a) for a in axes]
    except ValueError:
        raise ConfigError(f"predicted axes must be drawn from {AXES}, got {list(axes)}") from None


def synthetic_traces(n_users, n_slots, rng, amplitude=0.5, drift=0.01, noise=0.01,
                     period_range=(40, 120)):
    """Array (n_users, n_slots, 3) of viewpoint angles."""
    t = np.arange(n_slots)
    out = np.zeros((n_users, n_slots, 3))
    for k in range(n_users):
        for a, limit in enumerate(AXIS_LIMITS):
            period = rng.uniform(*period_range)
            phase = rng.uniform(0, 2 * np.pi)
            wave = amplitude * limit * np.sin(2 * np.pi * t / period + phase)
            walk = np.cumsum(rng.normal(0.0, drift * limit, size=n_slots))
            jitter = rng.normal(0.0, noise * limit, size=n_slots)
            out[k, :, a] = np.clip(wave + walk + jitter, -0.98 * limit, 0.98 * limit)
    return out


def load_trace_csv(path):
    """Reads `slot,user,x_deg,y_deg,z_deg` rows into an (n_users, n_slots, 3) array."""
    df = pd.read_csv(path)
    missing = [c for c in TRACE_COLUMNS if c not in df.columns]
    if missing:
        raise ConfigError(f"{path}: trace file lacks columns {missing}")
    df = df.sort_values(["user", "slot"])
    users = sorted(df["user"].unique())
    per_user = [df[df["user"] == u][["x_deg", "y_deg", "z_deg"]].to_numpy(dtype=float) for u in users]
    n_slots = min(len(p) for p in per_user)
    return np.stack([p[:n_slots] for p in per_user])


def write_trace_csv(path, traces):
    rows = [(s, k, *traces[k, s]) for k in range(traces.shape[0]) for s in range(traces.shape[1])]
    pd.DataFrame(rows, columns=TRACE_COLUMNS).to_csv(path, index=False)


def trace_source(n_users, n_slots, rng, path=None):
    """Synthetic traces, or the CSV at `path` tiled / cut to the requested shape."""
    if path is None:
        return synthetic_traces(n_users, n_slots, rng)
    traces = load_trace_csv(path)
    if traces.shape[1] < n_slots:
        reps = -(-n_slots // traces.shape[1])
        traces = np.concatenate([traces] * reps, axis=1)
    users = [traces[k % traces.shape[0]] for k in range(n_users)]
    return np.stack(users)[:, :n_slots]
