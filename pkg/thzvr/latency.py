"""FoV payload sizing, rendering / transmission latency and per-user QoE."""
from dataclasses import dataclass

import numpy as np

RGB_CHANNELS = 3
BITS_PER_CHANNEL = 8
EYES = 2
Q_MIN = -20.0


@dataclass(frozen=True)
class LatencyBudget:
    t_uplink: float
    t_render: float
    t_downlink: float
    t_total: float

    @classmethod
    def compose(cls, t_uplink, t_render, t_downlink):
        return cls(t_uplink, t_render, t_downlink, t_uplink + t_render + t_downlink)


@dataclass(frozen=True)
class QoERecord:
    hit: int
    q_now: float
    q_prev: float
    qoe: float


def fov_size_bits(n_p, n_v, views=EYES):
    return RGB_CHANNELS * BITS_PER_CHANNEL * n_p * n_v * views


def render_latency(bits, cycles_per_bit, cpu_hz):
    return cycles_per_bit * bits / cpu_hz


def transmit_latency(bits, rate, bandwidth):
    """Seconds to push `bits` at `rate` bit/s/Hz over `bandwidth`; inf for a dead link."""
    throughput = rate * bandwidth
    if throughput <= 0:
        return float("inf")
    return bits / throughput


def viewpoint_hit(pred, actual, tol):
    """1 when every predicted axis is within `tol` degrees (inclusive) of the actual one."""
    diff = np.abs(np.atleast_1d(np.asarray(pred, dtype=float) - np.asarray(actual, dtype=float)))
    return int(np.all(diff <= tol + 1e-12))


def quality(rate, r_th, q_min=Q_MIN):
    """ln(R / R_th), clamped from below at `q_min` (dead links included)."""
    if rate <= 0:
        return q_min
    return max(float(np.log(rate / r_th)), q_min)


def qoe(hit, rate_now, rate_prev, r_th, q_min=Q_MIN):
    q_now = quality(rate_now, r_th, q_min)
    q_prev = quality(rate_prev, r_th, q_min)
    value = hit * (q_now - abs(q_now - q_prev))
    return QoERecord(hit=int(hit), q_now=q_now, q_prev=q_prev, qoe=float(value))
