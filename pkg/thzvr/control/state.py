"""Network state fed to the Q-network: positions, predicted LoS flags, previous QoE."""
from dataclasses import dataclass

import numpy as np

from thzvr.geometry import LinkState

Q_MAX = 10.0


@dataclass(frozen=True)
class NetworkState:
    positions: np.ndarray  # K x 3, normalized
    los: np.ndarray        # K, 1 = LoS
    prev_qoe: np.ndarray   # K, clamped

    @property
    def vector(self):
        return np.concatenate([self.positions.ravel(), self.los, self.prev_qoe])

    @property
    def n_users(self):
        return len(self.los)


def encode_state(positions, flags, prev_qoe, room_width=20.0, room_height=3.0,
                 q_min=-20.0, q_max=Q_MAX):
    """Ordered by user id; x, y scaled by the room width and z by the room height."""
    pos = np.array([[p.x, p.y, p.z] for p in positions], dtype=float).reshape(-1, 3)
    pos = pos / np.array([room_width, room_width, room_height])
    los = np.array([1.0 if f == LinkState.LOS else 0.0 for f in flags])
    qoe = np.clip(np.asarray(prev_qoe, dtype=float), q_min, q_max)
    return NetworkState(positions=pos, los=los, prev_qoe=qoe)


def state_dim(n_users):
    return 5 * n_users
