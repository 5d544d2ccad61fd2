"""Online GRU viewpoint prediction, centralized at the MEC or federated over users.

One single-output GRU per predicted axis reads the last `window` angles of
that axis (scaled by the axis limit) and regresses the next one. Until a
user has a full window, the last observed angle is carried forward.
"""
import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from thzvr.errors import DomainError
from thzvr.nn import ParameterTree, RecurrentNet, make_optimizer
from thzvr.nn.losses import mse
from thzvr.predictors.traces import AXES, AXIS_LIMITS, axis_indices

log = logging.getLogger(__name__)


@dataclass
class FedClientState:
    params: ParameterTree
    n_samples: int = 0


def fedavg_aggregate(clients):
    """Sample-count weighted elementwise mean of the client trees."""
    if not clients:
        raise DomainError("FedAvg needs at least one client")
    total = sum(c.n_samples for c in clients)
    if total <= 0:
        raise DomainError("FedAvg total sample count is zero")
    ref = clients[0].params
    for c in clients[1:]:
        ref.check_compatible(c.params)
    out = ParameterTree()
    for name in ref.names():
        out.add(name, sum((c.n_samples / total) * c.params[name] for c in clients))
    return out


class ViewpointModel:
    """Per-axis GRU regressors sharing one optimizer configuration."""

    def __init__(self, axes, window, hidden, lr, rng, optimizer="adam"):
        self.axes = tuple(axes)
        self.idx = axis_indices(self.axes)
        self.window = window
        self.optimizer = optimizer
        self.lr = lr
        self.nets = {a: RecurrentNet("gru", 1, hidden, 1, rng) for a in self.axes}
        self.opts = {a: make_optimizer(optimizer, lr) for a in self.axes}

    def _scaled(self, windows, i):
        return (np.asarray(windows, dtype=float)[..., i] / AXIS_LIMITS[i])[..., None]

    def predict(self, windows):
        """windows (B, T, 3) degrees -> (B, n_axes) degrees."""
        cols = [self.nets[a].predict(self._scaled(windows, i))[:, 0] * AXIS_LIMITS[i]
                for a, i in zip(self.axes, self.idx)]
        return np.stack(cols, axis=1)

    def train_step(self, windows, targets):
        """One optimizer step per axis on the mean squared error; returns the scaled loss."""
        targets = np.asarray(targets, dtype=float)
        total = 0.0
        for a, i in zip(self.axes, self.idx):
            net = self.nets[a]
            total += net.loss_and_grad(self._scaled(windows, i), targets[:, i:i + 1] / AXIS_LIMITS[i])
            self.opts[a].step(net.params)
        return total

    def tree(self):
        merged = ParameterTree()
        for a in self.axes:
            for name in self.nets[a].params.names():
                merged.add(f"{a}.{name}", self.nets[a].params[name])
        return merged

    def set_tree(self, tree):
        for name in tree.names():
            axis, inner = name.split(".", 1)
            self.nets[axis].params[inner] = tree[name].copy()

    def reset_optimizers(self):
        self.opts = {a: make_optimizer(self.optimizer, self.lr) for a in self.axes}

    def copy(self):
        clone = ViewpointModel.__new__(ViewpointModel)
        clone.axes, clone.idx, clone.window = self.axes, self.idx, self.window
        clone.optimizer, clone.lr = self.optimizer, self.lr
        clone.nets = {a: net.copy() for a, net in self.nets.items()}
        clone.reset_optimizers()
        return clone


def viewpoint_mse(pred, actual, axes=AXES):
    """Squared error summed over the given axes, averaged over users."""
    idx = axis_indices(axes)
    return mse(np.asarray(pred)[:, idx], np.asarray(actual)[:, idx])[0]


class ViewpointPredictor:
    """Keeps per-user histories and runs prediction + online updates every slot.

    mode "centralized": one model trained on every user's windows (plus a replay
    of the last `replay` slots). mode "fedavg": one client model per user,
    `local_steps` local steps on its own windows, then aggregation and broadcast.
    """

    def __init__(self, n_users, rng, mode="centralized", axes=("y",), window=10, hidden=64,
                 lr=0.005, optimizer="adam", replay=8, local_steps=1):
        self.n_users = n_users
        self.mode = mode
        self.axes = tuple(axes)
        self.window = window
        self.local_steps = local_steps
        self.history = [deque(maxlen=window) for _ in range(n_users)]
        base = ViewpointModel(self.axes, window, hidden, lr, rng, optimizer)
        if mode == "fedavg":
            self.clients = [base.copy() for _ in range(n_users)]
            self.counts = [0] * n_users
            self.local_replay = [deque(maxlen=max(replay, 1)) for _ in range(n_users)]
            self.model = None
        else:
            self.model = base
            self.replay = deque(maxlen=max(replay, 1))

    def _windows(self):
        ready = [k for k in range(self.n_users) if len(self.history[k]) == self.window]
        return ready, np.array([list(self.history[k]) for k in ready]).reshape(len(ready), self.window, 3)

    def predict(self):
        """(K, 3) predicted angles; unpredicted axes and warm-up users carry the last value."""
        pred = np.array([self.history[k][-1] if self.history[k] else np.zeros(3)
                         for k in range(self.n_users)], dtype=float)
        ready, windows = self._windows()
        if not ready:
            return pred
        idx = axis_indices(self.axes)
        if self.mode == "fedavg":
            for j, k in enumerate(ready):
                pred[k, idx] = self.clients[k].predict(windows[j:j + 1])[0]
        else:
            pred[np.ix_(ready, idx)] = self.model.predict(windows)
        return pred

    def update(self, actual):
        """Reveals the slot's actual angles (K, 3): one learning round, then history append."""
        actual = np.asarray(actual, dtype=float)
        ready, windows = self._windows()
        loss = None
        if ready:
            targets = actual[ready]
            if self.mode == "fedavg":
                loss = self._federated_round(ready, windows, targets)
            else:
                self.replay.append((windows, targets))
                batch_w = np.concatenate([w for w, _ in self.replay])
                batch_t = np.concatenate([t for _, t in self.replay])
                loss = self.model.train_step(batch_w, batch_t)
        for k in range(self.n_users):
            self.history[k].append(actual[k])
        return loss

    def _federated_round(self, ready, windows, targets):
        losses = []
        for j, k in enumerate(ready):
            self.local_replay[k].append((windows[j], targets[j]))
            w = np.stack([s[0] for s in self.local_replay[k]])
            t = np.stack([s[1] for s in self.local_replay[k]])
            for _ in range(self.local_steps):
                losses.append(self.clients[k].train_step(w, t))
            self.counts[k] += 1
        participants = [FedClientState(self.clients[k].tree(), self.counts[k]) for k in ready]
        global_tree = fedavg_aggregate(participants)
        log.debug("fedavg round over %d clients, %d samples", len(participants),
                  sum(p.n_samples for p in participants))
        # local Adam moments restart from the broadcast model every round
        for client in self.clients:
            client.set_tree(global_tree)
            client.reset_optimizers()
        return float(np.mean(losses))

    def model_payload_bits(self, bits_per_value=32):
        model = self.clients[0] if self.mode == "fedavg" else self.model
        return model.tree().payload_bits(bits_per_value)

    def state_tree(self):
        model = self.clients[0] if self.mode == "fedavg" else self.model
        return model.tree()
