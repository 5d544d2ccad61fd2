"""Online LSTM prediction of each user's next moving direction.

Input per step: normalized position (x/W, y/W) and the unit displacement
from the previous slot. Labels are the direction of the revealed
displacement; slots where the user stands still carry no label.
"""
from collections import deque

import numpy as np

from thzvr.geometry import Direction, step_scene
from thzvr.nn import SGD, RecurrentNet

N_DIRECTIONS = len(Direction)
N_FEATURES = 4


def displacement_direction(prev_xy, next_xy):
    """Direction of a (cardinal) displacement, or None when the user did not move."""
    d = np.asarray(next_xy, dtype=float) - np.asarray(prev_xy, dtype=float)
    if np.all(np.abs(d) < 1e-9):
        return None
    if abs(d[0]) >= abs(d[1]):
        return Direction.RIGHT if d[0] > 0 else Direction.LEFT
    return Direction.UP if d[1] > 0 else Direction.DOWN


def window_features(positions, room_width, speed):
    """(T+1, 2) positions -> (T, 4) features."""
    p = np.asarray(positions, dtype=float)
    steps = np.clip(np.diff(p, axis=0) / speed, -1.0, 1.0)
    return np.hstack([p[1:] / room_width, steps])


def vrmm_trajectories(scene_fn, n_scenes, n_slots, rng, room):
    """(n_scenes * K, n_slots + 1, 2) walks of VRMM users, one scene per draw of `scene_fn`."""
    walks = []
    for _ in range(n_scenes):
        scene = scene_fn(rng)
        steps = [[u.position.xy() for u in scene.users]]
        for _ in range(n_slots):
            scene = step_scene(scene, rng, room)
            steps.append([u.position.xy() for u in scene.users])
        walks.extend(np.swapaxes(np.array(steps), 0, 1))
    return np.array(walks)


def direction_dataset(trajectories, window, room_width, speed):
    """Sliding-window samples from (n_users, n_slots, 2) trajectories; idle steps skipped."""
    X, y = [], []
    for traj in trajectories:
        for t in range(window, len(traj) - 1):
            label = displacement_direction(traj[t], traj[t + 1])
            if label is None:
                continue
            X.append(window_features(traj[t - window:t + 1], room_width, speed))
            y.append(int(label))
    return np.array(X).reshape(len(X), window, N_FEATURES), np.array(y, dtype=int)


def train_epochs(model, X, y, epochs, lr, batch, rng, X_val=None, y_val=None):
    """Shuffled minibatch SGD; returns per-epoch (train loss, validation loss) lists."""
    opt = SGD(lr)
    train_curve, val_curve = [], []
    for _ in range(epochs):
        order = rng.permutation(len(X))
        losses = []
        for start in range(0, len(X), batch):
            sel = order[start:start + batch]
            losses.append(model.loss_and_grad(X[sel], y[sel]))
            opt.step(model.params)
        train_curve.append(float(np.mean(losses)))
        if X_val is not None and len(X_val):
            val_curve.append(float(model.loss_value(model.forward(X_val), y_val)[0]))
    return train_curve, val_curve


def direction_error(model, X, y):
    if not len(X):
        return float("nan")
    return float(np.mean(model.predict(X).argmax(axis=1) != y))


class DirectionPredictor:
    """Per-user position histories feeding one shared LSTM classifier."""

    def __init__(self, n_users, rng, window=10, hidden=64, lr=0.005, minibatch=64,
                 replay_capacity=2000, room_width=20.0, speed=1.0):
        self.n_users = n_users
        self.rng = rng
        self.window = window
        self.minibatch = minibatch
        self.room_width = room_width
        self.speed = speed
        self.model = RecurrentNet("lstm", N_FEATURES, hidden, N_DIRECTIONS, rng, loss="xent")
        self.opt = SGD(lr)
        self.history = [deque(maxlen=window + 1) for _ in range(n_users)]
        self.replay_X = deque(maxlen=replay_capacity)
        self.replay_y = deque(maxlen=replay_capacity)

    def _ready(self):
        return [k for k in range(self.n_users) if len(self.history[k]) == self.window + 1]

    def _features(self, k):
        return window_features(list(self.history[k]), self.room_width, self.speed)

    def predict_proba(self):
        """(K, 4) probabilities over (Up, Down, Left, Right); uniform during warm-up."""
        probs = np.full((self.n_users, N_DIRECTIONS), 1.0 / N_DIRECTIONS)
        ready = self._ready()
        if ready:
            X = np.stack([self._features(k) for k in ready])
            probs[ready] = self.model.predict(X)
        return probs

    def predict_positions(self, current_xy=None):
        """Next (x, y) per user: one speed step along the argmax direction, clamped to the room.

        Warm-up users stay where they are.
        """
        probs = self.predict_proba()
        ready = set(self._ready())
        out = []
        for k in range(self.n_users):
            cur = (np.asarray(current_xy[k], dtype=float) if current_xy is not None
                   else np.asarray(self.history[k][-1], dtype=float))
            if k in ready:
                step = np.array(Direction(int(np.argmax(probs[k]))).step)
                cur = np.clip(cur + self.speed * step, 0.0, self.room_width)
            out.append(cur)
        return np.array(out)

    def update(self, positions):
        """Reveals the slot's (K, 2) positions, stores labelled windows, takes one SGD step."""
        positions = np.asarray(positions, dtype=float)
        for k in self._ready():
            label = displacement_direction(self.history[k][-1], positions[k])
            if label is not None:
                self.replay_X.append(self._features(k))
                self.replay_y.append(int(label))
        loss = None
        if self.replay_X:
            n = min(self.minibatch, len(self.replay_X))
            sel = self.rng.choice(len(self.replay_X), size=n, replace=False)
            X = np.stack([self.replay_X[i] for i in sel])
            y = np.array([self.replay_y[i] for i in sel])
            loss = self.model.loss_and_grad(X, y)
            self.opt.step(self.model.params)
        for k in range(self.n_users):
            self.history[k].append(positions[k])
        return loss
