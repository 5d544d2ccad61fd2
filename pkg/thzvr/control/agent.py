"""Constrained deep-Q agent: replay memory, target network, ε-greedy, Lagrangian multiplier.

TD target per sample:  y = r + γ · max_a' Q_tar(s', a') − λ · c   (y = r at terminal slots)
Multiplier ascent:     λ ← max(0, λ + α · mean_replay(c))
"""
import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from thzvr.nn import MLP, Adam, ParameterTree

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    cost: float
    next_state: np.ndarray
    terminal: bool = False


def td_blend(q_eval, q_target, alpha):
    """Tabular blended update (1 − α)·Q_e + α·Q_tar."""
    return (1.0 - alpha) * q_eval + alpha * q_target


def compute_reward(qoe):
    return float(np.sum(qoe))


def compute_cost(latencies, t_th, latency_cap=None):
    """(violation, signed) where violation = max(0, mean − t_th), signed = t_th − mean.

    With `latency_cap`, each latency is clipped to the cap first so dead links stay finite.
    """
    lat = np.asarray(latencies, dtype=float)
    if latency_cap is not None:
        lat = np.minimum(lat, latency_cap)
    mean = float(np.mean(lat))
    return max(0.0, mean - t_th), t_th - mean


class CDQNAgent:
    def __init__(self, state_dim, n_actions, rng, hidden=(128, 128), lr=0.05, gamma=0.9,
                 alpha=0.05, replay_capacity=10000, minibatch=64, warmup=500,
                 eps_start=1.0, eps_min=0.05, eps_decay_steps=3000, target_period=50,
                 grad_clip=10.0):
        self.state_dim = state_dim
        self.n_actions = n_actions
        self.rng = rng
        self.gamma = gamma
        self.alpha = alpha
        self.minibatch = minibatch
        self.warmup = warmup
        self.eps_start = eps_start
        self.eps_min = eps_min
        self.eps_decay_steps = eps_decay_steps
        self.target_period = target_period
        self.grad_clip = grad_clip
        sizes = (state_dim, *hidden, n_actions)
        self.q_eval = MLP(sizes, rng)
        self.q_target = MLP(sizes, rng)
        self.q_target.params.assign(self.q_eval.params)
        self.opt = Adam(lr)
        self.replay = deque(maxlen=replay_capacity)
        self.multiplier = 0.0
        self.act_steps = 0
        self.train_steps = 0
        self.sync_count = 0
        self.last_epsilon = 0.0

    @property
    def epsilon(self):
        frac = min(1.0, self.act_steps / max(self.eps_decay_steps, 1))
        return max(self.eps_min, self.eps_start - (self.eps_start - self.eps_min) * frac)

    def q_values(self, state, target=False):
        net = self.q_target if target else self.q_eval
        return net.forward(np.atleast_2d(state))

    def select_action(self, state, explore=True, epsilon=None):
        """ε-greedy over the codebook; ties in Q go to the lowest index."""
        eps = (self.epsilon if epsilon is None else epsilon) if explore else 0.0
        if explore and len(self.replay) < self.warmup:
            eps = 1.0
        self.last_epsilon = eps
        if explore:
            self.act_steps += 1
        if self.rng.random() < eps:
            return int(self.rng.integers(self.n_actions))
        return int(np.argmax(self.q_values(state)[0]))

    def store(self, transition):
        self.replay.append(transition)

    def ready(self):
        return len(self.replay) >= max(self.minibatch, self.warmup, 1)

    def train_step(self, batch=None):
        """One gradient step on a replay minibatch; returns the loss or None (no-op)."""
        if batch is None:
            if not self.replay or not self.ready():
                return None
            idx = self.rng.choice(len(self.replay), size=self.minibatch, replace=False)
            batch = [self.replay[i] for i in idx]
        if not batch:
            return None
        states = np.stack([t.state for t in batch])
        next_states = np.stack([t.next_state for t in batch])
        actions = np.array([t.action for t in batch])
        rewards = np.array([t.reward for t in batch])
        costs = np.array([t.cost for t in batch])
        terminal = np.array([t.terminal for t in batch])

        q_next = self.q_values(next_states, target=True).max(axis=1)
        y = np.where(terminal, rewards, rewards + self.gamma * q_next - self.multiplier * costs)

        self.q_eval.params.zero_grad()
        q = self.q_eval.forward(states)
        rows = np.arange(len(batch))
        err = q[rows, actions] - y
        grad = np.zeros_like(q)
        grad[rows, actions] = 2.0 * err / len(batch)
        self.q_eval.backward(grad)
        self.q_eval.params.clip_grads(self.grad_clip)
        self.opt.step(self.q_eval.params)

        self.train_steps += 1
        if self.train_steps % self.target_period == 0:
            self.sync_target()
        return float(np.mean(err ** 2))

    def update_multiplier(self):
        if not self.replay:
            return self.multiplier
        mean_cost = float(np.mean([t.cost for t in self.replay]))
        self.multiplier = max(0.0, self.multiplier + self.alpha * mean_cost)
        return self.multiplier

    def sync_target(self):
        self.q_target.params.assign(self.q_eval.params)
        self.sync_count += 1
        log.debug("target network synced (%d)", self.sync_count)

    def save(self, prefix):
        self.q_eval.params.save(f"{prefix}.eval.bin")
        self.q_target.params.save(f"{prefix}.target.bin")

    def load(self, prefix):
        self.q_eval.params.assign(ParameterTree.load(f"{prefix}.eval.bin"))
        self.q_target.params.assign(ParameterTree.load(f"{prefix}.target.bin"))
