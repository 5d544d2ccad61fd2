"""Finite action set of RIS phase configurations.

Entry 0 is the all-zero configuration; then one steering configuration per
user (priority order); random distinct configurations fill the rest.
"""
import logging
from dataclasses import dataclass

import numpy as np

from thzvr.errors import ConfigError
from thzvr.phy import PhaseConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActionCodebook:
    configs: tuple

    def __len__(self):
        return len(self.configs)

    def __getitem__(self, index):
        return self.configs[index]

    def __iter__(self):
        return iter(self.configs)

    def index(self, cfg):
        return self.configs.index(cfg)


def steering_config(channels, user, bits):
    """Phase of element n = −arg(conj(g_b[n]) · (G_down u)[n]), u the dominant MEC beam."""
    _, _, vh = np.linalg.svd(channels.G_down)
    u = vh[0].conj()
    cascade = channels.g[user].conj() * (channels.G_down @ u)
    return PhaseConfig.nearest(-np.angle(cascade), bits)


def build_codebook(channels, bits, size, rng, priority=None):
    """`priority` orders the users whose steering entries are kept first (NLoS users first)."""
    if size < 2:
        raise ConfigError(f"codebook size must be >= 2, got {size}")
    n = channels.g.shape[1]
    levels = 2 ** bits
    space = levels ** n
    if size > space:
        log.warning("codebook size %d exceeds the %d configurations available; capping", size, space)
        size = space
    users = list(priority) if priority is not None else list(range(channels.n_users))
    if size < len(users) + 1:
        log.warning("codebook size %d < K+1 = %d; steering entries truncated",
                    size, len(users) + 1)

    configs = [PhaseConfig.zeros(n, bits)]
    for b in users:
        if len(configs) >= size:
            break
        cfg = steering_config(channels, b, bits)
        if cfg not in configs:
            configs.append(cfg)
    seen = set(configs)
    while len(configs) < size:
        cfg = PhaseConfig(tuple(int(v) for v in rng.integers(levels, size=n)), bits)
        if cfg not in seen:
            seen.add(cfg)
            configs.append(cfg)
    return ActionCodebook(tuple(configs))
