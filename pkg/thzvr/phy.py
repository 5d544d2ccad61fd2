"""RIS reflection, matched-filter beamformers and per-user SINR / spectral efficiency.

Every user has a single receive antenna, so all rates are scalar
log2(1 + SINR) expressions. Transmit power scales every received term.
"""
from dataclasses import dataclass

import numpy as np

from thzvr.errors import ConfigError, ContractViolation
from thzvr.geometry import LinkState

MAX_PHASE_BITS = 8


def discrete_phase_set(bits):
    if not 1 <= bits <= MAX_PHASE_BITS:
        raise ConfigError(f"phase resolution must be 1..{MAX_PHASE_BITS} bits, got {bits}")
    levels = 2 ** bits
    return np.arange(levels) * (2 * np.pi / levels)


@dataclass(frozen=True)
class PhaseConfig:
    """N RIS phase shifts stored as level indices into the b-bit discrete set."""
    levels: tuple
    bits: int

    def __post_init__(self):
        n_levels = 2 ** self.bits
        discrete_phase_set(self.bits)
        if any(not 0 <= lv < n_levels for lv in self.levels):
            raise ConfigError(f"phase level outside 0..{n_levels - 1}: {self.levels}")

    @classmethod
    def zeros(cls, n_elements, bits):
        return cls(tuple([0] * n_elements), bits)

    @classmethod
    def nearest(cls, phases, bits):
        """Quantize continuous phases to the nearest discrete level."""
        n_levels = 2 ** bits
        idx = np.round(np.mod(phases, 2 * np.pi) / (2 * np.pi / n_levels)).astype(int) % n_levels
        return cls(tuple(int(i) for i in idx), bits)

    @property
    def phases(self):
        return discrete_phase_set(self.bits)[list(self.levels)]

    @property
    def n_elements(self):
        return len(self.levels)


@dataclass(frozen=True)
class LinkRates:
    uplink: np.ndarray
    downlink: np.ndarray
    los_used: np.ndarray


def reflection_matrix(cfg):
    """diag(e^{jθ_1}, …, e^{jθ_N}); accepts a PhaseConfig or raw phases (radians)."""
    phases = cfg.phases if isinstance(cfg, PhaseConfig) else np.asarray(cfg, dtype=float)
    return np.diag(np.exp(1j * phases))


def _unit(v):
    norm = np.linalg.norm(v)
    if norm < 1e-300:
        return np.zeros_like(v)
    return v / norm


def uplink_effective(ch, theta):
    """Rows h_i + G_up Θ g_i for every user."""
    return ch.h + (ch.G_up @ theta @ ch.g.T).T


def uplink_rate(k, ch, theta, p_tx, noise):
    eff = uplink_effective(ch, theta)
    u = _unit(eff[k])
    if not u.any():
        return 0.0
    gains = p_tx * np.abs(eff @ u.conj()) ** 2
    interference = gains.sum() - gains[k]
    return float(np.log2(1 + gains[k] / (interference + noise)))


def uplink_rates(ch, theta, p_tx, noise):
    return np.array([uplink_rate(k, ch, theta, p_tx, noise) for k in range(ch.n_users)])


def downlink_precoders(ch, theta, los_set, nlos_set):
    """Matched filters: h_k/‖h_k‖ for LoS users, G_downᴴ Θ g_b/‖·‖ for NLoS users."""
    V = np.zeros((ch.n_users, ch.h.shape[1]), dtype=complex)
    for k in los_set:
        V[k] = _unit(ch.h[k])
    for b in nlos_set:
        V[b] = _unit(ch.G_down.conj().T @ theta @ ch.g[b])
    return V


def downlink_rate_los(k, ch, theta, los_set, nlos_set, p_tx, noise):
    if k not in los_set:
        raise ContractViolation(f"user {k} is not in the LoS group")
    V = downlink_precoders(ch, theta, los_set, nlos_set)
    hk = ch.h[k].conj()
    signal = p_tx * abs(hk @ V[k]) ** 2
    interference = sum(p_tx * abs(hk @ V[i]) ** 2 for i in los_set if i != k)
    interference += sum(p_tx * abs(hk @ V[j]) ** 2 for j in nlos_set)
    return float(np.log2(1 + signal / (interference + noise)))


def downlink_rate_nlos(b, ch, theta, nlos_set, p_tx, noise, los_set=()):
    if b not in nlos_set:
        raise ContractViolation(f"user {b} is not in the NLoS group")
    V = downlink_precoders(ch, theta, los_set, nlos_set)
    cascade = ch.g[b].conj() @ theta @ ch.G_down
    signal = p_tx * abs(cascade @ V[b]) ** 2
    interference = sum(p_tx * abs(cascade @ V[j]) ** 2 for j in nlos_set if j != b)
    return float(np.log2(1 + signal / (interference + noise)))


def split_groups(los_flags):
    los = [k for k, f in enumerate(los_flags) if f == LinkState.LOS]
    nlos = [k for k, f in enumerate(los_flags) if f != LinkState.LOS]
    return los, nlos


def downlink_rates(ch, theta, los_flags, p_tx, noise):
    """Per-user downlink rates with users grouped by the (possibly predicted) flags."""
    los, nlos = split_groups(los_flags)
    rates = np.zeros(ch.n_users)
    for k in los:
        rates[k] = downlink_rate_los(k, ch, theta, los, nlos, p_tx, noise)
    for b in nlos:
        rates[b] = downlink_rate_nlos(b, ch, theta, nlos, p_tx, noise, los)
    return rates


def link_rates(ch, theta_up, theta_down, los_flags, p_tx, noise_up, noise_down):
    return LinkRates(
        uplink=uplink_rates(ch, theta_up, p_tx, noise_up),
        downlink=downlink_rates(ch, theta_down, los_flags, p_tx, noise_down),
        los_used=np.array([f == LinkState.LOS for f in los_flags]),
    )


def dbm_to_watts(dbm):
    return 10 ** ((dbm - 30) / 10)
