"""THz channel synthesis: spreading + molecular absorption loss and ULA responses.

All channels are deterministic functions of the geometry; an optional complex
Gaussian perturbation can be switched on for robustness runs.
"""
from dataclasses import dataclass

import numpy as np

from thzvr.errors import ConfigError, DomainError
from thzvr.geometry import LinkState, azimuth

SPEED_OF_LIGHT = 3e8


@dataclass(frozen=True)
class ChannelParams:
    frequency: float = 3e11
    tau: float = 0.0033
    n_mec_antennas: int = 30
    n_ris_elements: int = 20
    ris_gain: float = 1.0
    c: float = SPEED_OF_LIGHT
    spacing_wavelengths: float = 1.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise ConfigError(f"carrier frequency must be positive, got {self.frequency}")
        if self.tau < 0:
            raise ConfigError(f"absorption coefficient must be >= 0, got {self.tau}")
        if self.n_mec_antennas < 1 or self.n_ris_elements < 1:
            raise ConfigError("antenna and RIS element counts must be >= 1")
        if self.ris_gain <= 0:
            raise ConfigError(f"RIS element gain must be positive, got {self.ris_gain}")

    @property
    def wavelength(self):
        return self.c / self.frequency

    @property
    def spacing(self):
        return self.spacing_wavelengths * self.wavelength


@dataclass(frozen=True)
class ChannelSet:
    """Per-slot channels. Rows of `h` / `g` are users."""
    h: np.ndarray       # K x M, MEC <-> user (zero rows for NLoS users)
    G_up: np.ndarray    # M x N, RIS -> MEC
    G_down: np.ndarray  # N x M, MEC -> RIS
    g: np.ndarray       # K x N, RIS <-> user

    @property
    def n_users(self):
        return self.h.shape[0]


def array_response(n_elems, phi, wavelength, spacing=None):
    """Normalized ULA response; element m carries exp(-j 2π/λ · d · m · sin φ).

    `spacing` d defaults to one wavelength, so the phase step is 2π·sin φ.
    """
    if n_elems < 1:
        raise DomainError(f"array needs at least one element, got {n_elems}")
    if spacing is None:
        spacing = wavelength
    m = np.arange(n_elems)
    return np.exp(-1j * 2 * np.pi / wavelength * spacing * m * np.sin(phi)) / np.sqrt(n_elems)


def path_gain(f, d, tau, c=SPEED_OF_LIGHT):
    """Spreading loss × molecular absorption × propagation phase."""
    if d <= 0:
        raise DomainError(f"link distance must be positive, got {d}")
    delay = d / c
    return (c / (4 * np.pi * f * d)) * np.exp(-tau * d / 2) * np.exp(-1j * 2 * np.pi * f * delay)


def los_channel(params, d_k, phi_k, los=True):
    if not los:
        return np.zeros(params.n_mec_antennas, dtype=complex)
    a = array_response(params.n_mec_antennas, phi_k, params.wavelength, params.spacing)
    return path_gain(params.frequency, d_k, params.tau, params.c) * a


def compensation_factor(params):
    return 2 * np.sqrt(np.pi) * params.frequency * params.ris_gain * params.n_ris_elements / params.c


def ris_mec_channels(params, d_mi, phi_mec, phi_ris):
    """Rank-1 MEC<->RIS matrices; the downlink matrix is the Hermitian of the uplink one."""
    eta = compensation_factor(params)
    gain = eta * path_gain(params.frequency, d_mi, params.tau, params.c)
    a_mec = array_response(params.n_mec_antennas, phi_mec, params.wavelength, params.spacing)
    a_ris = array_response(params.n_ris_elements, phi_ris, params.wavelength, params.spacing)
    G_up = gain * np.outer(a_mec, a_ris.conj())
    return G_up, G_up.conj().T


def ris_user_channel(params, d_b, phi_b):
    a = array_response(params.n_ris_elements, phi_b, params.wavelength, params.spacing)
    return path_gain(params.frequency, d_b, params.tau, params.c) * a


def load_absorption_table(source):
    """Absorption table as an (n, 2) array of (Hz, 1/m) rows sorted by frequency.

    `source` is either a list of pairs or a path to a two-column text file.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        try:
            table = np.loadtxt(source, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read absorption table {source}: {exc}") from exc
    else:
        table = np.asarray(source, dtype=float).reshape(-1, 2)
    if table.size == 0:
        raise ConfigError("absorption table is empty")
    return table[np.argsort(table[:, 0])]


def absorption_coefficient(f, table):
    table = load_absorption_table(table)
    lo, hi = table[0, 0], table[-1, 0]
    if f < lo or f > hi:
        raise ConfigError(f"frequency {f:g} Hz outside absorption table [{lo:g}, {hi:g}]")
    if len(table) == 1:
        return float(table[0, 1])
    return float(np.interp(f, table[:, 0], table[:, 1]))


def build_channels(scene, params, mec_broadside=0.0, ris_broadside=0.0, flags=None,
                   fading_std=0.0, rng=None):
    """All channels of one slot from positions; NLoS users get an all-zero direct channel."""
    flags = scene.los_flags if flags is None else flags
    K = len(scene.users)
    h = np.zeros((K, params.n_mec_antennas), dtype=complex)
    g = np.zeros((K, params.n_ris_elements), dtype=complex)
    for k, pos in enumerate(scene.positions):
        los = flags[k] == LinkState.LOS
        h[k] = los_channel(params, scene.mec.distance(pos),
                           azimuth(scene.mec, pos, mec_broadside), los)
        g[k] = ris_user_channel(params, scene.ris.distance(pos),
                                azimuth(scene.ris, pos, ris_broadside))
    G_up, G_down = ris_mec_channels(params, scene.mec.distance(scene.ris),
                                    azimuth(scene.mec, scene.ris, mec_broadside),
                                    azimuth(scene.ris, scene.mec, ris_broadside))
    if fading_std > 0:
        rng = np.random.default_rng() if rng is None else rng

        def perturb(x):
            noise = rng.normal(size=x.shape) + 1j * rng.normal(size=x.shape)
            return x * (1 + fading_std * noise / np.sqrt(2))

        h = perturb(h)
        g = perturb(g)
        G_up = perturb(G_up)
        G_down = G_up.conj().T
    return ChannelSet(h=h, G_up=G_up, G_down=G_down, g=g)
