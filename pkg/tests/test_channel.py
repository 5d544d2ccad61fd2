import numpy as np
import pytest

from thzvr.channel import (
    SPEED_OF_LIGHT, ChannelParams, absorption_coefficient, array_response, build_channels,
    compensation_factor, los_channel, path_gain,
)
from thzvr.errors import ConfigError, DomainError
from thzvr.geometry import LinkState, Obstacle, Position3, Room, random_scene

PARAMS = ChannelParams(n_mec_antennas=6, n_ris_elements=8)


def _scene(rng, n_users=5):
    return random_scene(rng, Room(), Position3(0.0, 0.0, 3.0), Position3(10.0, 20.0, 3.0),
                        (Obstacle((4.0, 8.0), (8.0, 12.0), 3.0),), n_users, (1.2, 1.8))


@pytest.mark.parametrize("n", [1, 8, 30])
def test_array_response_is_unit_norm(n):
    rng = np.random.default_rng(n)
    for phi in rng.uniform(-np.pi, np.pi, size=20):
        a = array_response(n, phi, PARAMS.wavelength)
        assert abs(np.linalg.norm(a) - 1.0) < 1e-12


def test_array_response_phase_progression():
    phi = 0.3
    a = array_response(4, phi, 1e-3, spacing=0.5e-3)
    expected = np.exp(-1j * np.pi * np.arange(4) * np.sin(phi)) / 2.0
    np.testing.assert_allclose(a, expected, rtol=0, atol=1e-12)


def test_default_element_phase_step_is_two_pi_sin_phi():
    phi = np.arcsin(0.1)
    step = np.exp(-1j * 2 * np.pi * 0.1)
    a = array_response(5, phi, PARAMS.wavelength)
    np.testing.assert_allclose(a[1:] / a[:-1], step, atol=1e-12)
    assert ChannelParams().spacing == pytest.approx(ChannelParams().wavelength)
    h = los_channel(ChannelParams(n_mec_antennas=3), 4.0, phi)
    np.testing.assert_allclose(h[1:] / h[:-1], step, atol=1e-12)


def test_path_gain_magnitude():
    f, d, tau = 3e11, 7.5, 0.0033
    expected = SPEED_OF_LIGHT / (4 * np.pi * f * d) * np.exp(-tau * d / 2)
    assert abs(path_gain(f, d, tau)) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("d", [0.0, -1.0])
def test_path_gain_rejects_non_positive_distance(d):
    with pytest.raises(DomainError):
        path_gain(3e11, d, 0.0033)


def test_compensation_factor():
    expected = 2 * np.sqrt(np.pi) * PARAMS.frequency * PARAMS.ris_gain * 8 / SPEED_OF_LIGHT
    assert compensation_factor(PARAMS) == pytest.approx(expected, rel=1e-12)


def test_channel_set_structure():
    rng = np.random.default_rng(5)
    scene = _scene(rng)
    ch = build_channels(scene, PARAMS)
    assert ch.h.shape == (5, 6)
    assert ch.g.shape == (5, 8)
    assert ch.G_up.shape == (6, 8)
    np.testing.assert_allclose(ch.G_down, ch.G_up.conj().T, rtol=0, atol=0)
    s = np.linalg.svd(ch.G_up, compute_uv=False)
    assert s[1] < 1e-12 * s[0]
    for k, flag in enumerate(scene.los_flags):
        if flag == LinkState.NLOS:
            assert not ch.h[k].any()
        else:
            assert np.linalg.norm(ch.h[k]) > 0


def test_flags_override_scene_flags():
    scene = _scene(np.random.default_rng(2))
    ch = build_channels(scene, PARAMS, flags=[LinkState.NLOS] * 5)
    assert not ch.h.any()


def test_fading_keeps_downlink_hermitian():
    scene = _scene(np.random.default_rng(2))
    ch = build_channels(scene, PARAMS, fading_std=0.1, rng=np.random.default_rng(9))
    np.testing.assert_array_equal(ch.G_down, ch.G_up.conj().T)


def test_absorption_single_row_and_interpolation():
    assert absorption_coefficient(3e11, [[3e11, 0.0033]]) == 0.0033
    table = [[2e11, 0.001], [4e11, 0.005]]
    assert absorption_coefficient(3e11, table) == pytest.approx(0.003)


def test_absorption_outside_table():
    with pytest.raises(ConfigError):
        absorption_coefficient(1e12, [[3e11, 0.0033]])


def test_absorption_table_from_file(tmp_path):
    path = tmp_path / "tau.txt"
    path.write_text("# f tau\n4e11 0.005\n2e11 0.001\n")
    assert absorption_coefficient(3e11, str(path)) == pytest.approx(0.003)


def test_unreadable_absorption_table_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError, match="absorption table"):
        absorption_coefficient(3e11, str(tmp_path / "missing.txt"))
    garbled = tmp_path / "garbled.txt"
    garbled.write_text("3e11 abc\n")
    with pytest.raises(ConfigError):
        absorption_coefficient(3e11, garbled)


def test_channel_params_validation():
    with pytest.raises(ConfigError):
        ChannelParams(frequency=0.0)
    with pytest.raises(ConfigError):
        ChannelParams(n_ris_elements=0)
