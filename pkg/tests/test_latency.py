import math

import pytest

from thzvr.latency import (
    LatencyBudget, fov_size_bits, qoe, quality, render_latency, transmit_latency, viewpoint_hit,
)


def test_fov_size_for_4k_stereo():
    assert fov_size_bits(3840, 2160, 2) == 3 * 8 * 3840 * 2160 * 2 == 398_131_200


def test_render_latency_at_defaults():
    bits = fov_size_bits(3840, 2160, 2) / 6000
    assert render_latency(bits, 1000, 5e9) == pytest.approx(1000 * bits / 5e9)
    assert render_latency(bits, 1000, 5e9) == pytest.approx(0.01327104)


def test_transmit_latency():
    assert transmit_latency(1e6, 2.0, 1e9) == pytest.approx(5e-4)
    assert transmit_latency(1e6, 0.0, 1e9) == math.inf


def test_latency_budget_is_additive():
    b = LatencyBudget.compose(0.001, 0.013, 0.004)
    assert b.t_total == pytest.approx(0.018)
    assert (b.t_uplink, b.t_render, b.t_downlink) == (0.001, 0.013, 0.004)


def test_viewpoint_hit_tolerance_is_inclusive():
    assert viewpoint_hit([10.0], [25.0], 15.0) == 1
    assert viewpoint_hit([10.0], [25.5], 15.0) == 0
    assert viewpoint_hit([0.0, 5.0], [14.0, 30.0], 15.0) == 0


def test_quality_floor():
    assert quality(1.0, 1.0) == 0.0
    assert quality(math.e, 1.0) == pytest.approx(1.0)
    assert quality(0.0, 1.0, q_min=-20.0) == -20.0
    assert quality(1e-12, 1.0, q_min=-20.0) == -20.0


def test_qoe_steady_rate_equals_quality():
    rec = qoe(1, 4.0, 4.0, 1.0)
    assert rec.qoe == pytest.approx(math.log(4.0))
    assert rec.q_now == rec.q_prev


def test_qoe_penalizes_rate_switching():
    rec = qoe(1, 4.0, 2.0, 1.0)
    assert rec.qoe == pytest.approx(math.log(4.0) - math.log(2.0))


def test_qoe_is_zero_on_viewpoint_miss():
    assert qoe(0, 8.0, 8.0, 1.0).qoe == 0.0
