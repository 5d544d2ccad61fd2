"""One time slot of the pipeline.

Phase order: mobility, uplink (previous slot's Θ), viewpoint prediction,
position prediction, LoS prediction, rendering, RIS action, downlink,
QoE / reward / cost, learning. A failing phase raises SimulationError
naming the slot and phase.
"""
import logging
from contextlib import contextmanager
from dataclasses import replace

import numpy as np

from thzvr.channel import build_channels
from thzvr.control.agent import Transition, compute_cost, compute_reward
from thzvr.control.baselines import exhaustive_select, random_select
from thzvr.control.state import encode_state
from thzvr.errors import SimulationError, ThzVrError
from thzvr.geometry import LinkState, Position3, los_status, step_scene
from thzvr.latency import (
    LatencyBudget, fov_size_bits, qoe, render_latency, transmit_latency, viewpoint_hit,
)
from thzvr.phy import downlink_rates, reflection_matrix, uplink_rates
from thzvr.predictors.traces import axis_indices
from thzvr.predictors.viewpoint import viewpoint_mse
from thzvr.engine.metrics import SlotMetrics, UserMetrics

log = logging.getLogger(__name__)


@contextmanager
def phase(slot, name):
    try:
        yield
    except SimulationError:
        raise
    except Exception as exc:
        raise SimulationError(slot, name, exc) from exc


def fov_payload_bits(cfg):
    f = cfg.fov
    return fov_size_bits(f.n_p, f.n_v, f.views) / f.compression_ratio


def slot_qoe(hits, rates, prev_rates, cfg):
    return [qoe(h, r, p, cfg.qoe.r_th, cfg.qoe.q_min) for h, r, p in zip(hits, rates, prev_rates)]


def score_config(world, channels, flags, hits, prev_rates):
    """Total QoE of the slot for a candidate PhaseConfig (same scene, same predictions)."""
    cfg = world.cfg

    def score(phase_cfg):
        theta = reflection_matrix(phase_cfg)
        rates = downlink_rates(channels, theta, flags, cfg.thz.tx_power_w, world.noise_down)
        prev = rates if prev_rates is None else prev_rates
        return compute_reward([r.qoe for r in slot_qoe(hits, rates, prev, cfg)])

    return score


def predicted_flags(world, scene, positions):
    p = world.cfg.predictors
    if p.mode == "genie":
        return list(scene.los_flags)
    if p.los_classifier == "geometric" or world.los_classifier is None:
        moved = scene.with_flags(())
        moved = replace(moved, users=tuple(replace(u, position=pos)
                                           for u, pos in zip(scene.users, positions)))
        return los_status(moved, world.cfg.scene.colinear_tol)
    return world.los_classifier.classify(scene, positions)


def run_slot(world, agent=None, train=True, episode=0, terminal=False):
    cfg = world.cfg
    t = world.slot
    K = world.n_users
    genie = cfg.predictors.mode == "genie"
    bandwidth = cfg.thz.bandwidth_hz
    p_tx = cfg.thz.tx_power_w

    with phase(t, "mobility"):
        prev_xy = np.array([[u.position.x, u.position.y] for u in world.scene.users])
        world.scene = step_scene(world.scene, world.rng, world.room, cfg.scene.colinear_tol)
        scene = world.scene
        true_xy = np.array([[pos.x, pos.y] for pos in scene.positions])

    with phase(t, "uplink"):
        channels = build_channels(
            scene, world.params, np.deg2rad(cfg.scene.mec_broadside_deg),
            np.deg2rad(cfg.scene.ris_broadside_deg), fading_std=cfg.thz.fading_std, rng=world.rng)
        rates_up = uplink_rates(channels, reflection_matrix(world.theta_prev), p_tx, world.noise_up)
        if cfg.predictors.viewpoint == "fedavg" and not genie:
            model_bits = world.viewpoint.model_payload_bits(cfg.latency.model_bits_per_value)
            up_bits = model_bits
        else:
            model_bits = 0
            up_bits = cfg.latency.viewpoint_packet_bits
        t_up = [transmit_latency(up_bits, r, bandwidth) for r in rates_up]

    with phase(t, "viewpoint"):
        actual = world.traces[:, t]
        pred = actual.copy() if genie else world.viewpoint.predict()
        idx = axis_indices(cfg.qoe.predicted_axes)
        hits = [viewpoint_hit(pred[k, idx], actual[k, idx], cfg.qoe.hit_tolerance_deg) for k in range(K)]
        vp_mse = viewpoint_mse(pred, actual, cfg.qoe.predicted_axes)
        if not genie:
            world.viewpoint.update(actual)

    with phase(t, "position"):
        if genie:
            pred_xy = true_xy
        else:
            pred_xy = world.direction.predict_positions(prev_xy)
            world.direction.update(true_xy)
        positions = [Position3(float(x), float(y), u.position.z)
                     for (x, y), u in zip(pred_xy, scene.users)]

    with phase(t, "los"):
        flags = predicted_flags(world, scene, positions)

    with phase(t, "render"):
        fov_bits = fov_payload_bits(cfg)
        t_render = render_latency(fov_bits, cfg.mec.cycles_per_bit, cfg.mec.cpu_hz)

    with phase(t, "action"):
        prev_rates = world.prev_rates
        state = encode_state(positions, flags, world.prev_qoe, cfg.scene.room_width,
                             cfg.scene.room_height, cfg.qoe.q_min, cfg.qoe.q_max)
        mode = cfg.agent.mode
        epsilon = 0.0
        if mode == "cdrl":
            if agent is None:
                raise ThzVrError("cdrl mode needs an agent")
            action = agent.select_action(state.vector, explore=train)
            epsilon = agent.last_epsilon
            chosen = world.codebook[action]
        elif mode == "exhaustive":
            score = score_config(world, channels, flags, hits, prev_rates)
            sel = exhaustive_select(score, world.params.n_ris_elements, cfg.thz.phase_bits,
                                    codebook=world.codebook, full=cfg.agent.exhaustive_full)
            action, chosen = sel.index, sel.config
        else:
            action, chosen = random_select(world.codebook, world.rng)

    with phase(t, "downlink"):
        rates_down = downlink_rates(channels, reflection_matrix(chosen), flags, p_tx, world.noise_down)
        down_bits = fov_bits + model_bits
        t_down = [transmit_latency(down_bits, r, bandwidth) for r in rates_down]

    with phase(t, "qoe"):
        prev = rates_down if prev_rates is None else prev_rates
        records = slot_qoe(hits, rates_down, prev, cfg)
        qoes = np.array([r.qoe for r in records])
        reward = compute_reward(qoes)
        cost, cost_signed = compute_cost(t_down, cfg.latency.t_th_downlink, cfg.latency.latency_cap_s)

    train_loss = float("nan")
    with phase(t, "learn"):
        if mode == "cdrl" and train:
            if world.pending is not None:
                s0, a0, r0, c0 = world.pending
                agent.store(Transition(s0, a0, r0, c0, state.vector, terminal=False))
            world.pending = (state.vector, action, reward, cost)
            if terminal:
                agent.store(Transition(state.vector, action, reward, cost, state.vector, terminal=True))
                world.pending = None
            loss = agent.train_step()
            if loss is not None:
                train_loss = loss
            agent.update_multiplier()

    users = []
    for k in range(K):
        budget = LatencyBudget.compose(t_up[k], t_render, t_down[k])
        pos = scene.positions[k]
        users.append(UserMetrics(
            user=k, x=pos.x, y=pos.y, z=pos.z,
            los_true=LinkState(scene.los_flags[k]).value, los_pred=LinkState(flags[k]).value,
            hit=int(hits[k]), rate_up=float(rates_up[k]), rate_down=float(rates_down[k]),
            t_uplink=budget.t_uplink, t_render=budget.t_render, t_downlink=budget.t_downlink,
            t_vr=budget.t_total, qoe=float(qoes[k])))
    vr_violations = sum(u.t_vr > cfg.latency.t_th_vr for u in users)

    world.theta_prev = chosen
    world.prev_rates = rates_down
    world.prev_qoe = qoes
    world.slot += 1
    return SlotMetrics(
        episode=episode, slot=t, mode=mode, action=int(action), reward=reward, cost=cost,
        cost_signed=cost_signed, multiplier=agent.multiplier if agent is not None else 0.0,
        epsilon=epsilon, viewpoint_mse=float(vp_mse), train_loss=train_loss,
        vr_violations=int(vr_violations), users=tuple(users))
