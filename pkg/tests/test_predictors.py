import numpy as np
import pytest

from thzvr.errors import ConfigError
from thzvr.geometry import (
    Direction, LinkState, MobilityState, Obstacle, Position3, Room, SceneState, los_status,
    random_scene,
)
from thzvr.nn import RecurrentNet
from thzvr.predictors.los_cnn import (
    MEC_COLOR, OBSTACLE_COLOR, SHORT_COLOR, TALL_COLOR, TARGET_SHORT_COLOR, LosClassifier,
    classify_los, decode_scene, generate_dataset, label_index, rasterize_scene, scene_images,
)
from thzvr.predictors.mobility import (
    N_FEATURES, DirectionPredictor, direction_dataset, direction_error, displacement_direction,
    train_epochs, vrmm_trajectories,
)
from thzvr.predictors.traces import (
    AXIS_LIMITS, axis_indices, load_trace_csv, synthetic_traces, trace_source, write_trace_csv,
)
from thzvr.predictors.viewpoint import ViewpointPredictor

MEC = Position3(0.0, 0.0, 3.0)
RIS = Position3(10.0, 20.0, 3.0)
OBSTACLES = (Obstacle((4.0, 8.0), (8.0, 12.0), 3.0), Obstacle((12.0, 16.0), (8.0, 12.0), 3.0))


def _scene(users):
    states = tuple(MobilityState(p, (p.x, p.y), Direction.UP, 1.0) for p in users)
    scene = SceneState(MEC, RIS, states, OBSTACLES)
    return scene.with_flags(los_status(scene))


def _random_scene(rng, n_users=5):
    return random_scene(rng, Room(), MEC, RIS, OBSTACLES, n_users, (1.2, 1.8))


# traces

def test_synthetic_traces_stay_inside_axis_limits():
    traces = synthetic_traces(4, 500, np.random.default_rng(0))
    assert traces.shape == (4, 500, 3)
    assert np.all(np.abs(traces) < AXIS_LIMITS)


def test_trace_csv_is_read_back_and_tiled(tmp_path):
    traces = synthetic_traces(2, 30, np.random.default_rng(1))
    path = tmp_path / "traces.csv"
    write_trace_csv(path, traces)
    np.testing.assert_allclose(load_trace_csv(path), traces)
    tiled = trace_source(3, 50, np.random.default_rng(0), path)
    assert tiled.shape == (3, 50, 3)
    np.testing.assert_allclose(tiled[2, :30], traces[0])
    np.testing.assert_allclose(tiled[0, 30:50], traces[0, :20])


def test_trace_csv_missing_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("slot,user,y_deg\n0,0,1.0\n")
    with pytest.raises(ConfigError):
        load_trace_csv(path)


def test_axis_indices():
    assert axis_indices(["x", "z"]) == [0, 2]
    with pytest.raises(ConfigError):
        axis_indices(["w"])


# viewpoint

def test_viewpoint_warm_up_carries_last_value():
    vp = ViewpointPredictor(2, np.random.default_rng(0), window=4, hidden=4)
    np.testing.assert_array_equal(vp.predict(), np.zeros((2, 3)))
    assert vp.update(np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])) is None
    np.testing.assert_array_equal(vp.predict(), [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])


def test_centralized_viewpoint_learns_a_fixed_gaze():
    vp = ViewpointPredictor(2, np.random.default_rng(0), window=5, hidden=8, lr=0.01)
    actual = np.tile([0.0, 30.0, 0.0], (2, 1))
    for _ in range(200):
        vp.predict()
        vp.update(actual)
    pred = vp.predict()
    assert np.all(np.abs(pred[:, 1] - 30.0) < 5.0)
    np.testing.assert_array_equal(pred[:, [0, 2]], 0.0)


def test_fedavg_broadcasts_one_model():
    vp = ViewpointPredictor(3, np.random.default_rng(2), mode="fedavg", window=3, hidden=4,
                            local_steps=2)
    traces = synthetic_traces(3, 10, np.random.default_rng(3))
    for t in range(10):
        vp.predict()
        vp.update(traces[:, t])
    trees = [c.tree() for c in vp.clients]
    for other in trees[1:]:
        for name in trees[0].names():
            np.testing.assert_array_equal(other[name], trees[0][name])


def test_fedavg_clients_restart_optimizer_after_broadcast():
    vp = ViewpointPredictor(2, np.random.default_rng(4), mode="fedavg", window=3, hidden=4)
    traces = synthetic_traces(2, 6, np.random.default_rng(5))
    for t in range(6):
        vp.predict()
        vp.update(traces[:, t])
    assert all(client.opts["y"].state == {} for client in vp.clients)
    assert vp.clients[0].opts["y"] is not vp.clients[1].opts["y"]


def test_model_payload_counts_every_parameter():
    vp = ViewpointPredictor(2, np.random.default_rng(0), mode="fedavg", axes=("x", "y"), hidden=8)
    per_axis = 3 * (1 * 8 + 8 * 8 + 8) + 8 + 1
    assert vp.model_payload_bits(32) == 2 * per_axis * 32


# mobility

def test_displacement_direction():
    assert displacement_direction([1.0, 1.0], [2.0, 1.0]) == Direction.RIGHT
    assert displacement_direction([1.0, 1.0], [1.0, 0.0]) == Direction.DOWN
    assert displacement_direction([1.0, 1.0], [1.0, 1.0]) is None


def _straight_walks(rng, n, length=8):
    starts = np.array([10.0, 10.0])
    walks = []
    for _ in range(n):
        step = np.array(Direction(int(rng.integers(4))).step)
        walks.append([starts + t * step for t in range(length)])
    return np.array(walks)


def test_direction_dataset_skips_idle_steps():
    traj = np.array([[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 0.0], [2.0, 1.0]]])
    X, y = direction_dataset(traj, 2, 20.0, 1.0)
    assert X.shape == (1, 2, N_FEATURES)
    assert list(y) == [int(Direction.UP)]


def test_lstm_learns_to_keep_heading():
    rng = np.random.default_rng(0)
    X, y = direction_dataset(_straight_walks(rng, 40), 3, 20.0, 1.0)
    model = RecurrentNet("lstm", N_FEATURES, 8, 4, rng, loss="xent")
    train, _ = train_epochs(model, X, y, epochs=100, lr=0.3, batch=16, rng=rng)
    assert train[-1] < train[0]
    assert direction_error(model, X, y) < 0.2


def test_direction_predictor_warm_up_keeps_positions():
    dp = DirectionPredictor(2, np.random.default_rng(0), window=3, hidden=4)
    current = np.array([[3.0, 4.0], [5.0, 6.0]])
    np.testing.assert_array_equal(dp.predict_positions(current), current)
    np.testing.assert_allclose(dp.predict_proba(), 0.25)


def test_direction_predictor_steps_one_lattice_move():
    dp = DirectionPredictor(1, np.random.default_rng(0), window=2, hidden=4)
    for x in range(4):
        dp.update(np.array([[float(x), 5.0]]))
    nxt = dp.predict_positions(np.array([[3.0, 5.0]]))[0]
    assert np.abs(nxt - [3.0, 5.0]).sum() == pytest.approx(1.0)


# LoS classifier

def test_rasterize_paints_every_entity():
    scene = _scene([Position3(2.0, 3.0, 1.8), Position3(10.0, 5.0, 1.2)])
    img = rasterize_scene(scene, target=1)
    assert img.shape == (21, 21, 3)
    assert tuple(img[0, 0]) == MEC_COLOR
    assert tuple(img[6, 10]) == OBSTACLE_COLOR
    assert tuple(img[2, 3]) == TALL_COLOR
    assert tuple(img[10, 5]) == TARGET_SHORT_COLOR
    other = rasterize_scene(scene, target=0)
    assert tuple(other[10, 5]) == SHORT_COLOR


def test_rasterize_then_decode_recovers_scene():
    users = [Position3(1.0, 15.0, 1.2), Position3(2.0, 2.0, 1.8), Position3(3.0, 3.0, 1.2),
             Position3(6.0, 16.0, 1.8), Position3(18.0, 2.0, 1.2)]
    scene = _scene(users)
    decoded = decode_scene(rasterize_scene(scene, target=3))
    assert decoded.positions == scene.positions
    assert set(decoded.obstacles) == set(OBSTACLES)
    assert decoded.mec == MEC
    assert decoded.los_flags == scene.los_flags


def test_dataset_labels_follow_geometry():
    rng = np.random.default_rng(4)
    images, labels = generate_dataset(lambda r: _random_scene(r, 4), 6, rng)
    assert images.shape == (24, 21, 21, 3)
    assert set(labels) <= {0, 1}
    assert label_index(LinkState.NLOS) == 1


def test_cnn_training_reduces_loss_and_checkpoints(tmp_path):
    rng = np.random.default_rng(0)
    images, labels = generate_dataset(_random_scene, 20, rng)
    clf = LosClassifier(rng, filters=4, hidden=16, lr=0.01)
    curve = clf.fit(images, labels, epochs=10, batch=25, rng=rng, pca_components=8)
    assert curve[-1] < curve[0]
    path = tmp_path / "cnn.bin"
    clf.save(path)
    restored = LosClassifier(np.random.default_rng(99), filters=4, hidden=16)
    restored.load(path)
    scene = _random_scene(rng)
    assert restored.classify(scene) == clf.classify(scene)
    np.testing.assert_allclose(restored.model.predict(restored._prep(scene_images(scene))),
                               clf.model.predict(clf._prep(scene_images(scene))))


def test_single_image_classification_matches_batch():
    rng = np.random.default_rng(8)
    clf = LosClassifier(rng, filters=2, hidden=8)
    scene = _random_scene(rng, 4)
    images = scene_images(scene)
    assert [classify_los(img, clf.model) for img in images] == clf.classify(scene)


def test_vrmm_trajectories_move_on_the_lattice():
    walks = vrmm_trajectories(_random_scene, 3, 20, np.random.default_rng(6), Room())
    assert walks.shape == (15, 21, 2)
    moves = np.abs(np.diff(walks, axis=1)).sum(axis=2)
    assert set(np.round(moves.ravel(), 9)) <= {0.0, 1.0}
    X, y = direction_dataset(walks, 5, 20.0, 1.0)
    assert len(X) == len(y) > 0
