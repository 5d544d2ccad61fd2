"""LoS/NLoS classification from a rasterized top view of the room.

Each scene is painted on the room lattice (21 x 21 cells for a 20 m room,
indexed [ix, iy]) with one RGB code per entity class. The queried user
is painted in a highlight color, so a scene with K users yields K images.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from thzvr.geometry import (
    Direction, LinkState, MobilityState, Obstacle, Position3, Room, SceneState, los_status,
)
from thzvr.nn import Adam, ConvNet, ParameterTree
from thzvr.nn.params import load_tensors, save_tensors

log = logging.getLogger(__name__)

MEC_COLOR = (1.0, 0.0, 0.0)
OBSTACLE_COLOR = (0.0, 0.0, 1.0)
TALL_COLOR = (0.0, 1.0, 0.0)
SHORT_COLOR = (0.0, 0.5, 0.0)
TARGET_TALL_COLOR = (1.0, 1.0, 0.0)
TARGET_SHORT_COLOR = (1.0, 0.5, 0.0)

LABELS = (LinkState.LOS, LinkState.NLOS)


def _cell(room, x, y):
    n = room.n_cells
    ix = int(np.clip(round(x / room.grid_step), 0, n - 1))
    iy = int(np.clip(round(y / room.grid_step), 0, n - 1))
    return ix, iy


def _user_positions(scene, positions):
    if positions is None:
        return scene.positions
    return [Position3(float(p[0]), float(p[1]), u.position.z) if not isinstance(p, Position3) else p
            for p, u in zip(positions, scene.users)]


def rasterize_scene(scene, positions=None, target=None, room=Room(), tall_threshold=1.5):
    """(n, n, 3) image; `positions` replaces the users' (x, y) (e.g. predicted ones).

    Paint order: obstacles, MEC, other users, queried user.
    """
    n = room.n_cells
    img = np.zeros((n, n, 3))
    for obs in scene.obstacles:
        x0, y0 = _cell(room, obs.x_range[0], obs.y_range[0])
        x1, y1 = _cell(room, obs.x_range[1], obs.y_range[1])
        img[x0:x1 + 1, y0:y1 + 1] = OBSTACLE_COLOR
    img[_cell(room, scene.mec.x, scene.mec.y)] = MEC_COLOR
    users = _user_positions(scene, positions)
    for k, pos in enumerate(users):
        if k != target:
            img[_cell(room, pos.x, pos.y)] = TALL_COLOR if pos.z > tall_threshold else SHORT_COLOR
    if target is not None:
        pos = users[target]
        img[_cell(room, pos.x, pos.y)] = TARGET_TALL_COLOR if pos.z > tall_threshold else TARGET_SHORT_COLOR
    return img


def _mask(img, color):
    return np.all(np.isclose(img, color), axis=-1)


def _rectangles(mask):
    """Axis-aligned rectangles covering the connected True regions of a cell mask."""
    seen = np.zeros_like(mask)
    rects = []
    for ix, iy in zip(*np.nonzero(mask)):
        if seen[ix, iy]:
            continue
        x1 = ix
        while x1 + 1 < mask.shape[0] and mask[x1 + 1, iy]:
            x1 += 1
        y1 = iy
        while y1 + 1 < mask.shape[1] and mask[ix:x1 + 1, y1 + 1].all():
            y1 += 1
        seen[ix:x1 + 1, iy:y1 + 1] = True
        rects.append((ix, x1, iy, y1))
    return rects


def decode_scene(img, room=Room(), tall_height=1.8, short_height=1.2, obstacle_height=None,
                 mec_height=3.0, ris=None):
    """Scene recovered from a painted image: cell-centred entities, two-level heights.

    Users come back ordered by cell (ix, iy); highlighted users are decoded too.
    """
    step = room.grid_step
    obstacle_height = room.height if obstacle_height is None else obstacle_height
    obstacles = tuple(Obstacle((x0 * step, x1 * step), (y0 * step, y1 * step), obstacle_height)
                      for x0, x1, y0, y1 in _rectangles(_mask(img, OBSTACLE_COLOR)))
    mec_cells = np.argwhere(_mask(img, MEC_COLOR))
    mec_xy = mec_cells[0] * step if len(mec_cells) else np.zeros(2)
    mec = Position3(float(mec_xy[0]), float(mec_xy[1]), mec_height)
    users = []
    for color, height in ((TALL_COLOR, tall_height), (SHORT_COLOR, short_height),
                          (TARGET_TALL_COLOR, tall_height), (TARGET_SHORT_COLOR, short_height)):
        for ix, iy in np.argwhere(_mask(img, color)):
            users.append((int(ix), int(iy), Position3(ix * step, iy * step, height)))
    users.sort(key=lambda u: (u[0], u[1]))

    states = tuple(MobilityState(p, (p.x, p.y), Direction.UP, 1.0) for _, _, p in users)
    ris = Position3(room.width / 2, room.width, mec_height) if ris is None else ris
    scene = SceneState(mec=mec, ris=ris, users=states, obstacles=obstacles)
    return scene.with_flags(los_status(scene))


def scene_images(scene, positions=None, room=Room(), tall_threshold=1.5):
    """(K, n, n, 3): one image per queried user."""
    return np.stack([rasterize_scene(scene, positions, k, room, tall_threshold)
                     for k in range(len(scene.users))])


def classify_los(image, model):
    """Single image -> LinkState (argmax of the 2-class softmax)."""
    probs = model.predict(np.asarray(image)[None])[0]
    return LABELS[int(np.argmax(probs))]


def label_index(flag):
    return 0 if flag == LinkState.LOS else 1


def generate_dataset(scene_fn, n_scenes, rng, room=Room(), tall_threshold=1.5):
    """Images and 0/1 (LoS/NLoS) labels from `n_scenes` scenes drawn by `scene_fn(rng)`.

    Labels are the geometric flags of the true positions.
    """
    images, labels = [], []
    for _ in range(n_scenes):
        scene = scene_fn(rng)
        images.append(scene_images(scene, None, room, tall_threshold))
        labels.extend(label_index(f) for f in scene.los_flags)
    return np.concatenate(images), np.array(labels, dtype=int)


@dataclass
class PCAProjector:
    """Projects flattened images on the top components and reconstructs them."""
    mean: np.ndarray
    components: np.ndarray
    shape: tuple

    @classmethod
    def fit(cls, images, n_components):
        flat = images.reshape(len(images), -1)
        mean = flat.mean(axis=0)
        _, _, vt = np.linalg.svd(flat - mean, full_matrices=False)
        return cls(mean=mean, components=vt[:n_components], shape=images.shape[1:])

    def __call__(self, images):
        images = np.asarray(images, dtype=float)
        single = images.ndim == 3
        flat = images.reshape(1 if single else len(images), -1) - self.mean
        recon = (flat @ self.components.T) @ self.components + self.mean
        out = recon.reshape((-1,) + tuple(self.shape))
        return out[0] if single else out


class LosClassifier:
    """ConvNet plus optional PCA front-end."""

    def __init__(self, rng, room=Room(), filters=64, hidden=128, lr=1e-3, tall_threshold=1.5):
        self.room = room
        self.tall_threshold = tall_threshold
        n = room.n_cells
        self.model = ConvNet((n, n, 3), rng, filters=filters, hidden=hidden)
        self.opt = Adam(lr)
        self.pca = None
        self.curve = []

    def _prep(self, images):
        return self.pca(images) if self.pca is not None else images

    def fit(self, images, labels, epochs, batch, rng, pca_components=0):
        """Adam minibatch training; returns the per-epoch mean loss."""
        if pca_components:
            self.pca = PCAProjector.fit(images, pca_components)
        X = self._prep(images)
        curve = []
        for epoch in range(epochs):
            order = rng.permutation(len(X))
            losses = []
            for start in range(0, len(X), batch):
                sel = order[start:start + batch]
                losses.append(self.model.loss_and_grad(X[sel], labels[sel]))
                self.opt.step(self.model.params)
            curve.append(float(np.mean(losses)))
            log.debug("cnn epoch %d loss %.4f", epoch, curve[-1])
        self.curve = curve
        return curve

    def accuracy(self, images, labels):
        probs = self.model.predict(self._prep(images))
        return float(np.mean(probs.argmax(axis=1) == labels))

    def classify(self, scene, positions=None):
        imgs = self._prep(scene_images(scene, positions, self.room, self.tall_threshold))
        return [LABELS[int(i)] for i in self.model.predict(imgs).argmax(axis=1)]

    def save(self, path):
        self.model.params.save(path)
        if self.pca is not None:
            save_tensors(f"{path}.pca", {"mean": self.pca.mean, "components": self.pca.components})

    def load(self, path):
        self.model.params.assign(ParameterTree.load(path))
        if Path(f"{path}.pca").exists():
            t = load_tensors(f"{path}.pca")
            n = self.room.n_cells
            self.pca = PCAProjector(t["mean"], t["components"], (n, n, 3))


def train_cnn(images, labels, rng, epochs=150, batch=32, room=Room(), filters=64, hidden=128,
              lr=1e-3, pca_components=0):
    clf = LosClassifier(rng, room=room, filters=filters, hidden=hidden, lr=lr)
    curve = clf.fit(images, labels, epochs, batch, rng, pca_components)
    return clf, curve
