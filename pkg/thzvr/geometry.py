"""Indoor scene, VRMM mobility and geometric LoS/NLoS determination.

The room is mapped onto a 2D lattice (1 m spacing by default). Users walk
between lattice destinations along the four cardinal directions; a user is
NLoS when an obstacle or a taller user sits on its line of sight to the MEC.
"""
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum

import numpy as np

from thzvr.errors import ConfigError


class Direction(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def step(self):
        return _STEPS[self]


_STEPS = {
    Direction.UP: (0.0, 1.0),
    Direction.DOWN: (0.0, -1.0),
    Direction.LEFT: (-1.0, 0.0),
    Direction.RIGHT: (1.0, 0.0),
}


class LinkState(str, Enum):
    LOS = "LoS"
    NLOS = "NLoS"


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float

    def xy(self):
        return np.array([self.x, self.y], dtype=float)

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance(self, other):
        return float(np.linalg.norm(self.as_array() - other.as_array()))


@dataclass(frozen=True)
class Obstacle:
    x_range: tuple
    y_range: tuple
    height: float

    def contains_xy(self, x, y):
        return (self.x_range[0] <= x <= self.x_range[1]
                and self.y_range[0] <= y <= self.y_range[1])


@dataclass(frozen=True)
class Room:
    width: float = 20.0
    height: float = 3.0
    grid_step: float = 1.0

    @property
    def n_cells(self):
        return int(round(self.width / self.grid_step)) + 1


@dataclass(frozen=True)
class MobilityState:
    position: Position3
    destination: tuple
    direction: Direction
    speed: float


@dataclass(frozen=True)
class SceneState:
    mec: Position3
    ris: Position3
    users: tuple
    obstacles: tuple = ()
    los_flags: tuple = field(default=())

    @property
    def positions(self):
        return [u.position for u in self.users]

    def with_flags(self, flags):
        return replace(self, los_flags=tuple(flags))


def free_cells(room, obstacles):
    """Lattice points a destination may be drawn from (outside every obstacle)."""
    cells = []
    for i in range(room.n_cells):
        for j in range(room.n_cells):
            x, y = i * room.grid_step, j * room.grid_step
            if not any(o.contains_xy(x, y) for o in obstacles):
                cells.append((x, y))
    return cells


def _toward(position, destination, rng):
    """Directions that shrink the distance to the destination (one picked at random)."""
    dx = destination[0] - position.x
    dy = destination[1] - position.y
    options = []
    if dx > 1e-9:
        options.append(Direction.RIGHT)
    elif dx < -1e-9:
        options.append(Direction.LEFT)
    if dy > 1e-9:
        options.append(Direction.UP)
    elif dy < -1e-9:
        options.append(Direction.DOWN)
    if not options:
        return None
    return options[int(rng.integers(len(options)))]


def _reduces(direction, position, destination):
    sx, sy = direction.step
    dx = destination[0] - position.x
    dy = destination[1] - position.y
    return sx * dx > 1e-9 or sy * dy > 1e-9


def vrmm_step(state, rng, room=Room(), obstacles=()):
    """One VRMM slot: move `speed` metres toward the destination, or redraw it on arrival."""
    if state.speed <= 0:
        raise ConfigError(f"user speed must be positive, got {state.speed}")

    pos = state.position
    dest = state.destination
    if abs(pos.x - dest[0]) < 1e-9 and abs(pos.y - dest[1]) < 1e-9:
        cells = free_cells(room, obstacles)
        while True:
            new_dest = cells[int(rng.integers(len(cells)))]
            direction = _toward(pos, new_dest, rng)
            if direction is not None or len(cells) == 1:
                break
        return replace(state, destination=new_dest,
                       direction=direction if direction is not None else state.direction)

    direction = state.direction
    if not _reduces(direction, pos, dest):
        direction = _toward(pos, dest, rng)

    sx, sy = direction.step
    if sx:
        remaining = abs(dest[0] - pos.x)
        x = pos.x + sx * min(state.speed, remaining)
        y = pos.y
    else:
        remaining = abs(dest[1] - pos.y)
        x = pos.x
        y = pos.y + sy * min(state.speed, remaining)
    x = float(np.clip(x, 0.0, room.width))
    y = float(np.clip(y, 0.0, room.width))
    moved = Position3(x, y, pos.z)

    # turn onto the other axis once this one is exhausted
    if not _reduces(direction, moved, dest):
        nxt = _toward(moved, dest, rng)
        if nxt is not None:
            direction = nxt
    return MobilityState(moved, dest, direction, state.speed)


def blocked_by_user(mec, blocker, user, colinear_tol=0.3):
    """Does `blocker` stand on the MEC→user line of sight?"""
    h_a, h_b, h_u = mec.z, blocker.z, user.z
    if h_b >= h_a:
        return False
    ray = blocker.xy() - mec.xy()
    l = float(np.linalg.norm(ray))
    if l < 1e-12:
        return False
    u = ray / l
    w = user.xy() - mec.xy()
    along = float(w @ u)
    if along <= l:
        return False
    perp = abs(float(w[0] * u[1] - w[1] * u[0]))
    if perp > colinear_tol:
        return False
    threshold = (h_a - h_u) * l / (h_a - h_b)
    return float(np.linalg.norm(w)) < threshold


def _clip_segment(p0, p1, x_range, y_range):
    """Liang-Barsky clip of p0→p1 against a rectangle; returns (t_in, t_out) or None."""
    d = p1 - p0
    t_in, t_out = 0.0, 1.0
    for axis, (lo, hi) in enumerate((x_range, y_range)):
        if abs(d[axis]) < 1e-15:
            if p0[axis] < lo or p0[axis] > hi:
                return None
            continue
        t0 = (lo - p0[axis]) / d[axis]
        t1 = (hi - p0[axis]) / d[axis]
        if t0 > t1:
            t0, t1 = t1, t0
        t_in = max(t_in, t0)
        t_out = min(t_out, t1)
        if t_in > t_out:
            return None
    return t_in, t_out


def blocked_by_obstacle(mec, user, obstacle):
    """True when the 2D MEC→user segment crosses the obstacle footprint below its top.

    A touch of the boundary (zero-length overlap) does not block. The line of
    sight descends linearly from the MEC height to the user height, so the
    lowest crossing point decides for partial-height obstacles.
    """
    p0, p1 = mec.xy(), user.xy()
    if np.allclose(p0, p1):
        return obstacle.contains_xy(p0[0], p0[1]) and obstacle.height >= user.z
    clipped = _clip_segment(p0, p1, obstacle.x_range, obstacle.y_range)
    if clipped is None:
        return False
    t_in, t_out = clipped
    if (t_out - t_in) * float(np.linalg.norm(p1 - p0)) < 1e-9:
        return False
    h_in = mec.z + t_in * (user.z - mec.z)
    h_out = mec.z + t_out * (user.z - mec.z)
    return obstacle.height >= min(h_in, h_out)


def los_status(scene, colinear_tol=0.3):
    """LoS/NLoS flag per user: NLoS when any obstacle or any other user blocks it."""
    flags = []
    positions = scene.positions
    for k, user in enumerate(positions):
        blocked = any(blocked_by_obstacle(scene.mec, user, o) for o in scene.obstacles)
        if not blocked:
            blocked = any(blocked_by_user(scene.mec, other, user, colinear_tol)
                          for j, other in enumerate(positions) if j != k)
        flags.append(LinkState.NLOS if blocked else LinkState.LOS)
    return flags


def random_scene(rng, room, mec, ris, obstacles, n_users, height_range, speed=1.0,
                 colinear_tol=0.3):
    """Scene with users on free lattice points, heights uniform in `height_range`."""
    cells = free_cells(room, obstacles)
    users = []
    for _ in range(n_users):
        x, y = cells[int(rng.integers(len(cells)))]
        z = float(rng.uniform(*height_range))
        pos = Position3(float(x), float(y), z)
        dest = cells[int(rng.integers(len(cells)))]
        direction = _toward(pos, dest, rng) or Direction(int(rng.integers(4)))
        users.append(MobilityState(pos, dest, direction, speed))
    scene = SceneState(mec=mec, ris=ris, users=tuple(users), obstacles=tuple(obstacles))
    return scene.with_flags(los_status(scene, colinear_tol))


def step_scene(scene, rng, room, colinear_tol=0.3):
    users = tuple(vrmm_step(u, rng, room, scene.obstacles) for u in scene.users)
    moved = replace(scene, users=users)
    return moved.with_flags(los_status(moved, colinear_tol))


def azimuth(src, dst, broadside=0.0):
    """Angle of the 2D displacement src→dst measured from the array broadside (radians)."""
    d = dst.xy() - src.xy()
    return float(np.arctan2(d[1], d[0]) - broadside)
