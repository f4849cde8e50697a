"""Environment geometry, per-environment parameters and goal schedules."""

from dataclasses import dataclass

import numpy as np

LOW_FRICTION_RANGE = (0.05, 0.3)
HIGH_FRICTION_RANGE = (0.55, 0.8)
MIN_GOAL_SEPARATION = 0.15
MAX_GOAL_REJECTIONS = 1000


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class SceneParams:
    """Room, table and object parameters shared by one environment.

    The room is the box ``[-h, h]^2 x [0, room_height]`` around the world
    origin.  The table is a solid box whose top surface is centred at
    ``(table_x, table_y, table_height)``.
    """

    room_half_extent: float = 2.5
    room_height: float = 5.0
    table_x: float = 0.0
    table_y: float = 0.0
    table_top_x: float = 0.8
    table_top_y: float = 0.8
    table_height: float = 0.5
    object_edge: float = 0.1
    object_mass: float = 0.5
    friction_mu: float = 0.4
    gravity: float = 9.81
    goal_separation: float = 0.5

    def __post_init__(self):
        if self.object_edge <= 0 or self.object_mass <= 0 or self.friction_mu <= 0:
            raise SceneError("object_edge, object_mass and friction_mu must be positive")
        if self.gravity <= 0 or self.table_height <= 0:
            raise SceneError("gravity and table_height must be positive")
        h = self.room_half_extent
        if (
            abs(self.table_x) + self.table_top_x / 2 > h
            or abs(self.table_y) + self.table_top_y / 2 > h
            or self.table_height >= self.room_height
        ):
            raise SceneError("table does not fit inside the room")
        if self.goal_separation / 2 > self.table_top_x / 2 - self.object_edge / 2:
            raise SceneError("alternating goals fall off the table top")

    @property
    def table_center(self):
        return np.array([self.table_x, self.table_y, self.table_height])

    @property
    def object_rest_z(self):
        return self.table_height + self.object_edge / 2

    def goal_endpoints(self):
        """The two alternating goal points, symmetric about the table centre along x."""
        c = np.array([self.table_x, self.table_y, self.object_rest_z])
        off = np.array([self.goal_separation / 2, 0.0, 0.0])
        return c + off, c - off

    def on_table_top(self, point, inset=0.0):
        p = np.asarray(point, dtype=float)
        return (
            abs(p[0] - self.table_x) <= self.table_top_x / 2 - inset + 1e-12
            and abs(p[1] - self.table_y) <= self.table_top_y / 2 - inset + 1e-12
        )


@dataclass(frozen=True)
class VehicleGeometry:
    """Collision cage and fixed arm.  ``arm_offset_body`` is the arm centre in the body frame;
    the arm lies along the body x-axis."""

    body_radius: float = 0.25
    arm_offset_body: tuple = (0.30, 0.0, -0.30)
    arm_exposed_length: float = 0.25
    arm_radius: float = 0.01

    def __post_init__(self):
        if self.body_radius <= 0 or self.arm_exposed_length <= 0 or self.arm_radius <= 0:
            raise SceneError("vehicle dimensions must be positive")
        object.__setattr__(self, "arm_offset_body", tuple(float(v) for v in self.arm_offset_body))

    @property
    def arm_half_length(self):
        return self.arm_exposed_length / 2


@dataclass(frozen=True)
class GoalSpec:
    position: np.ndarray
    completion_radius: float = 0.025

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).copy())

    def __eq__(self, other):
        return (
            isinstance(other, GoalSpec)
            and np.array_equal(self.position, other.position)
            and self.completion_radius == other.completion_radius
        )


def friction_schedule(n_envs):
    """Friction coefficients for ``n_envs`` environments.

    Half the batch is spread evenly (endpoints included) over the low range and
    half over the high range; a single point per range sits at the range minimum.
    """
    if n_envs < 2 or n_envs % 2:
        raise SceneError(f"n_envs must be even and >= 2 to split across two friction ranges, got {n_envs}")
    half = n_envs // 2
    lo = np.linspace(*LOW_FRICTION_RANGE, half)
    hi = np.linspace(*HIGH_FRICTION_RANGE, half)
    return [float(v) for v in np.concatenate([lo, hi])]


def alternating_goal(current_goal, scene):
    """The table endpoint opposite ``current_goal``.

    A goal that is not exactly an endpoint maps to whichever endpoint is farther away.
    """
    a, b = scene.goal_endpoints()
    p = current_goal.position
    nxt = b if np.linalg.norm(p - a) <= np.linalg.norm(p - b) else a
    return GoalSpec(nxt, current_goal.completion_radius)


def random_goal(rng, scene, previous, min_separation=MIN_GOAL_SEPARATION, completion_radius=None):
    """Uniform goal on the inset table top at least ``min_separation`` (planar) from ``previous``."""
    prev = previous.position if isinstance(previous, GoalSpec) else np.asarray(previous, dtype=float)
    radius = previous.completion_radius if isinstance(previous, GoalSpec) else 0.025
    if completion_radius is not None:
        radius = completion_radius
    inset = scene.object_edge / 2
    hx = scene.table_top_x / 2 - inset
    hy = scene.table_top_y / 2 - inset
    if hx <= 0 or hy <= 0:
        raise SceneError("table top too small for the object")
    for _ in range(MAX_GOAL_REJECTIONS):
        x = scene.table_x + rng.uniform(-hx, hx)
        y = scene.table_y + rng.uniform(-hy, hy)
        if np.hypot(x - prev[0], y - prev[1]) >= min_separation:
            return GoalSpec(np.array([x, y, scene.object_rest_z]), radius)
    raise SceneError(f"no goal {min_separation} m from {prev[:2]} after {MAX_GOAL_REJECTIONS} draws")
