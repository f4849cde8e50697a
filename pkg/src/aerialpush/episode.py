"""Episode lifecycle: reset, goal scheduling, termination and the step loop."""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .action import ActionBounds, clamp_action, map_action_kernel
from .dynamics import (
    NC,
    NS,
    S_OPOS,
    S_VPOS,
    DynamicsParams,
    EnvState,
    ObjectState,
    VehicleState,
    env_step_kernel,
    pack_params,
    pack_state,
    unpack_contact,
)
from .observation import OBS_DIM, Observation, observation_kernel, render_env_depth
from .reward import DistanceSet, RewardWeights, state_distances, step_reward
from .scene import GoalSpec, SceneParams, VehicleGeometry, alternating_goal, random_goal

ALTERNATING = "alternating"
RANDOM = "random"


class ResetReason(str, enum.Enum):
    TIME_LIMIT = "TimeLimit"
    VEHICLE_COLLISION = "VehicleCollision"
    OBJECT_OFF_TABLE = "ObjectOffTable"
    ESCAPED_RADIUS = "EscapedRadius"


class EpisodeDoneError(RuntimeError):
    pass


@dataclass(frozen=True)
class EpisodeConfig:
    max_steps: int = 1000
    dt: float = 0.1
    collision_grace: float = 2.0
    off_table_grace: float = 2.0
    escape_radius: float = 5.0
    goal_mode: str = ALTERNATING
    training_mode: bool = True
    start_distance: float = 1.0  # arm centre behind the object at reset
    completion_radius: float = 0.025

    def __post_init__(self):
        if self.max_steps < 1 or min(self.dt, self.collision_grace, self.off_table_grace, self.escape_radius) <= 0:
            raise ValueError("episode limits must be positive")
        if self.goal_mode not in (ALTERNATING, RANDOM):
            raise ValueError(f"goal_mode must be {ALTERNATING!r} or {RANDOM!r}")

    @staticmethod
    def grace_steps(seconds, dt):
        return max(1, int(math.ceil(seconds / dt - 1e-9)))

    @property
    def collision_steps(self):
        return self.grace_steps(self.collision_grace, self.dt)

    @property
    def off_table_steps(self):
        return self.grace_steps(self.off_table_grace, self.dt)


@dataclass
class Timers:
    steps: int = 0
    collision_steps: int = 0
    off_table_steps: int = 0

    def update(self, vehicle_collision, object_on_table):
        self.steps += 1
        self.collision_steps = self.collision_steps + 1 if vehicle_collision else 0
        self.off_table_steps = self.off_table_steps + 1 if not object_on_table else 0


@dataclass
class EpisodeStats:
    goals_completed: int = 0
    steps: int = 0
    total_reward: float = 0.0
    reset_reason: ResetReason = None
    collided: bool = False


def check_termination(env, timers, cfg):
    """Reason to reset, or None.  Checked in order: escape, collision, object off table, time limit."""
    s = env.state if isinstance(env, EnvState) else env
    if math.sqrt(s[S_VPOS] ** 2 + s[S_VPOS + 1] ** 2 + s[S_VPOS + 2] ** 2) > cfg.escape_radius:
        return ResetReason.ESCAPED_RADIUS
    if cfg.training_mode and timers.collision_steps >= cfg.collision_steps:
        return ResetReason.VEHICLE_COLLISION
    if timers.off_table_steps >= cfg.off_table_steps:
        return ResetReason.OBJECT_OFF_TABLE
    if timers.steps >= cfg.max_steps:
        return ResetReason.TIME_LIMIT
    return None


class GoalScheduler:
    def __init__(self, mode, scene):
        if mode not in (ALTERNATING, RANDOM):
            raise ValueError(f"unknown goal mode {mode!r}")
        self.mode = mode
        self.scene = scene

    def first(self, object_start, rng, completion_radius=0.025):
        if self.mode == ALTERNATING:
            return alternating_goal(GoalSpec(object_start, completion_radius), self.scene)
        return random_goal(rng, self.scene, object_start, completion_radius=completion_radius)

    def next(self, goal, rng):
        if self.mode == ALTERNATING:
            return alternating_goal(goal, self.scene)
        return random_goal(rng, self.scene, goal)


def update_goal(obj, goal, scheduler, rng):
    """Returns ``(goal, completed)``; a completed goal is replaced by the scheduler's next one."""
    p = obj.position if isinstance(obj, ObjectState) else np.asarray(obj, dtype=float)
    d = math.hypot(p[0] - goal.position[0], p[1] - goal.position[1])
    if d < goal.completion_radius:
        return scheduler.next(goal, rng), True
    return goal, False


def start_states(scene, geom, cfg):
    """Vehicle and object at reset: object on the near goal endpoint, arm behind it at mid-height."""
    far_end, near_end = scene.goal_endpoints()
    obj = ObjectState(position=near_end.copy())
    direction = far_end - near_end
    direction /= np.linalg.norm(direction)
    arm = near_end - cfg.start_distance * direction
    yaw = math.atan2(direction[1], direction[0])
    c, s = math.cos(yaw), math.sin(yaw)
    ox, oy, oz = geom.arm_offset_body
    body = arm - np.array([c * ox - s * oy, s * ox + c * oy, oz])
    return VehicleState(position=body, yaw=yaw), obj


def episode_rng(seed, *key):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class StepRecord:
    time: float
    vehicle: np.ndarray  # x, y, z, yaw
    object: np.ndarray  # x, y, z
    goal: np.ndarray
    action: np.ndarray
    reward: object  # RewardBreakdown
    arm_contact: bool
    vehicle_collision: bool
    object_on_table: bool


@dataclass
class Episode:
    """One environment: owns its packed state, goal, timers and RNG.

    ``state`` may be a row view into a batch array; the batch engine then
    advances the physics and calls :meth:`finish_step`.
    """

    scene: SceneParams = field(default_factory=SceneParams)
    cfg: EpisodeConfig = field(default_factory=EpisodeConfig)
    geom: VehicleGeometry = field(default_factory=VehicleGeometry)
    dyn: DynamicsParams = field(default_factory=DynamicsParams)
    bounds: ActionBounds = field(default_factory=ActionBounds)
    weights: RewardWeights = field(default_factory=RewardWeights)
    camera: object = None
    record: bool = False
    state: np.ndarray = None
    params: np.ndarray = None

    def __post_init__(self):
        if self.state is None:
            self.state = np.zeros(NS)
        if self.params is None:
            self.params = np.zeros_like(pack_params())
        self.params[:] = pack_params(self.scene, self.geom, self.dyn)
        self._bounds = self.bounds.as_array()
        self.scheduler = GoalScheduler(self.cfg.goal_mode, self.scene)
        self.contact = np.zeros(NC)
        self.goal = None
        self.done = True
        self.log = []

    @property
    def env(self):
        return EnvState(self.state, self.params)

    def reset(self, seed=0, rng=None):
        vehicle, obj = start_states(self.scene, self.geom, self.cfg)
        pack_state(vehicle, obj, out=self.state)
        self.rng = rng if rng is not None else episode_rng(seed)
        self.goal = self.scheduler.first(obj.position, self.rng, self.cfg.completion_radius)
        self.prev_d = self._d_og()
        self.timers = Timers()
        self.stats = EpisodeStats()
        self.done = False
        self.log = []
        self.contact[:] = 0.0
        return self.observe(0.0)

    def _d_og(self):
        s = self.state
        return math.hypot(s[S_OPOS] - self.goal.position[0], s[S_OPOS + 1] - self.goal.position[1])

    def observe(self, delta):
        vec = np.empty(OBS_DIM)
        observation_kernel(self.state, self.params, self.goal.position, self.prev_d, delta, vec)
        depth = render_env_depth(self.env, self.scene, self.camera) if self.camera is not None else None
        return Observation.from_vector(vec, depth)

    def control(self, action, out=None):
        ctrl = np.empty(4) if out is None else out
        map_action_kernel(np.asarray(action, dtype=float).reshape(4), self._bounds, ctrl)
        return ctrl

    def step(self, action):
        if self.done:
            raise EpisodeDoneError("episode is done; call reset()")
        action = np.asarray(action, dtype=float).reshape(4)
        env_step_kernel(self.state, self.control(action), self.params, self.cfg.dt, self.contact)
        return self.finish_step(action)

    def finish_step(self, action):
        """Goal update, reward, observation and termination after the physics advanced."""
        if self.done:
            raise EpisodeDoneError("episode is done; call reset()")
        d = np.empty(4)
        state_distances(self.state, self.params, self.goal.position, d)
        dist = DistanceSet(d[0], d[1], d[2], self.prev_d - d[2], d[3])
        reward = step_reward(dist, self.weights)
        goal_before = self.goal
        self.goal, completed = update_goal(self.state[S_OPOS : S_OPOS + 3], self.goal, self.scheduler, self.rng)
        if completed:
            self.stats.goals_completed += 1
            self.prev_d = self._d_og()
            obs = self.observe(0.0)
        else:
            self.prev_d = d[2]
            obs = self.observe(dist.delta_d_og_xy)

        contact = unpack_contact(self.contact)
        self.timers.update(contact.vehicle_env_collision, contact.object_on_table)
        self.stats.steps = self.timers.steps
        self.stats.total_reward += reward.total
        self.stats.collided = self.stats.collided or contact.vehicle_env_collision
        reason = check_termination(self.state, self.timers, self.cfg)
        if reason is not None:
            self.done = True
            self.stats.reset_reason = reason
        if self.record:
            s = self.state
            self.log.append(StepRecord(
                time=self.timers.steps * self.cfg.dt,
                vehicle=np.array([s[0], s[1], s[2], s[6]]),
                object=s[S_OPOS : S_OPOS + 3].copy(),
                goal=goal_before.position.copy(),
                action=clamp_action(action),
                reward=reward,
                arm_contact=contact.arm_object is not None,
                vehicle_collision=contact.vehicle_env_collision,
                object_on_table=contact.object_on_table,
            ))
        info = {
            "contact": contact,
            "goal": self.goal,
            "completed": completed,
            "reset_reason": reason,
        }
        return obs, reward, self.done, info


def reset(env, seed=0):
    """Reset an :class:`Episode` with a seed and return its first observation."""
    return env.reset(seed=seed)


def episode_step(env, action):
    """Advance an :class:`Episode` by one step: ``(obs, reward, done, info)``."""
    return env.step(action)
