"""Baseline controllers: a scripted approach-and-push policy and an MPPI planner.

The scripted policy sees only the agent observation.  The observation gives
the arm-to-goal *direction* but not its distance, so the goal position is
recovered as the intersection of that ray with the circle of radius
``d_og_xy`` around the object.  When both intersections are ahead of the arm
the policy keeps the one closest to its dead-reckoned previous estimate.

The planner is privileged: it rolls the true simulator forward from a copy
of the environment state.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._accel import jit
from .action import ActionBounds, map_action_kernel, velocity_to_action
from .dynamics import NC, P_MU, env_step_kernel
from .reward import RewardWeights, reward_from_distances, state_distances

HOVER = np.array([-1.0, 0.0, 0.0, 0.0])


def hover_policy(obs=None, episode=None):
    """Zero velocity command; the literal zero action would fly forward at half speed."""
    return HOVER.copy()


# ---------------------------------------------------------------------------
# scripted policy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptedParams:
    standoff: float = 0.15  # object centre to arm tip at the standoff point
    approach_speed_frac: float = 0.6
    push_speed_frac: float = 0.3
    align_tolerance: float = 0.02  # lateral, metres
    yaw_tolerance: float = 0.15
    height_tolerance: float = 0.02
    transit_clearance: float = 0.15  # arm above the object centre while flying over it
    keep_out: float = 0.22  # planar clearance from the object for a direct approach
    position_gain: float = 1.5
    push_gain: float = 1.5
    min_push_speed: float = 0.04
    yaw_gain: float = 1.5
    object_half_edge: float = 0.05
    arm_half_length: float = 0.125
    arm_radius: float = 0.01
    arm_offset: tuple = (0.30, 0.0, -0.30)
    completion_radius: float = 0.025
    dt: float = 0.1

    def __post_init__(self):
        if self.standoff <= self.object_half_edge:
            raise ValueError("standoff must exceed half the object edge")
        for name in ("approach_speed_frac", "push_speed_frac"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def _level(vec, roll, pitch):
    # vector from the (tilted) arm frame into the yaw-aligned level frame: Ry(pitch) Rx(roll) v
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    x, y, z = vec
    y, z = cr * y - sr * z, sr * y + cr * z
    x, z = cp * x + sp * z, -sp * x + cp * z
    return np.array([x, y, z])


def _rot2(v, angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def goal_candidates(obj_xy, u_goal, d_og):
    """Points on the ray ``t * u_goal`` (t >= 0) at planar distance ``d_og`` from ``obj_xy``."""
    b = float(u_goal @ obj_xy)
    disc = b * b - (float(obj_xy @ obj_xy) - d_og * d_og)
    if disc < 0.0:
        return [max(b, 0.0) * u_goal]
    r = math.sqrt(disc)
    return [t * u_goal for t in (b - r, b + r) if t >= 0.0] or [max(b + r, 0.0) * u_goal]


class ScriptedPolicy:
    """Fly to a standoff point behind the object, then push it along the object-goal line."""

    def __init__(self, params=None, bounds=None):
        self.params = params or ScriptedParams()
        self.bounds = bounds or ActionBounds()
        self.reset()

    def reset(self):
        self.goal_est = None
        self.prev_d_og = None
        self.pushing = False

    def _estimate_goal(self, obs, obj_xy):
        p = self.params
        u = _level(np.array([obs.u_mg_xy[0], obs.u_mg_xy[1], 0.0]), obs.roll, obs.pitch)[:2]
        n = math.hypot(u[0], u[1])
        if n < 1e-9:
            return obj_xy.copy() if obs.d_og_xy < 1e-9 else None
        u = u / n
        cands = goal_candidates(obj_xy, u, obs.d_og_xy)
        pred = None
        if self.goal_est is not None and self.prev_d_og is not None:
            # dead-reckon the previous estimate into the current arm frame
            dpsi = obs.omega[2] * p.dt
            v = _level(obs.v, obs.roll, obs.pitch)[:2]
            r = np.array(p.arm_offset[:2])
            pred = _rot2(self.goal_est - _rot2(v, dpsi) * p.dt, -dpsi) - r + _rot2(r, -dpsi)
            # a jump in the goal distance means the goal was replaced
            expected = math.hypot(*(pred - obj_xy))
            if abs(expected - obs.d_og_xy) > 0.05:
                pred = None
        if len(cands) == 1 or pred is None:
            return cands[-1]
        return min(cands, key=lambda c: float((c - pred) @ (c - pred)))

    def __call__(self, obs, episode=None):
        return self.act(obs)

    def act(self, obs):
        p = self.params
        obj = _level(obs.d_mo * np.asarray(obs.u_mo), obs.roll, obs.pitch)
        obj_xy = obj[:2]
        goal = self._estimate_goal(obs, obj_xy)
        self.goal_est = goal
        self.prev_d_og = obs.d_og_xy
        if goal is None or obs.d_og_xy < p.completion_radius:
            self.pushing = False
            return HOVER.copy()

        g_dir = goal - obj_xy
        g_dir = g_dir / max(math.hypot(*g_dir), 1e-12)
        g_lat = np.array([-g_dir[1], g_dir[0]])
        rel = -obj_xy  # arm relative to object
        along = float(rel @ g_dir)
        lat = float(rel @ g_lat)
        yaw_err = math.atan2(g_dir[1], g_dir[0])
        dz = obj[2]  # object centre above the arm

        contact_along = p.object_half_edge + p.arm_half_length + p.arm_radius
        behind = along <= -(contact_along - 0.02)
        aligned = (
            abs(lat) < p.align_tolerance
            and behind
            and abs(yaw_err) < p.yaw_tolerance
            and abs(dz) < p.height_tolerance
        )
        keep = self.pushing and abs(lat) < 2.5 * p.align_tolerance and behind and abs(yaw_err) < 2 * p.yaw_tolerance
        self.pushing = aligned or keep

        s_max = self.bounds.s_xy_max
        if self.pushing:
            speed = min(max(p.push_gain * obs.d_og_xy, p.min_push_speed), p.push_speed_frac * s_max)
            v_xy = speed * g_dir - p.position_gain * lat * g_lat
            v_z = p.position_gain * dz
            yaw_rate = p.yaw_gain * yaw_err
        else:
            target = obj_xy - (p.standoff + p.arm_half_length) * g_dir
            to_target = target  # arm sits at the origin
            dist = math.hypot(*to_target)
            # planar distance from the object to the straight path arm -> target
            seg = to_target
            t = 0.0 if dist < 1e-9 else min(max(float((obj_xy @ seg) / (seg @ seg)), 0.0), 1.0)
            clearance = math.hypot(*(t * seg - obj_xy))
            z_goal = dz
            if clearance < p.keep_out and dist > 0.03:
                z_goal = dz + p.transit_clearance
            v_xy = p.position_gain * to_target
            # rise to transit height before moving sideways past the object
            climbing = z_goal > dz and z_goal > 0.03
            if climbing:
                v_xy = np.zeros(2)
            sp = math.hypot(*v_xy)
            cap = p.approach_speed_frac * s_max
            if sp > cap:
                v_xy = v_xy * (cap / sp)
            v_z = p.position_gain * z_goal
            yaw_rate = 0.0 if climbing else p.yaw_gain * yaw_err

        max_rate = self.bounds.yaw_rate_max
        yaw_rate = min(max(yaw_rate, -max_rate), max_rate)
        # the arm is offset from the yaw axis: cancel the swing it picks up while turning
        r = p.arm_offset
        v_body = np.array([v_xy[0] + yaw_rate * r[1], v_xy[1] - yaw_rate * r[0]])
        sp = math.hypot(*v_body)
        if sp > s_max:
            v_body *= s_max / sp
        return velocity_to_action((v_body[0], v_body[1], v_z), yaw_rate, self.bounds)


def scripted_policy(obs, params=None, state=None):
    """Stateless convenience wrapper; pass a :class:`ScriptedPolicy` as ``state`` to keep goal tracking."""
    policy = state if state is not None else ScriptedPolicy(params)
    return policy.act(obs)


# ---------------------------------------------------------------------------
# MPPI
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MPPIConfig:
    horizon: int = 20
    samples: int = 256
    temperature: float = 1.0
    noise_sigma: tuple = (0.3, 0.3, 0.3, 0.3)
    iterations: int = 1
    noise_clip: float = 2.0
    planning_mu: float = None  # plan with this friction instead of the true one

    def __post_init__(self):
        if self.horizon < 1 or self.samples < 1 or self.iterations < 1:
            raise ValueError("horizon, samples and iterations must be >= 1")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        sigma = self.noise_sigma
        if np.isscalar(sigma):
            sigma = (float(sigma),) * 4
        object.__setattr__(self, "noise_sigma", tuple(float(s) for s in sigma))
        if len(self.noise_sigma) != 4 or min(self.noise_sigma) < 0:
            raise ValueError("noise_sigma needs four non-negative entries")


@jit
def rollout_returns(state0, params, goal, prev_d, sequences, bounds, weights, dt, returns):
    """Undiscounted return of each action sequence ``sequences[k]`` from ``state0``."""
    K = sequences.shape[0]
    H = sequences.shape[1]
    state = np.empty_like(state0)
    ctrl = np.empty(4)
    contact = np.zeros(NC)
    dist = np.empty(4)
    for k in range(K):
        state[:] = state0
        prev = prev_d
        total = 0.0
        for t in range(H):
            map_action_kernel(sequences[k, t], bounds, ctrl)
            env_step_kernel(state, ctrl, params, dt, contact)
            state_distances(state, params, goal, dist)
            total += reward_from_distances(dist[0], dist[1], dist[2], prev - dist[2], dist[3], weights)
            prev = dist[2]
        returns[k] = total


def mppi_weights(returns, temperature):
    """Normalized ``exp((R - max R) / temperature)``."""
    r = np.asarray(returns, dtype=float)
    w = np.exp((r - r.max()) / temperature)
    return w / w.sum()


class MPPIPlanner:
    """Receding-horizon MPPI over raw action sequences, warm-started from the shifted previous plan."""

    def __init__(self, cfg=None, bounds=None, weights=None, dt=0.1, seed=0, rng=None):
        self.cfg = cfg or MPPIConfig()
        self.bounds = bounds or ActionBounds()
        self.weights = weights or RewardWeights()
        self.dt = dt
        self.rng = rng if rng is not None else np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        self.sigma = np.array(self.cfg.noise_sigma)
        self.reset()

    def reset(self):
        self.plan = np.zeros((self.cfg.horizon, 4))
        self.last_returns = None
        self.last_sequences = None
        self.last_weights = None

    def _params(self, params):
        if self.cfg.planning_mu is None:
            return params
        p = params.copy()
        p[P_MU] = self.cfg.planning_mu
        return p

    def plan_action(self, state, params, goal, prev_d):
        cfg = self.cfg
        params = self._params(np.asarray(params, dtype=float))
        goal = np.asarray(getattr(goal, "position", goal), dtype=float)
        bounds = self.bounds.as_array()
        w_arr = self.weights.as_array()
        returns = np.empty(cfg.samples)
        for _ in range(cfg.iterations):
            noise = self.rng.standard_normal((cfg.samples, cfg.horizon, 4)) * self.sigma
            seqs = np.clip(self.plan[None] + noise, -cfg.noise_clip, cfg.noise_clip)
            rollout_returns(np.asarray(state, dtype=float), params, goal, float(prev_d), seqs, bounds, w_arr,
                            self.dt, returns)
            w = mppi_weights(returns, cfg.temperature)
            self.plan = np.tensordot(w, seqs, axes=1)
        self.last_returns = returns.copy()
        self.last_sequences = seqs
        self.last_weights = w
        # raw, within [-noise_clip, noise_clip]; the action mapping clamps to [-1, 1]
        action = self.plan[0].copy()
        self.plan = np.concatenate([self.plan[1:], self.plan[-1:]], axis=0)
        return action

    def __call__(self, obs, episode):
        return self.plan_action(episode.state, episode.params, episode.goal, episode.prev_d)


def mppi_plan(env, goal, prev_d, cfg=None, rng=None, planner=None):
    """One planning step from an environment snapshot (``EnvState``)."""
    planner = planner or MPPIPlanner(cfg, rng=rng)
    return planner.plan_action(env.state, env.params, goal, prev_d)
