"""Agent observations: the scalar state vector and the onboard depth image."""

import math
from dataclasses import dataclass

import numpy as np

from ._accel import jit
from .dynamics import (
    P_ARM_X,
    P_ARM_Y,
    P_ARM_Z,
    S_OMEGA,
    S_OPOS,
    S_PITCH,
    S_ROLL,
    S_VPOS,
    S_VVEL,
    S_YAW,
    EnvState,
)
from .geometry import ZERO_DISTANCE, euler_to_matrix
from .render import CameraModel, SceneBoxes, render_depth

# flat scalar layout shared with the wire protocol
OBS_FIELDS = (
    "roll", "pitch",
    "v_x", "v_y", "v_z",
    "omega_x", "omega_y", "omega_z",
    "d_mo",
    "u_mo_x", "u_mo_y", "u_mo_z",
    "d_og_xy", "delta_d_og_xy",
    "u_mg_x", "u_mg_y",
)
OBS_DIM = len(OBS_FIELDS)


@dataclass
class Observation:
    roll: float
    pitch: float
    v: np.ndarray  # body frame
    omega: np.ndarray  # body frame
    d_mo: float
    u_mo: np.ndarray  # arm frame
    d_og_xy: float
    delta_d_og_xy: float
    u_mg_xy: np.ndarray  # arm frame x, y
    depth: np.ndarray = None

    def to_vector(self):
        return np.concatenate([
            [self.roll, self.pitch], self.v, self.omega, [self.d_mo], self.u_mo,
            [self.d_og_xy, self.delta_d_og_xy], self.u_mg_xy,
        ]).astype(float)

    @classmethod
    def from_vector(cls, vec, depth=None):
        x = np.asarray(vec, dtype=float)
        if x.shape != (OBS_DIM,):
            raise ValueError(f"observation vector must have {OBS_DIM} entries, got {x.shape}")
        return cls(
            roll=float(x[0]), pitch=float(x[1]), v=x[2:5].copy(), omega=x[5:8].copy(),
            d_mo=float(x[8]), u_mo=x[9:12].copy(), d_og_xy=float(x[12]), delta_d_og_xy=float(x[13]),
            u_mg_xy=x[14:16].copy(), depth=depth,
        )


@jit
def observation_kernel(state, params, goal, d_og, delta, out):
    R = euler_to_matrix(state[S_ROLL], state[S_PITCH], state[S_YAW])
    out[0] = state[S_ROLL]
    out[1] = state[S_PITCH]
    for i in range(3):
        # R^T v
        out[2 + i] = R[0, i] * state[S_VVEL] + R[1, i] * state[S_VVEL + 1] + R[2, i] * state[S_VVEL + 2]
        out[5 + i] = state[S_OMEGA + i]
    ox = params[P_ARM_X]
    oy = params[P_ARM_Y]
    oz = params[P_ARM_Z]
    arm = np.empty(3)
    for i in range(3):
        arm[i] = state[S_VPOS + i] + R[i, 0] * ox + R[i, 1] * oy + R[i, 2] * oz
    wx = state[S_OPOS] - arm[0]
    wy = state[S_OPOS + 1] - arm[1]
    wz = state[S_OPOS + 2] - arm[2]
    d_mo = math.sqrt(wx * wx + wy * wy + wz * wz)
    out[8] = d_mo
    for i in range(3):
        if d_mo < ZERO_DISTANCE:
            out[9 + i] = 0.0
        else:
            out[9 + i] = (R[0, i] * wx + R[1, i] * wy + R[2, i] * wz) / d_mo
    out[12] = d_og
    out[13] = delta
    gx = goal[0] - arm[0]
    gy = goal[1] - arm[1]
    gz = goal[2] - arm[2]
    mx = R[0, 0] * gx + R[1, 0] * gy + R[2, 0] * gz
    my = R[0, 1] * gx + R[1, 1] * gy + R[2, 1] * gz
    n = math.sqrt(mx * mx + my * my)
    if n < ZERO_DISTANCE:
        out[14] = 0.0
        out[15] = 0.0
    else:
        out[14] = mx / n
        out[15] = my / n


def render_env_depth(env, scene, camera):
    vehicle = env.vehicle
    obj = env.object
    origin, R = camera.world_pose(vehicle.position, vehicle.orientation)
    boxes = SceneBoxes.from_scene(scene, obj.position, obj.yaw)
    return render_depth(origin, R, camera, boxes)


def assemble_observation(env, goal, prev_d_og_xy, camera=None, scene=None):
    """Observation of ``env`` against ``goal``.

    ``prev_d_og_xy`` is the object-goal planar distance at the previous step
    for the same goal.  The depth image is rendered only when both ``camera``
    and ``scene`` are given.
    """
    if not isinstance(env, EnvState):
        raise TypeError("env must be an EnvState")
    g = np.asarray(getattr(goal, "position", goal), dtype=float)
    s = env.state
    d_og = math.hypot(s[S_OPOS] - g[0], s[S_OPOS + 1] - g[1])
    vec = np.empty(OBS_DIM)
    observation_kernel(s, env.params, g, d_og, prev_d_og_xy - d_og, vec)
    depth = render_env_depth(env, scene, camera) if camera is not None and scene is not None else None
    return Observation.from_vector(vec, depth)

