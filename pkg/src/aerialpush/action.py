"""Agent actions in [-1, 1]^4 to bounded velocity commands."""

import math
from dataclasses import dataclass

import numpy as np

from ._accel import jit
from .dynamics import ControlInput


@dataclass(frozen=True)
class ActionBounds:
    s_xy_max: float = 1.0
    s_z_max: float = 0.5
    theta_max: float = math.pi
    yaw_rate_max: float = math.pi / 4

    def __post_init__(self):
        if min(self.s_xy_max, self.s_z_max, self.theta_max, self.yaw_rate_max) <= 0:
            raise ValueError("action bounds must be positive")

    def as_array(self):
        return np.array([self.s_xy_max, self.s_z_max, self.theta_max, self.yaw_rate_max])


@jit
def map_action_kernel(a, bounds, ctrl):
    """Write (vx, vy, vz, yaw_rate) for raw action ``a`` into ``ctrl``; ``a`` is clamped first."""
    a1 = min(max(a[0], -1.0), 1.0)
    a2 = min(max(a[1], -1.0), 1.0)
    a3 = min(max(a[2], -1.0), 1.0)
    a4 = min(max(a[3], -1.0), 1.0)
    speed = bounds[0] * ((a1 + 1.0) / 2.0)
    heading = bounds[2] * a2
    ctrl[0] = speed * math.cos(heading)
    ctrl[1] = speed * math.sin(heading)
    ctrl[2] = bounds[1] * a3
    ctrl[3] = bounds[3] * a4


def clamp_action(a):
    return np.clip(np.asarray(a, dtype=float).reshape(4), -1.0, 1.0)


def map_action(a, bounds=None):
    """Control input for action ``a``; planar speed is ``s_xy * (a1 + 1) / 2`` along heading ``theta_max * a2``."""
    bounds = bounds or ActionBounds()
    ctrl = np.empty(4)
    map_action_kernel(np.asarray(a, dtype=float).reshape(4), bounds.as_array(), ctrl)
    return ControlInput(ctrl[:3].copy(), float(ctrl[3]))


def velocity_to_action(v_body, yaw_rate, bounds=None):
    """Inverse of :func:`map_action` for a desired body-frame velocity, clipped to the bounds.

    Zero planar speed maps to ``a1 = -1`` with ``a2 = 0``.
    """
    bounds = bounds or ActionBounds()
    vx, vy, vz = (float(x) for x in v_body)
    speed = min(math.hypot(vx, vy), bounds.s_xy_max)
    a1 = 2.0 * speed / bounds.s_xy_max - 1.0
    a2 = math.atan2(vy, vx) / bounds.theta_max if speed > 0.0 else 0.0
    a = np.array([a1, a2, vz / bounds.s_z_max, yaw_rate / bounds.yaw_rate_max])
    return np.clip(a, -1.0, 1.0)
