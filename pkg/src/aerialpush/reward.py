"""Reward shaping terms and the per-step reward.

The four shaping functions::

    f_pos(d, g)        = g / (1 + d^2)
    f_neg(d, g, tau)   = f_pos(d, g) - g - 1   if d > tau else -1
    f_delta(dd, g)     = g * dd                (dd > 0 when the distance shrank)
    f_impulse(d, g, tau) = g if d < tau else 0

combined as ``f_neg(d_mo_xy) * (1 + tilt) + f_neg(d_mo_z) + f_delta(dd_og) + f_impulse(d_og)``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._accel import jit
from .dynamics import (
    P_ARM_X,
    P_ARM_Y,
    P_ARM_Z,
    S_OPOS,
    S_PITCH,
    S_ROLL,
    S_VPOS,
    S_YAW,
)
from .geometry import euler_to_matrix

TILT_AS_PRINTED = "as_printed"
TILT_PENALTY = "penalty"


def f_pos(d, gamma):
    if d < 0:
        raise ValueError(f"distance must be non-negative, got {d}")
    return gamma / (1.0 + d * d)


def f_neg(d, gamma, tau):
    if d < 0 or tau < 0:
        raise ValueError(f"distance and threshold must be non-negative, got d={d}, tau={tau}")
    if d <= tau:
        return -1.0
    return f_pos(d, gamma) - gamma - 1.0


def f_delta(delta_d, gamma):
    return gamma * delta_d


def f_impulse(d, gamma, tau):
    if d < 0:
        raise ValueError(f"distance must be non-negative, got {d}")
    return gamma if d < tau else 0.0


@dataclass(frozen=True)
class RewardWeights:
    nav_xy_gamma: float = 2.0
    nav_xy_tau: float = 0.125
    nav_z_gamma: float = 2.0
    nav_z_tau: float = 0.05
    tilt_gamma: float = 1.0
    progress_gamma: float = 1000.0
    completion_gamma: float = 1500.0
    completion_tau: float = 0.025
    # "as_printed" multiplies by (1 + f_pos(d_q)); "penalty" by (1 + tilt_gamma - f_pos(d_q))
    tilt_mode: str = TILT_AS_PRINTED

    def __post_init__(self):
        gammas = (self.nav_xy_gamma, self.nav_z_gamma, self.tilt_gamma, self.progress_gamma, self.completion_gamma)
        if min(gammas) <= 0 or min(self.nav_xy_tau, self.nav_z_tau, self.completion_tau) < 0:
            raise ValueError("reward magnitudes must be positive and thresholds non-negative")
        if self.tilt_mode not in (TILT_AS_PRINTED, TILT_PENALTY):
            raise ValueError(f"unknown tilt_mode {self.tilt_mode!r}")

    def as_array(self):
        return np.array([
            self.nav_xy_gamma, self.nav_xy_tau, self.nav_z_gamma, self.nav_z_tau, self.tilt_gamma,
            self.progress_gamma, self.completion_gamma, self.completion_tau,
            0.0 if self.tilt_mode == TILT_AS_PRINTED else 1.0,
        ])


@dataclass(frozen=True)
class DistanceSet:
    d_mo_xy: float
    d_mo_z: float
    d_og_xy: float
    delta_d_og_xy: float
    d_q: float


@dataclass(frozen=True)
class RewardBreakdown:
    nav_xy_term: float
    nav_z_term: float
    tilt_factor: float
    progress_term: float
    completion_term: float
    total: float

    def as_dict(self):
        return asdict(self)


def tilt_factor(d_q, weights):
    if weights.tilt_mode == TILT_AS_PRINTED:
        return f_pos(d_q, weights.tilt_gamma)
    return weights.tilt_gamma - f_pos(d_q, weights.tilt_gamma)


def compute_distances(vehicle, geom, obj, goal, prev_d_og_xy):
    """Distances feeding the reward; ``prev_d_og_xy`` must refer to the same goal."""
    p_m = vehicle.arm_center(geom)
    p_o = obj.position
    p_g = goal.position if hasattr(goal, "position") else np.asarray(goal, dtype=float)
    d_og = math.hypot(p_o[0] - p_g[0], p_o[1] - p_g[1])
    return DistanceSet(
        d_mo_xy=math.hypot(p_m[0] - p_o[0], p_m[1] - p_o[1]),
        d_mo_z=abs(p_m[2] - p_o[2]),
        d_og_xy=d_og,
        delta_d_og_xy=prev_d_og_xy - d_og,
        d_q=abs(1.0 - math.cos(vehicle.roll) * math.cos(vehicle.pitch)),
    )


def step_reward(dist, weights=None):
    w = weights or RewardWeights()
    nav_xy = f_neg(dist.d_mo_xy, w.nav_xy_gamma, w.nav_xy_tau)
    tilt = tilt_factor(dist.d_q, w)
    nav_z = f_neg(dist.d_mo_z, w.nav_z_gamma, w.nav_z_tau)
    progress = f_delta(dist.delta_d_og_xy, w.progress_gamma)
    completion = f_impulse(dist.d_og_xy, w.completion_gamma, w.completion_tau)
    total = nav_xy * (1.0 + tilt) + nav_z + progress + completion
    return RewardBreakdown(nav_xy, nav_z, tilt, progress, completion, total)


# --- kernels for rollouts ---------------------------------------------------


@jit
def _neg(d, gamma, tau):
    if d <= tau:
        return -1.0
    return gamma / (1.0 + d * d) - gamma - 1.0


@jit
def state_distances(state, params, goal, out):
    """(d_mo_xy, d_mo_z, d_og_xy, d_q) of a packed state into ``out``."""
    R = euler_to_matrix(state[S_ROLL], state[S_PITCH], state[S_YAW])
    ox = params[P_ARM_X]
    oy = params[P_ARM_Y]
    oz = params[P_ARM_Z]
    mx = state[S_VPOS] + R[0, 0] * ox + R[0, 1] * oy + R[0, 2] * oz
    my = state[S_VPOS + 1] + R[1, 0] * ox + R[1, 1] * oy + R[1, 2] * oz
    mz = state[S_VPOS + 2] + R[2, 0] * ox + R[2, 1] * oy + R[2, 2] * oz
    px = state[S_OPOS]
    py = state[S_OPOS + 1]
    out[0] = math.hypot(mx - px, my - py)
    out[1] = abs(mz - state[S_OPOS + 2])
    out[2] = math.hypot(px - goal[0], py - goal[1])
    out[3] = abs(1.0 - math.cos(state[S_ROLL]) * math.cos(state[S_PITCH]))


@jit
def reward_from_distances(d_mo_xy, d_mo_z, d_og, delta, d_q, w):
    nav_xy = _neg(d_mo_xy, w[0], w[1])
    fp = w[4] / (1.0 + d_q * d_q)
    tilt = fp if w[8] == 0.0 else w[4] - fp
    total = nav_xy * (1.0 + tilt) + _neg(d_mo_z, w[2], w[3]) + w[5] * delta
    if d_og < w[7]:
        total += w[6]
    return total
