import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aerialpush.action import ActionBounds, map_action, velocity_to_action

raw = st.floats(-5, 5, allow_nan=False)


def _ctrl(a):
    u = map_action(a)
    return np.array([*u.velocity, u.yaw_rate])


def test_zero_speed_when_a1_minimum():
    np.testing.assert_allclose(_ctrl([-1, 0.7, 0, 0]), [0, 0, 0, 0], atol=1e-15)


def test_full_forward_down_and_yaw():
    np.testing.assert_allclose(_ctrl([1, 0, -1, 1]), [1, 0, -0.5, math.pi / 4], atol=1e-15)


def test_sideways():
    np.testing.assert_allclose(_ctrl([1, 0.5, 0, 0]), [0, 1, 0, 0], atol=1e-15)


def test_backward_half_speed():
    np.testing.assert_allclose(_ctrl([0, 1, 0, 0]), [-0.5, 0, 0, 0], atol=1e-15)


@given(raw, raw, raw, raw)
def test_output_within_bounds(a1, a2, a3, a4):
    b = ActionBounds()
    u = map_action([a1, a2, a3, a4], b)
    assert math.hypot(*u.velocity[:2]) <= b.s_xy_max + 1e-12
    assert abs(u.velocity[2]) <= b.s_z_max + 1e-12
    assert abs(u.yaw_rate) <= b.yaw_rate_max + 1e-12


def test_planar_speed_identity(rng):
    b = ActionBounds()
    for a in rng.uniform(-1, 1, (10_000, 4)):
        u = map_action(a, b)
        assert math.hypot(*u.velocity[:2]) == pytest.approx(b.s_xy_max * (a[0] + 1) / 2, abs=1e-12)


@given(st.floats(-1, 1), st.floats(-0.999, 0.999))
def test_direction_angle(a1, a2):
    u = map_action([max(a1, -0.99), a2, 0, 0])
    assert math.atan2(u.velocity[1], u.velocity[0]) == pytest.approx(math.pi * a2, abs=1e-9)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.5, 0.5), st.floats(-0.7, 0.7))
def test_velocity_to_action_inverts(vx, vy, vz, w):
    if math.hypot(vx, vy) > 1.0:
        return
    a = velocity_to_action((vx, vy, vz), w)
    u = map_action(a)
    np.testing.assert_allclose(u.velocity, [vx, vy, vz], atol=1e-9)
    assert u.yaw_rate == pytest.approx(w, abs=1e-12)


def test_bounds_validation():
    with pytest.raises(ValueError):
        ActionBounds(s_xy_max=0)
