"""Frames, rotations and small geometric helpers.

Vectors are plain ``float64`` numpy arrays of shape ``(3,)`` and rotations are
``(3, 3)`` matrices.  Euler angles follow the intrinsic Z-Y-X convention
(yaw, then pitch, then roll), i.e. ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._accel import jit

E3 = np.array([0.0, 0.0, 1.0])
ZERO_DISTANCE = 1e-9


@jit
def euler_to_matrix(roll, pitch, yaw):
    cr, sr = np.cos(roll), np.sin(roll)
    cp, sp = np.cos(pitch), np.sin(pitch)
    cy, sy = np.cos(yaw), np.sin(yaw)
    R = np.empty((3, 3))
    R[0, 0] = cy * cp
    R[0, 1] = cy * sp * sr - sy * cr
    R[0, 2] = cy * sp * cr + sy * sr
    R[1, 0] = sy * cp
    R[1, 1] = sy * sp * sr + cy * cr
    R[1, 2] = sy * sp * cr - cy * sr
    R[2, 0] = -sp
    R[2, 1] = cp * sr
    R[2, 2] = cp * cr
    return R


def rotation_from_euler(roll, pitch, yaw):
    """Rotation matrix for intrinsic Z-Y-X Euler angles (radians)."""
    return euler_to_matrix(float(roll), float(pitch), float(yaw))


def matrix_to_euler(R):
    """Inverse of :func:`rotation_from_euler` away from gimbal lock."""
    R = np.asarray(R, dtype=float)
    pitch = -np.arcsin(np.clip(R[2, 0], -1.0, 1.0))
    roll = np.arctan2(R[2, 1], R[2, 2])
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return float(roll), float(pitch), float(yaw)


def tilt_metric(R):
    """``|1 - e3' R e3|``: zero when the body z-axis is vertical, 2 when inverted."""
    return float(abs(1.0 - np.asarray(R)[2, 2]))


def direction_and_distance(start, end):
    """Unit vector and Euclidean distance from ``start`` to ``end``.

    Coincident points (distance below 1e-9) give the zero vector.
    """
    delta = np.asarray(end, dtype=float) - np.asarray(start, dtype=float)
    dist = float(np.sqrt(delta @ delta))
    if dist < ZERO_DISTANCE:
        return np.zeros_like(delta), dist
    return delta / dist, dist


def is_rotation(R, atol=1e-9):
    R = np.asarray(R, dtype=float)
    return (
        R.shape == (3, 3)
        and np.allclose(R @ R.T, np.eye(3), atol=atol)
        and abs(np.linalg.det(R) - 1.0) <= atol
    )


@dataclass
class Pose:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def transform(self, point_local):
        """Map a point from this frame to the parent frame."""
        return self.position + self.orientation @ np.asarray(point_local, dtype=float)

    def compose(self, child):
        return Pose(self.transform(child.position), self.orientation @ child.orientation)
