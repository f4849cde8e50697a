"""Pinhole depth rendering against the room, table and object boxes.

Depth is measured along the optical axis (z-buffer convention), clamped to
``[near, far]``; rays that hit nothing read ``far``.  The camera frame has x
along the optical axis, y to the left and z up; pixel ``(row, col)`` has its
origin at the top-left corner.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._accel import HAS_NUMBA, jit
from .geometry import euler_to_matrix

_BIG = 1e300


@dataclass(frozen=True)
class CameraModel:
    width: int = 64
    height: int = 64
    horizontal_fov: float = math.pi / 2
    near: float = 0.1
    far: float = 5.0
    mount_position: tuple = (0.2, 0.0, 0.0)  # in the body frame
    mount_pitch: float = 0.35  # radians, positive looks down

    def __post_init__(self):
        if not 0.0 < self.near < self.far:
            raise ValueError("need 0 < near < far")
        if not 0.0 < self.horizontal_fov < math.pi:
            raise ValueError("horizontal_fov must lie in (0, pi)")
        if self.width < 1 or self.height < 1:
            raise ValueError("image must have at least one pixel")

    @property
    def focal(self):
        return (self.width / 2) / math.tan(self.horizontal_fov / 2)

    def world_pose(self, vehicle_position, vehicle_rotation):
        """Camera origin and rotation (camera-to-world) for a vehicle pose."""
        R_mount = euler_to_matrix(0.0, self.mount_pitch, 0.0)
        origin = np.asarray(vehicle_position, dtype=float) + vehicle_rotation @ np.asarray(self.mount_position)
        return origin, vehicle_rotation @ R_mount

    def project(self, point_cam):
        """Continuous (col, row) image coordinates of a camera-frame point in front of the camera."""
        x, y, z = point_cam
        f = self.focal
        return self.width / 2 - f * y / x, self.height / 2 - f * z / x


@dataclass(frozen=True)
class SceneBoxes:
    """Flattened render geometry: room bounds, table box and object box."""

    room: np.ndarray  # (xlo, xhi, ylo, yhi, zlo, zhi)
    table: np.ndarray  # centre (3), half extents (3)
    obj: np.ndarray  # centre (3), half extents (3), yaw

    @classmethod
    def from_scene(cls, scene, object_position, object_yaw=0.0, object_visible=True):
        h = scene.room_half_extent
        room = np.array([-h, h, -h, h, 0.0, scene.room_height])
        th = scene.table_height / 2
        table = np.array([scene.table_x, scene.table_y, th, scene.table_top_x / 2, scene.table_top_y / 2, th])
        e = scene.object_edge / 2 if object_visible else 0.0
        obj = np.array([*np.asarray(object_position, dtype=float), e, e, e, object_yaw])
        return cls(room, table, obj)


# --- jitted per-pixel caster ------------------------------------------------


@jit
def _slab(o, d, lo, hi):
    # entry/exit parameters of a ray against one slab; (1, -1) flags a miss
    if abs(d) < 1e-15:
        if o < lo or o > hi:
            return 1.0, -1.0
        return -_BIG, _BIG
    t1 = (lo - o) / d
    t2 = (hi - o) / d
    if t1 > t2:
        return t2, t1
    return t1, t2


@jit
def _ray_box(ox, oy, oz, dx, dy, dz, cx, cy, cz, hx, hy, hz):
    a0, b0 = _slab(ox, dx, cx - hx, cx + hx)
    a1, b1 = _slab(oy, dy, cy - hy, cy + hy)
    a2, b2 = _slab(oz, dz, cz - hz, cz + hz)
    tmin = max(a0, max(a1, a2))
    tmax = min(b0, min(b1, b2))
    if tmax < tmin or tmax <= 0.0:
        return -1.0
    if tmin > 0.0:
        return tmin
    return tmax


@jit
def _ray_room(ox, oy, oz, dx, dy, dz, room):
    t = _BIG
    for axis in range(3):
        if axis == 0:
            o, d = ox, dx
        elif axis == 1:
            o, d = oy, dy
        else:
            o, d = oz, dz
        lo = room[2 * axis]
        hi = room[2 * axis + 1]
        if d > 1e-15:
            c = (hi - o) / d
        elif d < -1e-15:
            c = (lo - o) / d
        else:
            continue
        if c < t:
            t = c
    if t <= 0.0 or t >= _BIG:
        return -1.0
    return t


@jit
def render_depth_kernel(origin, R, focal, room, table, obj, near, far, out):
    rows, cols = out.shape
    cyaw = math.cos(obj[6])
    syaw = math.sin(obj[6])
    for r in range(rows):
        zc = -(r + 0.5 - rows / 2) / focal
        for c in range(cols):
            yc = -(c + 0.5 - cols / 2) / focal
            dx = R[0, 0] + R[0, 1] * yc + R[0, 2] * zc
            dy = R[1, 0] + R[1, 1] * yc + R[1, 2] * zc
            dz = R[2, 0] + R[2, 1] * yc + R[2, 2] * zc
            best = _ray_room(origin[0], origin[1], origin[2], dx, dy, dz, room)
            if best < 0.0:
                best = _BIG
            t = _ray_box(origin[0], origin[1], origin[2], dx, dy, dz,
                         table[0], table[1], table[2], table[3], table[4], table[5])
            if t > 0.0 and t < best:
                best = t
            if obj[3] > 0.0:
                # object frame: rotate ray by -yaw about the box centre
                px = origin[0] - obj[0]
                py = origin[1] - obj[1]
                lx = cyaw * px + syaw * py
                ly = -syaw * px + cyaw * py
                ldx = cyaw * dx + syaw * dy
                ldy = -syaw * dx + cyaw * dy
                t = _ray_box(lx, ly, origin[2] - obj[2], ldx, ldy, dz, 0.0, 0.0, 0.0, obj[3], obj[4], obj[5])
                if t > 0.0 and t < best:
                    best = t
            if best >= _BIG:
                out[r, c] = far
            else:
                out[r, c] = min(max(best, near), far)


# --- vectorized numpy caster ------------------------------------------------


def _camera_rays(camera, R):
    f = camera.focal
    rows = -(np.arange(camera.height) + 0.5 - camera.height / 2) / f
    cols = -(np.arange(camera.width) + 0.5 - camera.width / 2) / f
    zc, yc = np.meshgrid(rows, cols, indexing="ij")
    local = np.stack([np.ones_like(yc), yc, zc], axis=-1)
    return local @ R.T


def _ray_box_np(o, d, lo, hi):
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - o) / d
        t2 = (hi - o) / d
    parallel = np.abs(d) < 1e-15
    outside = (o < lo) | (o > hi)
    near = np.where(parallel, np.where(outside, 1.0, -_BIG), np.minimum(t1, t2))
    far = np.where(parallel, np.where(outside, -1.0, _BIG), np.maximum(t1, t2))
    tmin = near.max(axis=-1)
    tmax = far.min(axis=-1)
    hit = (tmax >= tmin) & (tmax > 0.0)
    t = np.where(tmin > 0.0, tmin, tmax)
    return np.where(hit, t, -1.0)


def render_depth_numpy(origin, R, camera, boxes):
    d = _camera_rays(camera, R)
    o = np.broadcast_to(np.asarray(origin, dtype=float), d.shape)
    room = boxes.room
    with np.errstate(divide="ignore", invalid="ignore"):
        exit_t = np.where(d > 1e-15, (room[1::2] - o) / d, np.where(d < -1e-15, (room[0::2] - o) / d, _BIG))
    best = exit_t.min(axis=-1)
    best = np.where(best > 0.0, best, _BIG)

    tc, th = boxes.table[:3], boxes.table[3:]
    t = _ray_box_np(o, d, tc - th, tc + th)
    best = np.where((t > 0.0) & (t < best), t, best)

    ob = boxes.obj
    if ob[3] > 0.0:
        c, s = math.cos(ob[6]), math.sin(ob[6])
        rot = np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
        lo_ = (o - ob[:3]) @ rot.T
        ld = d @ rot.T
        t = _ray_box_np(lo_, ld, -ob[3:6], ob[3:6])
        best = np.where((t > 0.0) & (t < best), t, best)
    return np.where(best >= _BIG, camera.far, np.clip(best, camera.near, camera.far))


def render_depth(origin, R, camera, boxes, backend=None):
    """Depth image (height x width, float64) from a camera at ``origin`` with camera-to-world ``R``."""
    backend = backend or ("numba" if HAS_NUMBA else "numpy")
    if backend == "numpy":
        return render_depth_numpy(origin, R, camera, boxes)
    out = np.empty((camera.height, camera.width))
    render_depth_kernel(np.asarray(origin, dtype=float), np.ascontiguousarray(R, dtype=float), camera.focal,
                        boxes.room, boxes.table, boxes.obj, camera.near, camera.far, out)
    return out


# --- serialization ----------------------------------------------------------

_HEADER = "DEPTH {width} {height} {near!r} {far!r}\n"


def depth_to_bytes(depth, near, far):
    """A one-line text header then little-endian float32 pixels, row-major from the top-left."""
    depth = np.asarray(depth)
    h, w = depth.shape
    head = _HEADER.format(width=w, height=h, near=float(near), far=float(far)).encode("ascii")
    return head + depth.astype("<f4").tobytes(order="C")


def depth_from_bytes(blob):
    nl = blob.index(b"\n")
    tag, w, h, near, far = blob[:nl].decode("ascii").split()
    if tag != "DEPTH":
        raise ValueError("not a depth frame")
    w, h = int(w), int(h)
    pixels = np.frombuffer(blob[nl + 1 :], dtype="<f4")
    if pixels.size != w * h:
        raise ValueError(f"expected {w * h} pixels, got {pixels.size}")
    return pixels.reshape(h, w).astype(np.float64), float(near), float(far)


def write_depth(path, depth, near, far):
    with open(path, "wb") as fh:
        fh.write(depth_to_bytes(depth, near, far))


def read_depth(path):
    with open(path, "rb") as fh:
        return depth_from_bytes(fh.read())

