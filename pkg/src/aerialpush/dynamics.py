"""Vehicle kinematics, contact queries and Coulomb-friction pushing.

The hot path works on flat ``float64`` arrays so the same kernels serve a
single environment, a batch of environments and the planner's rollouts:

* environment state: ``NS`` floats, indexed by the ``S_*`` constants;
* parameters: ``NP`` floats, indexed by ``P_*`` (built by :func:`pack_params`);
* contact report: ``NC`` floats, indexed by ``C_*``.

The dataclasses and functions at the bottom of the module are the
object-level interface on top of those kernels.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._accel import jit
from .geometry import euler_to_matrix
from .scene import SceneParams, VehicleGeometry

# --- state layout -----------------------------------------------------------
S_VPOS = 0  # vehicle position (3), world
S_VVEL = 3  # vehicle velocity (3), world
S_YAW = 6
S_YAWRATE = 7
S_ROLL = 8
S_PITCH = 9
S_OMEGA = 10  # body angular velocity (3)
S_OPOS = 13  # object centre (3)
S_OVEL = 16  # object velocity (3), world
S_OYAW = 19
S_OYAWRATE = 20
S_ONTABLE = 21
NS = 22

# --- parameter layout -------------------------------------------------------
P_ROOM_HALF = 0
P_ROOM_HEIGHT = 1
P_TABLE_X = 2
P_TABLE_Y = 3
P_TABLE_HX = 4
P_TABLE_HY = 5
P_TABLE_Z = 6
P_OBJ_HALF = 7
P_MASS = 8
P_MU = 9
P_GRAVITY = 10
P_BODY_R = 11
P_ARM_X = 12
P_ARM_Y = 13
P_ARM_Z = 14
P_ARM_HALF = 15
P_ARM_R = 16
P_TAU_V = 17
P_TILT_CAP = 18
P_KP = 19
P_EPS_V = 20
P_SUBSTEPS = 21
P_EPS_W = 22
NP = 23

# --- contact report layout --------------------------------------------------
C_HIT = 0  # 1.0 when the arm or cage presses on the object
C_POINT = 1  # contact point on the object surface (3)
C_NORMAL = 4  # unit push direction on the object (3)
C_PEN = 7
C_SOURCE = 8  # 0 arm, 1 cage
C_VCOLL = 9  # vehicle touching table/room
C_ONTABLE = 10
NC = 11

# Mean distance of a uniform square patch from its centre, per unit edge.
SQUARE_MEAN_RADIUS = (math.sqrt(2.0) + math.log(1.0 + math.sqrt(2.0))) / 6.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_SEARCH_ITERS = 40


@dataclass(frozen=True)
class DynamicsParams:
    velocity_lag: float = 0.3
    tilt_cap: float = 0.3
    contact_stiffness: float = 2000.0
    stiction_speed: float = 1e-3
    stiction_yaw_rate: float = 1e-3
    substeps: int = 4


def pack_params(scene=None, geom=None, dyn=None):
    scene = scene or SceneParams()
    geom = geom or VehicleGeometry()
    dyn = dyn or DynamicsParams()
    p = np.zeros(NP)
    p[P_ROOM_HALF] = scene.room_half_extent
    p[P_ROOM_HEIGHT] = scene.room_height
    p[P_TABLE_X] = scene.table_x
    p[P_TABLE_Y] = scene.table_y
    p[P_TABLE_HX] = scene.table_top_x / 2
    p[P_TABLE_HY] = scene.table_top_y / 2
    p[P_TABLE_Z] = scene.table_height
    p[P_OBJ_HALF] = scene.object_edge / 2
    p[P_MASS] = scene.object_mass
    p[P_MU] = scene.friction_mu
    p[P_GRAVITY] = scene.gravity
    p[P_BODY_R] = geom.body_radius
    p[P_ARM_X : P_ARM_Z + 1] = geom.arm_offset_body
    p[P_ARM_HALF] = geom.arm_half_length
    p[P_ARM_R] = geom.arm_radius
    p[P_TAU_V] = dyn.velocity_lag
    p[P_TILT_CAP] = dyn.tilt_cap
    p[P_KP] = dyn.contact_stiffness
    p[P_EPS_V] = dyn.stiction_speed
    p[P_SUBSTEPS] = max(1, int(dyn.substeps))
    p[P_EPS_W] = dyn.stiction_yaw_rate
    return p


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@jit
def wrap_angle(a):
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@jit
def box_sdf(px, py, pz, cx, cy, cz, hx, hy, hz, yaw, grad):
    """Signed distance from a point to a yawed box; outward gradient written to ``grad``."""
    c = math.cos(yaw)
    s = math.sin(yaw)
    dx0 = px - cx
    dy0 = py - cy
    qx = c * dx0 + s * dy0
    qy = -s * dx0 + c * dy0
    qz = pz - cz
    sx = 1.0 if qx >= 0.0 else -1.0
    sy = 1.0 if qy >= 0.0 else -1.0
    sz = 1.0 if qz >= 0.0 else -1.0
    ex = abs(qx) - hx
    ey = abs(qy) - hy
    ez = abs(qz) - hz
    ox = ex if ex > 0.0 else 0.0
    oy = ey if ey > 0.0 else 0.0
    oz = ez if ez > 0.0 else 0.0
    outside = math.sqrt(ox * ox + oy * oy + oz * oz)
    if outside > 0.0:
        gx = sx * ox / outside
        gy = sy * oy / outside
        gz = sz * oz / outside
        d = outside
    else:
        if ex >= ey and ex >= ez:
            gx, gy, gz, d = sx, 0.0, 0.0, ex
        elif ey >= ez:
            gx, gy, gz, d = 0.0, sy, 0.0, ey
        else:
            gx, gy, gz, d = 0.0, 0.0, sz, ez
    grad[0] = c * gx - s * gy
    grad[1] = s * gx + c * gy
    grad[2] = gz
    return d


@jit
def capsule_box_contact(a, b, radius, cx, cy, cz, hx, hy, hz, yaw, out):
    """Deepest penetration of capsule ``a-b`` into a yawed box.

    Signed distance to a convex box is convex along the capsule axis, so a
    golden-section search over the axis parameter finds its minimum.  On
    contact ``out`` holds (penetration, point(3), normal(3)) with the normal
    pointing from the capsule into the box, and the function returns True.
    """
    mx = 0.5 * (a[0] + b[0])
    my = 0.5 * (a[1] + b[1])
    mz = 0.5 * (a[2] + b[2])
    ux = b[0] - a[0]
    uy = b[1] - a[1]
    uz = b[2] - a[2]
    half = 0.5 * math.sqrt(ux * ux + uy * uy + uz * uz)
    reach = half + radius + math.sqrt(hx * hx + hy * hy + hz * hz)
    dcx = mx - cx
    dcy = my - cy
    dcz = mz - cz
    if dcx * dcx + dcy * dcy + dcz * dcz > reach * reach:
        return False
    grad = np.empty(3)
    if half > 0.0:
        lo = 0.0
        hi = 1.0
        t1 = hi - _GOLDEN * (hi - lo)
        t2 = lo + _GOLDEN * (hi - lo)
        f1 = box_sdf(a[0] + t1 * ux, a[1] + t1 * uy, a[2] + t1 * uz, cx, cy, cz, hx, hy, hz, yaw, grad)
        f2 = box_sdf(a[0] + t2 * ux, a[1] + t2 * uy, a[2] + t2 * uz, cx, cy, cz, hx, hy, hz, yaw, grad)
        for _ in range(_SEARCH_ITERS):
            if f1 <= f2:
                hi = t2
                t2 = t1
                f2 = f1
                t1 = hi - _GOLDEN * (hi - lo)
                f1 = box_sdf(a[0] + t1 * ux, a[1] + t1 * uy, a[2] + t1 * uz, cx, cy, cz, hx, hy, hz, yaw, grad)
            else:
                lo = t1
                t1 = t2
                f1 = f2
                t2 = lo + _GOLDEN * (hi - lo)
                f2 = box_sdf(a[0] + t2 * ux, a[1] + t2 * uy, a[2] + t2 * uz, cx, cy, cz, hx, hy, hz, yaw, grad)
        t = 0.5 * (lo + hi)
        # the endpoints are candidates too: the search interval never reaches them exactly
        best_t = t
        best = box_sdf(a[0] + t * ux, a[1] + t * uy, a[2] + t * uz, cx, cy, cz, hx, hy, hz, yaw, grad)
        for te in (0.0, 1.0):
            fe = box_sdf(a[0] + te * ux, a[1] + te * uy, a[2] + te * uz, cx, cy, cz, hx, hy, hz, yaw, grad)
            if fe < best:
                best = fe
                best_t = te
        t = best_t
    else:
        t = 0.0
    px = a[0] + t * ux
    py = a[1] + t * uy
    pz = a[2] + t * uz
    d = box_sdf(px, py, pz, cx, cy, cz, hx, hy, hz, yaw, grad)
    pen = radius - d
    if pen <= 0.0:
        return False
    out[0] = pen
    out[1] = px - grad[0] * d
    out[2] = py - grad[1] * d
    out[3] = pz - grad[2] * d
    out[4] = -grad[0]
    out[5] = -grad[1]
    out[6] = -grad[2]
    return True


@jit
def vehicle_rotation(state):
    return euler_to_matrix(state[S_ROLL], state[S_PITCH], state[S_YAW])


@jit
def arm_segment(pos, R, params, a, b, center):
    """Arm centre and capsule endpoints for a vehicle at ``pos`` with attitude ``R``."""
    ox = params[P_ARM_X]
    oy = params[P_ARM_Y]
    oz = params[P_ARM_Z]
    hl = params[P_ARM_HALF]
    for i in range(3):
        center[i] = pos[i] + R[i, 0] * ox + R[i, 1] * oy + R[i, 2] * oz
        a[i] = center[i] - hl * R[i, 0]
        b[i] = center[i] + hl * R[i, 0]


@jit
def vehicle_step_kernel(state, ctrl, params, dt):
    """Advance the velocity-tracking vehicle model in place.

    ``ctrl`` is (vx, vy, vz, yaw_rate) in the body frame.  Velocity and yaw
    rate follow a first-order lag; roll and pitch are set from the commanded
    horizontal acceleration.
    """
    tau = params[P_TAU_V]
    g = params[P_GRAVITY]
    alpha = dt / tau
    if alpha > 1.0:
        alpha = 1.0
    yaw = state[S_YAW]
    cy = math.cos(yaw)
    sy = math.sin(yaw)
    tx = cy * ctrl[0] - sy * ctrl[1]
    ty = sy * ctrl[0] + cy * ctrl[1]
    tz = ctrl[2]
    ax = (tx - state[S_VVEL]) / tau
    ay = (ty - state[S_VVEL + 1]) / tau
    state[S_VVEL] += alpha * (tx - state[S_VVEL])
    state[S_VVEL + 1] += alpha * (ty - state[S_VVEL + 1])
    state[S_VVEL + 2] += alpha * (tz - state[S_VVEL + 2])

    a_fwd = cy * ax + sy * ay
    a_lat = -sy * ax + cy * ay
    a_mag = math.sqrt(a_fwd * a_fwd + a_lat * a_lat)
    roll = 0.0
    pitch = 0.0
    if a_mag > 0.0:
        tilt = math.atan(a_mag / g)
        if tilt > params[P_TILT_CAP]:
            tilt = params[P_TILT_CAP]
        st = math.sin(tilt)
        nx = st * a_fwd / a_mag
        ny = st * a_lat / a_mag
        nz = math.cos(tilt)
        roll = math.asin(-ny)
        pitch = math.atan2(nx, nz)

    rate = state[S_YAWRATE] + alpha * (ctrl[3] - state[S_YAWRATE])
    state[S_OMEGA] = (roll - state[S_ROLL]) / dt
    state[S_OMEGA + 1] = (pitch - state[S_PITCH]) / dt
    state[S_OMEGA + 2] = rate
    state[S_YAWRATE] = rate
    state[S_YAW] = wrap_angle(yaw + dt * rate)
    state[S_ROLL] = roll
    state[S_PITCH] = pitch
    for i in range(3):
        state[S_VPOS + i] += dt * state[S_VVEL + i]


@jit
def _push_out(pos, vel, nx, ny, nz, depth):
    # move the vehicle out of an obstacle along the outward normal and drop inbound velocity
    pos[0] += nx * depth
    pos[1] += ny * depth
    pos[2] += nz * depth
    vn = vel[0] * nx + vel[1] * ny + vel[2] * nz
    if vn < 0.0:
        vel[0] -= vn * nx
        vel[1] -= vn * ny
        vel[2] -= vn * nz


@jit
def vehicle_environment_contact(state, params, resolve):
    """Report (and optionally resolve) cage/arm penetration of the table and room."""
    pos = state[S_VPOS : S_VPOS + 3]
    vel = state[S_VVEL : S_VVEL + 3]
    R = vehicle_rotation(state)
    a = np.empty(3)
    b = np.empty(3)
    center = np.empty(3)
    out = np.empty(7)
    hit = False
    thz = 0.5 * params[P_TABLE_Z]
    for _ in range(2):
        arm_segment(pos, R, params, a, b, center)
        deepest = 0.0
        nx = 0.0
        ny = 0.0
        nz = 0.0
        # table: cage sphere then arm capsule
        for part in range(2):
            if part == 0:
                ok = capsule_box_contact(pos, pos, params[P_BODY_R], params[P_TABLE_X], params[P_TABLE_Y], thz,
                                         params[P_TABLE_HX], params[P_TABLE_HY], thz, 0.0, out)
            else:
                ok = capsule_box_contact(a, b, params[P_ARM_R], params[P_TABLE_X], params[P_TABLE_Y], thz,
                                         params[P_TABLE_HX], params[P_TABLE_HY], thz, 0.0, out)
            if ok and out[0] > deepest:
                deepest = out[0]
                nx = -out[4]
                ny = -out[5]
                nz = -out[6]
        # room: inside faces of the box [-h, h]^2 x [0, H]
        h = params[P_ROOM_HALF]
        top = params[P_ROOM_HEIGHT]
        for part in range(3):
            if part == 0:
                px, py, pz, r = pos[0], pos[1], pos[2], params[P_BODY_R]
            elif part == 1:
                px, py, pz, r = a[0], a[1], a[2], params[P_ARM_R]
            else:
                px, py, pz, r = b[0], b[1], b[2], params[P_ARM_R]
            d = px + r - h
            if d > deepest:
                deepest, nx, ny, nz = d, -1.0, 0.0, 0.0
            d = -h - (px - r)
            if d > deepest:
                deepest, nx, ny, nz = d, 1.0, 0.0, 0.0
            d = py + r - h
            if d > deepest:
                deepest, nx, ny, nz = d, 0.0, -1.0, 0.0
            d = -h - (py - r)
            if d > deepest:
                deepest, nx, ny, nz = d, 0.0, 1.0, 0.0
            d = pz + r - top
            if d > deepest:
                deepest, nx, ny, nz = d, 0.0, 0.0, -1.0
            d = r - pz
            if d > deepest:
                deepest, nx, ny, nz = d, 0.0, 0.0, 1.0
        if deepest <= 0.0:
            break
        hit = True
        if not resolve:
            break
        _push_out(pos, vel, nx, ny, nz, deepest)
    return hit


@jit
def object_contact(vpos, R, state, params, out):
    """Deepest arm-or-cage contact with the object; fills ``out[C_HIT:C_SOURCE+1]``."""
    a = np.empty(3)
    b = np.empty(3)
    center = np.empty(3)
    arm_segment(vpos, R, params, a, b, center)
    hh = params[P_OBJ_HALF]
    cx = state[S_OPOS]
    cy = state[S_OPOS + 1]
    cz = state[S_OPOS + 2]
    yaw = state[S_OYAW]
    buf = np.empty(7)
    out[C_HIT] = 0.0
    out[C_PEN] = 0.0
    best = 0.0
    for part in range(2):
        if part == 0:
            ok = capsule_box_contact(a, b, params[P_ARM_R], cx, cy, cz, hh, hh, hh, yaw, buf)
        else:
            ok = capsule_box_contact(vpos, vpos, params[P_BODY_R], cx, cy, cz, hh, hh, hh, yaw, buf)
        if ok and buf[0] > best:
            best = buf[0]
            out[C_HIT] = 1.0
            out[C_PEN] = buf[0]
            for i in range(3):
                out[C_POINT + i] = buf[1 + i]
                out[C_NORMAL + i] = buf[4 + i]
            out[C_SOURCE] = float(part)
    return out[C_HIT] > 0.0


@jit
def object_step_kernel(state, contact, params, h):
    """Advance the object by ``h`` seconds under the given contact, in place.

    The push force ``k * penetration`` acts along the planar part of the
    contact normal and is integrated implicitly (the penetration shrinks as
    the object moves away within the step), which keeps a stiff contact
    stable at coarse steps.  Table friction is Coulomb with stiction below
    ``eps_v``.  Without contact the constant-deceleration motion is integrated
    exactly, including the stopping point.
    """
    m = params[P_MASS]
    g = params[P_GRAVITY]
    half = params[P_OBJ_HALF]
    if state[S_ONTABLE] < 0.5:
        if state[S_OPOS + 2] > half:
            state[S_OVEL + 2] -= g * h
            for i in range(3):
                state[S_OPOS + i] += h * state[S_OVEL + i]
            if state[S_OPOS + 2] <= half:
                state[S_OPOS + 2] = half
                for i in range(3):
                    state[S_OVEL + i] = 0.0
                state[S_OYAWRATE] = 0.0
        return

    k = params[P_KP]
    eps = params[P_EPS_V]
    fric = params[P_MU] * m * g
    vx = state[S_OVEL]
    vy = state[S_OVEL + 1]
    speed = math.sqrt(vx * vx + vy * vy)

    pen = 0.0
    nx = 0.0
    ny = 0.0
    if contact[C_HIT] > 0.0:
        pen = contact[C_PEN]
        nx = contact[C_NORMAL]
        ny = contact[C_NORMAL + 1]
    nn = nx * nx + ny * ny
    touching = pen > 0.0 and nn > 0.0

    static = False
    dx = 0.0
    dy = 0.0
    if speed < eps:
        push = k * pen * math.sqrt(nn) if touching else 0.0
        if push <= fric:
            static = True
        else:
            inv = 1.0 / math.sqrt(nn)
            dx = nx * inv
            dy = ny * inv
    else:
        dx = vx / speed
        dy = vy / speed

    fn = 0.0
    if static:
        nvx = 0.0
        nvy = 0.0
    else:
        if touching:
            nd = nx * dx + ny * dy
            s = (m * (nx * vx + ny * vy) + h * (k * pen * nn - fric * nd)) / (m + h * h * k * nn)
            fn = k * (pen - h * s)
            if fn < 0.0:
                fn = 0.0
        nvx = vx + (h / m) * (fn * nx - fric * dx)
        nvy = vy + (h / m) * (fn * ny - fric * dy)
        if fn == 0.0:
            decel = fric / m
            if speed <= decel * h:
                travel = speed * speed / (2.0 * decel)
                state[S_OPOS] += dx * travel
                state[S_OPOS + 1] += dy * travel
                nvx = 0.0
                nvy = 0.0
            else:
                state[S_OPOS] += 0.5 * h * (vx + nvx)
                state[S_OPOS + 1] += 0.5 * h * (vy + nvy)
        else:
            if speed >= eps and nvx * dx + nvy * dy < 0.0:
                nvx = 0.0
                nvy = 0.0
            state[S_OPOS] += h * nvx
            state[S_OPOS + 1] += h * nvy
    state[S_OVEL] = nvx
    state[S_OVEL + 1] = nvy
    state[S_OVEL + 2] = 0.0

    # yaw: contact torque about the vertical axis against a Coulomb torque bound
    edge = 2.0 * half
    inertia = m * edge * edge / 6.0
    tau_f = fric * SQUARE_MEAN_RADIUS * edge
    torque = 0.0
    if fn > 0.0:
        rx = contact[C_POINT] - state[S_OPOS]
        ry = contact[C_POINT + 1] - state[S_OPOS + 1]
        torque = rx * (fn * ny) - ry * (fn * nx)
    w = state[S_OYAWRATE]
    if abs(w) < params[P_EPS_W]:
        if abs(torque) <= tau_f:
            nw = 0.0
        else:
            nw = (h / inertia) * (torque - math.copysign(tau_f, torque))
    else:
        nw = w + (h / inertia) * (torque - math.copysign(tau_f, w))
        if nw * w < 0.0:
            nw = 0.0
    state[S_OYAWRATE] = nw
    state[S_OYAW] = wrap_angle(state[S_OYAW] + h * nw)

    if (
        abs(state[S_OPOS] - params[P_TABLE_X]) > params[P_TABLE_HX]
        or abs(state[S_OPOS + 1] - params[P_TABLE_Y]) > params[P_TABLE_HY]
    ):
        state[S_ONTABLE] = 0.0


@jit
def env_step_kernel(state, ctrl, params, dt, contact):
    """Vehicle step, environment collision, then object substeps against the swept vehicle."""
    p0 = state[S_VPOS : S_VPOS + 3].copy()
    roll0 = state[S_ROLL]
    pitch0 = state[S_PITCH]
    yaw0 = state[S_YAW]
    vehicle_step_kernel(state, ctrl, params, dt)
    vcoll = vehicle_environment_contact(state, params, True)
    p1 = state[S_VPOS : S_VPOS + 3]
    dyaw = wrap_angle(state[S_YAW] - yaw0)
    n_sub = int(params[P_SUBSTEPS])
    h = dt / n_sub
    pos = np.empty(3)
    for k in range(1, n_sub + 1):
        f = k / n_sub
        for i in range(3):
            pos[i] = p0[i] + f * (p1[i] - p0[i])
        R = euler_to_matrix(
            roll0 + f * (state[S_ROLL] - roll0),
            pitch0 + f * (state[S_PITCH] - pitch0),
            yaw0 + f * dyaw,
        )
        if state[S_ONTABLE] > 0.5:
            object_contact(pos, R, state, params, contact)
        else:
            contact[C_HIT] = 0.0
            contact[C_PEN] = 0.0
        object_step_kernel(state, contact, params, h)
    contact[C_VCOLL] = 1.0 if vcoll else 0.0
    contact[C_ONTABLE] = state[S_ONTABLE]


@jit
def batch_env_step_kernel(states, ctrls, params, dt, contacts):
    for i in range(states.shape[0]):
        env_step_kernel(states[i], ctrls[i], params[i], dt, contacts[i])


# ---------------------------------------------------------------------------
# object-level interface
# ---------------------------------------------------------------------------


def _vec(v):
    return np.array(v, dtype=float).reshape(3)


@dataclass
class VehicleState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))  # world frame
    yaw: float = 0.0
    yaw_rate: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))  # body frame

    @property
    def orientation(self):
        return euler_to_matrix(self.roll, self.pitch, self.yaw)

    @property
    def body_velocity(self):
        return self.orientation.T @ self.velocity

    def arm_center(self, geom):
        return self.position + self.orientation @ np.asarray(geom.arm_offset_body)


@dataclass
class ObjectState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw_rate: float = 0.0
    on_table: bool = True


@dataclass
class ControlInput:
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))  # desired, body frame
    yaw_rate: float = 0.0

    def as_array(self):
        return np.array([*self.velocity, self.yaw_rate], dtype=float)


@dataclass
class ContactReport:
    arm_object: tuple = None  # (point, normal, penetration) or None
    source: str = None  # "arm" or "cage"
    vehicle_env_collision: bool = False
    object_on_table: bool = True


def pack_state(vehicle, obj, out=None):
    s = np.zeros(NS) if out is None else out
    s[S_VPOS : S_VPOS + 3] = vehicle.position
    s[S_VVEL : S_VVEL + 3] = vehicle.velocity
    s[S_YAW] = vehicle.yaw
    s[S_YAWRATE] = vehicle.yaw_rate
    s[S_ROLL] = vehicle.roll
    s[S_PITCH] = vehicle.pitch
    s[S_OMEGA : S_OMEGA + 3] = vehicle.angular_velocity
    s[S_OPOS : S_OPOS + 3] = obj.position
    s[S_OVEL : S_OVEL + 3] = obj.velocity
    s[S_OYAW] = obj.yaw
    s[S_OYAWRATE] = obj.yaw_rate
    s[S_ONTABLE] = 1.0 if obj.on_table else 0.0
    return s


def unpack_vehicle(s):
    return VehicleState(
        position=s[S_VPOS : S_VPOS + 3].copy(),
        velocity=s[S_VVEL : S_VVEL + 3].copy(),
        yaw=float(s[S_YAW]),
        yaw_rate=float(s[S_YAWRATE]),
        roll=float(s[S_ROLL]),
        pitch=float(s[S_PITCH]),
        angular_velocity=s[S_OMEGA : S_OMEGA + 3].copy(),
    )


def unpack_object(s):
    return ObjectState(
        position=s[S_OPOS : S_OPOS + 3].copy(),
        yaw=float(s[S_OYAW]),
        velocity=s[S_OVEL : S_OVEL + 3].copy(),
        yaw_rate=float(s[S_OYAWRATE]),
        on_table=bool(s[S_ONTABLE] > 0.5),
    )


def unpack_contact(c):
    arm = None
    source = None
    if c[C_HIT] > 0.0:
        arm = (c[C_POINT : C_POINT + 3].copy(), c[C_NORMAL : C_NORMAL + 3].copy(), float(c[C_PEN]))
        source = "arm" if c[C_SOURCE] == 0.0 else "cage"
    return ContactReport(arm, source, bool(c[C_VCOLL] > 0.0), bool(c[C_ONTABLE] > 0.5))


def _contact_array(report):
    c = np.zeros(NC)
    if report.arm_object is not None:
        point, normal, pen = report.arm_object
        c[C_HIT] = 1.0
        c[C_POINT : C_POINT + 3] = point
        c[C_NORMAL : C_NORMAL + 3] = normal
        c[C_PEN] = pen
        c[C_SOURCE] = 1.0 if report.source == "cage" else 0.0
    c[C_VCOLL] = float(report.vehicle_env_collision)
    c[C_ONTABLE] = float(report.object_on_table)
    return c


def vehicle_step(state, u, dt, params=None):
    if dt <= 0:
        raise ValueError("dt must be positive")
    params = pack_params() if params is None else params
    s = pack_state(state, ObjectState())
    vehicle_step_kernel(s, u.as_array(), params, float(dt))
    return unpack_vehicle(s)


def contact_query(vehicle, geom, obj, scene, dyn=None):
    """Arm/cage versus object contact plus vehicle versus table/room collision."""
    params = pack_params(scene, geom, dyn)
    s = pack_state(vehicle, obj)
    c = np.zeros(NC)
    if obj.on_table:
        object_contact(s[S_VPOS : S_VPOS + 3].copy(), vehicle.orientation, s, params, c)
    c[C_VCOLL] = 1.0 if vehicle_environment_contact(s, params, False) else 0.0
    c[C_ONTABLE] = 1.0 if obj.on_table else 0.0
    return unpack_contact(c)


def object_step(obj, contact, scene, dt, dyn=None):
    if dt <= 0:
        raise ValueError("dt must be positive")
    params = pack_params(scene, None, dyn)
    s = pack_state(VehicleState(), obj)
    object_step_kernel(s, _contact_array(contact), params, float(dt))
    return unpack_object(s)


@dataclass
class EnvState:
    """Everything that evolves inside one environment, as a flat array plus its parameters."""

    state: np.ndarray
    params: np.ndarray

    @classmethod
    def build(cls, vehicle, obj, scene=None, geom=None, dyn=None):
        return cls(pack_state(vehicle, obj), pack_params(scene, geom, dyn))

    @property
    def vehicle(self):
        return unpack_vehicle(self.state)

    @property
    def object(self):
        return unpack_object(self.state)

    def copy(self):
        return replace(self, state=self.state.copy(), params=self.params.copy())


def env_step(env, u, dt=0.1):
    """Advance ``env`` by one control period; returns the new state and its contact report."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    nxt = env.copy()
    c = np.zeros(NC)
    ctrl = u.as_array() if isinstance(u, ControlInput) else np.asarray(u, dtype=float)
    env_step_kernel(nxt.state, ctrl, nxt.params, float(dt), c)
    return nxt, unpack_contact(c)
