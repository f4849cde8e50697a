"""Acceptance criteria, one check each.

Every check prints a single ``PASS``/``FAIL`` line with the measured value and
the tolerance it was held to.  Run under pytest or directly::

    python tests/test_acceptance.py
"""

import math
import sys
import time
from dataclasses import replace

import numpy as np
import pytest

from aerialpush.action import ActionBounds, map_action
from aerialpush.agents import HOVER, MPPIPlanner, ScriptedPolicy, mppi_weights
from aerialpush.batch import BatchConfig, BatchEnv
from aerialpush.dynamics import (
    S_VPOS,
    ContactReport,
    ControlInput,
    EnvState,
    ObjectState,
    VehicleState,
    env_step,
    object_step,
)
from aerialpush.episode import RANDOM, Episode, EpisodeConfig, ResetReason
from aerialpush.harness import EvalConfig, export_csv, run_eval
from aerialpush.observation import Observation
from aerialpush.protocol import ProtocolClient, Session
from aerialpush.render import CameraModel, SceneBoxes, render_depth
from aerialpush.reward import DistanceSet, compute_distances, f_impulse, f_neg, f_pos, step_reward
from aerialpush.scene import GoalSpec, SceneParams, VehicleGeometry

FRICTIONS = (0.2, 0.3, 0.4, 0.5, 0.6)
GEOM = VehicleGeometry()


def _line(name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"


# --- checks: each returns (ok, detail) ----------------------------------------


def check_reward_algebra():
    t0 = time.perf_counter()
    errs = [
        abs(f_pos(0, 2) - 2),
        abs(f_neg(0.125, 2, 0.125) + 1),
        abs(f_neg(1, 2, 0.125) + 2),
        abs(step_reward(DistanceSet(0.125, 0.0, 0.5, 0.0, 0.0)).total + 3),
    ]
    strict = f_impulse(0.025, 1500, 0.025) == 0 and f_impulse(np.nextafter(0.025, 0), 1500, 0.025) == 1500
    dt = time.perf_counter() - t0
    ok = max(errs) <= 1e-12 and strict and dt < 1.0
    return ok, f"max error {max(errs):.1e} (tol 1e-12), impulse strict at tau: {strict}, {dt:.3f} s (< 1 s)"


def check_telescoping():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    v = VehicleState()
    worst = 0.0
    for _ in range(100):
        goal = GoalSpec(rng.uniform(-0.3, 0.3, 3))
        p = rng.uniform(-0.3, 0.3, 3)
        d0 = prev = math.hypot(*(p - goal.position)[:2])
        total = 0.0
        for _ in range(200):
            p = p + rng.normal(0, 0.01, 3)
            d = compute_distances(v, GEOM, ObjectState(position=p), goal, prev)
            total += step_reward(d).progress_term
            prev = d.d_og_xy
        worst = max(worst, abs(total - 1000 * (d0 - prev)))
    dt = time.perf_counter() - t0
    return worst <= 1e-9 and dt < 5.0, f"worst |sum - 1000 (d0 - d1)| {worst:.1e} (tol 1e-9), {dt:.2f} s (< 5 s)"


def check_action_map():
    def ctrl(a):
        u = map_action(a)
        return np.array([*u.velocity, u.yaw_rate])

    examples = [
        ([-1, 0.7, 0, 0], [0, 0, 0, 0]),
        ([1, 0, -1, 1], [1, 0, -0.5, math.pi / 4]),
        ([1, 0.5, 0, 0], [0, 1, 0, 0]),
    ]
    ex_err = max(np.max(np.abs(ctrl(a) - np.array(want))) for a, want in examples)
    b = ActionBounds()
    rng = np.random.default_rng(7)
    prop_err = 0.0
    for a in rng.uniform(-1, 1, (10_000, 4)):
        u = map_action(a, b)
        prop_err = max(prop_err, abs(math.hypot(*u.velocity[:2]) - b.s_xy_max * (a[0] + 1) / 2))
    ok = ex_err <= 1e-12 and prop_err <= 1e-12
    return ok, f"examples {ex_err:.1e}, planar speed identity over 10000 actions {prop_err:.1e} (tol 1e-12)"


def _slide(mu, v0=0.5, dt=0.01):
    scene = SceneParams(friction_mu=mu, table_top_x=2.0, table_top_y=2.0)
    obj = ObjectState(position=np.array([-0.5, 0.0, scene.object_rest_z]), velocity=np.array([v0, 0, 0]))
    for _ in range(5000):
        obj = object_step(obj, ContactReport(), scene, dt)
        if not obj.velocity.any():
            break
    return obj.position[0] + 0.5


def check_coulomb():
    rel = {mu: abs(_slide(mu) / (0.5**2 / (2 * mu * 9.81)) - 1) for mu in (0.2, 0.4, 0.6)}
    scene = SceneParams()
    rest = ObjectState(position=np.array([0.0, 0.0, scene.object_rest_z]))
    threshold = scene.friction_mu * scene.object_mass * scene.gravity
    held = True
    for frac in (0.1, 0.5, 0.999):
        push = ContactReport(arm_object=(np.array([-0.05, 0.0, scene.object_rest_z]), np.array([1.0, 0, 0]),
                                         frac * threshold / 2000.0))
        nxt = object_step(rest, push, scene, 0.1)
        held &= bool(np.array_equal(nxt.position, rest.position) and not nxt.velocity.any())
    worst = max(rel.values())
    detail = ", ".join(f"mu={mu}: {100 * r:.3f}%" for mu, r in rel.items())
    return worst <= 0.05 and held, f"stopping distance {detail} (tol 5%), static friction holds: {held}"


def _push_displacement(mu, steps=15, speed=0.3):
    scene = SceneParams(friction_mu=mu)
    obj = ObjectState(position=np.array([-0.25, 0.0, scene.object_rest_z]))
    ox, oy, oz = GEOM.arm_offset_body
    v = VehicleState(position=np.array([-0.55 - ox, -oy, scene.object_rest_z - oz]))
    env = EnvState.build(v, obj, scene, GEOM)
    start = env.object.position.copy()
    for u in [ControlInput(np.array([speed, 0.0, 0.0]))] * steps + [ControlInput()] * 20:
        env, _ = env_step(env, u)
    assert env.object.on_table  # sliding only, never a fall off the edge
    return float(np.linalg.norm(env.object.position[:2] - start[:2]))


def check_friction_monotonicity():
    t0 = time.perf_counter()
    mus = (0.05, 0.2, 0.4, 0.6, 0.8)
    disp = [_push_displacement(mu) for mu in mus]
    dt = time.perf_counter() - t0
    ok = all(a > b for a, b in zip(disp, disp[1:])) and dt < 30
    shown = ", ".join(f"{mu}: {d:.6f} m" for mu, d in zip(mus, disp))
    return ok, f"displacement {shown} (strictly decreasing), {dt:.2f} s (< 30 s)"


def _pinned_steps(training, max_steps=1000):
    ep = Episode(cfg=EpisodeConfig(training_mode=training, max_steps=max_steps))
    ep.reset()
    ep.state[S_VPOS : S_VPOS + 3] = [2.3, 0.0, 1.5]  # pressed against the +x wall
    done, steps = False, 0
    while not done:
        _, _, done, _ = ep.step(np.array([1.0, 0, 0, 0]))
        steps += 1
    return steps, ep.stats.reset_reason


def check_episode_protocol():
    train = _pinned_steps(True)
    evaluation = _pinned_steps(False)
    hover = Episode()
    hover.reset()
    n, done = 0, False
    while not done:
        _, _, done, info = hover.step(HOVER)
        n += 1
    esc_in, esc_out = Episode(), Episode()
    esc_in.reset(), esc_out.reset()
    esc_in.state[S_VPOS : S_VPOS + 3] = [0.0, 0.0, 4.9]
    esc_out.state[S_VPOS : S_VPOS + 3] = [2.3, 2.3, 4.8]  # upper room corner, 5.7 m from the origin
    _, _, d_in, _ = esc_in.step(HOVER)
    _, _, d_out, _ = esc_out.step(HOVER)
    ok = (
        train == (20, ResetReason.VEHICLE_COLLISION)
        and evaluation == (1000, ResetReason.TIME_LIMIT)
        and (n, info["reset_reason"]) == (1000, ResetReason.TIME_LIMIT)
        and not d_in
        and d_out
        and esc_out.stats.reset_reason == ResetReason.ESCAPED_RADIUS
    )
    return ok, (f"training collision reset after {train[0]} steps, evaluation ran {evaluation[0]} steps "
                f"({evaluation[1].value}), time limit at step {n}, escape at 5 m: {d_out and not d_in}")


def check_scripted_task():
    rows = run_eval(EvalConfig(friction_values=FRICTIONS, episodes_per_value=20, agent="scripted"))
    worst = {r.friction: min(s.goals_completed for s in r.stats) for r in rows}
    ok = all(v >= 1 for v in worst.values())
    shown = ", ".join(f"mu={mu}: min {g} mean {r.mean_goals:.2f}" for (mu, g), r in zip(worst.items(), rows))
    return ok, f"goals per 1000-step episode over 20 seeds, {shown} (need >= 1 every episode)"


def _mppi_episode(seed):
    ep = Episode(scene=SceneParams(friction_mu=0.4), cfg=EpisodeConfig(training_mode=False))
    obs = ep.reset(seed)
    start = ep.prev_d
    pl = MPPIPlanner(seed=seed)
    done = False
    while not done:
        obs, _, done, info = ep.step(pl(obs, ep))
        if info["completed"]:
            return True, start
    return False, start


def check_mppi():
    results = [_mppi_episode(seed) for seed in range(10)]
    wins = sum(ok for ok, _ in results)
    start_ok = all(abs(d - 0.5) < 1e-9 for _, d in results)
    rng = np.random.default_rng(3)
    norm_err, argmax_ok = 0.0, True
    for _ in range(200):
        r = rng.normal(0, 50, rng.integers(1, 300))
        norm_err = max(norm_err, abs(mppi_weights(r, rng.uniform(0.01, 10)).sum() - 1))
        w = mppi_weights(r, 1e-12)
        argmax_ok &= bool(w[np.argmax(r)] == 1.0)
    ok = wins >= 7 and start_ok and norm_err <= 1e-12 and argmax_ok
    return ok, (f"{wins}/10 seeds complete within 1000 steps (need >= 7), goal 0.5 m away: {start_ok}, "
                f"weight sum error {norm_err:.1e}, lambda->0 picks argmax: {argmax_ok}")


def _batch_trace(workers):
    cfg = BatchConfig(n_envs=16, base_seed=5, workers=workers, episode=EpisodeConfig(goal_mode=RANDOM, max_steps=60))
    rng = np.random.default_rng(5)
    with BatchEnv(cfg) as env:
        env.reset()
        trace = [np.array([[*t.observation.to_vector(), t.reward.total] for t in env.step(rng.uniform(-1.2, 1.2, (16, 4)))])
                 for _ in range(150)]
    return np.array(trace)


def check_determinism():
    cfg = EvalConfig()
    a = export_csv(run_eval(cfg))
    b = export_csv(run_eval(replace(cfg, workers=2)))
    base = _batch_trace(1)
    same_batch = all(np.array_equal(base, _batch_trace(w)) for w in (2, 4))
    ok = a == b and same_batch
    return ok, (f"two full eval runs ({len(cfg.friction_values)} x {cfg.episodes_per_value} episodes) "
                f"byte-identical: {a == b}, batch steps identical across 1/2/4 workers: {same_batch}")


def check_depth_renderer():
    cam = CameraModel()
    scene = SceneParams()
    boxes = SceneBoxes.from_scene(scene, (0.0, 0.0, 0.55), 0.0, False)
    wall = render_depth(np.array([0.5, 0.0, 2.5]), np.eye(3), cam, boxes)
    wall_err = float(np.max(np.abs(wall - 2.0)))
    # a 0.2 m cube 1.5 m ahead: count pixels whose hit/miss disagrees with the projected silhouette
    centre, h = np.array([0.0, 0.0, 1.5]), 0.1
    origin = centre - [1.5, 0, 0]
    cube = SceneBoxes(np.array([-2.5, 2.5, -2.5, 2.5, 0.0, 5.0]), np.array([0, 0, 0.25, 0.4, 0.4, 0.25]),
                      np.array([*centre, h, h, h, 0.0]))
    depth = render_depth(origin, np.eye(3), cam, cube)
    hit = np.abs(depth - (1.5 - h)) < 1e-9
    corners = [cam.project(np.array([1.5 - h, sy * h, sz * h])) for sy in (-1, 1) for sz in (-1, 1)]
    cols, rows = zip(*corners)
    cc, rr = np.meshgrid(np.arange(cam.width) + 0.5, np.arange(cam.height) + 0.5)
    inner = (cc > min(cols) + 1) & (cc < max(cols) - 1) & (rr > min(rows) + 1) & (rr < max(rows) - 1)
    outer = (cc > min(cols) - 1) & (cc < max(cols) + 1) & (rr > min(rows) - 1) & (rr < max(rows) + 1)
    silhouette_ok = bool(inner.any() and hit[inner].all() and not (hit & ~outer).any())
    ok = wall_err <= 1e-6 and silhouette_ok
    return ok, f"wall distance error {wall_err:.1e} (tol 1e-6), box silhouette within one pixel: {silhouette_ok}"


class _Pipe:
    """Line-buffered loopback between a client and an in-memory session."""

    def __init__(self, session):
        self.session, self.pending = session, []

    def write(self, text):
        self.pending.extend(self.session.handle_line(ln) + "\n" for ln in text.splitlines() if ln.strip())

    def flush(self):
        pass

    def readline(self):
        return self.pending.pop(0)


def check_protocol_equivalence():
    n, seed, steps = 4, 11, 60
    policies = [ScriptedPolicy() for _ in range(n)]
    local = []
    with BatchEnv(BatchConfig(n_envs=n, base_seed=seed)) as env:
        obs = env.reset()
        for _ in range(steps):
            out = env.step([p(o) for p, o in zip(policies, obs)])
            obs = [t.observation for t in out]
            local.append([[*o.to_vector(), t.reward.total] for o, t in zip(obs, out)])
    pipe = _Pipe(Session(BatchConfig(n_envs=n)))
    client = ProtocolClient(pipe, pipe)
    policies = [ScriptedPolicy() for _ in range(n)]
    obs = [np.array(e["obs"]) for e in client.reset(seed)["envs"]]
    remote = []
    for _ in range(steps):
        trans = client.step([p(Observation.from_vector(o)) for p, o in zip(policies, obs)])["transitions"]
        obs = [np.array(t["obs"]) for t in trans]
        remote.append([[*t["obs"], t["reward"]] for t in trans])
    same = np.array_equal(np.array(local), np.array(remote))
    return same, f"{n} envs x {steps} scripted steps, wire vs in-process scalar trajectories identical: {same}"


CHECKS = {
    "reward algebra": check_reward_algebra,
    "telescoping": check_telescoping,
    "action map": check_action_map,
    "Coulomb oracle": check_coulomb,
    "friction monotonicity": check_friction_monotonicity,
    "episode protocol": check_episode_protocol,
    "scripted task": check_scripted_task,
    "MPPI sanity": check_mppi,
    "determinism": check_determinism,
    "depth renderer": check_depth_renderer,
    "protocol equivalence": check_protocol_equivalence,
}


@pytest.mark.parametrize("name", list(CHECKS))
def test_acceptance(name, capsys):
    ok, detail = CHECKS[name]()
    line = _line(name, ok, detail)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for name, fn in CHECKS.items():
        ok, detail = fn()
        failed += not ok
        print(_line(name, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
