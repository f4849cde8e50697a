"""Throughput measurements for the active kernel backend."""

import time

import numpy as np

from ._accel import BACKEND
from .agents import HOVER
from .batch import BatchConfig, BatchEnv
from .dynamics import NC, batch_env_step_kernel
from .render import CameraModel, SceneBoxes, render_depth
from .scene import SceneParams


def _rate(count, fn, repeats):
    fn()  # warm-up (and JIT compile)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return count * repeats / (time.perf_counter() - t0)


def batch_rate(n_envs=32, steps=200, depth=False, workers=1):
    """Aggregate env-steps per second through :class:`BatchEnv` with a hovering command."""
    cfg = BatchConfig(n_envs=n_envs, camera=CameraModel() if depth else None, workers=workers)
    with BatchEnv(cfg) as env:
        env.reset()
        actions = np.tile(HOVER, (n_envs, 1))
        return _rate(n_envs, lambda: env.step(actions), steps)


def kernel_rate(n_envs=32, steps=200):
    """Physics-only env-steps per second (one batched kernel call per step)."""
    with BatchEnv(BatchConfig(n_envs=n_envs)) as env:
        env.reset()
        states = env.states.copy()
        ctrls = np.zeros((n_envs, 4))
        contacts = np.zeros((n_envs, NC))
        return _rate(n_envs, lambda: batch_env_step_kernel(states, ctrls, env.params, 0.1, contacts), steps)


def render_rate(frames=50, backend=None):
    """Depth frames per second for a camera looking across the table."""
    cam = CameraModel()
    boxes = SceneBoxes.from_scene(SceneParams(), (-0.25, 0.0, 0.55))
    origin, R = cam.world_pose(np.array([-1.35, 0.0, 0.85]), np.eye(3))
    return _rate(1, lambda: render_depth(origin, R, cam, boxes, backend=backend), frames)


def run_all(n_envs=32, steps=200, workers=1):
    return {
        "backend": BACKEND,
        "kernel_steps_per_s": kernel_rate(n_envs, steps),
        "batch_steps_per_s": batch_rate(n_envs, steps, False, workers),
        "batch_depth_steps_per_s": batch_rate(n_envs, max(steps // 4, 1), True, workers),
        "render_frames_per_s": render_rate(),
    }
