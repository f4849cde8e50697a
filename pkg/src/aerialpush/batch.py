"""Many environments stepped together with scheduled friction.

Physics for all environments runs in one kernel call over a ``(n_envs, NS)``
state array, split into contiguous chunks when several worker threads are
used (the kernels release the GIL).  Each environment draws randomness from
its own counter-based stream keyed by ``(base_seed, env_index, episode)``, so
results do not depend on the number of workers or their scheduling.
"""

import copy
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._accel import jit
from .action import ActionBounds, map_action_kernel
from .dynamics import NC, NP, NS, DynamicsParams, batch_env_step_kernel
from .episode import Episode, EpisodeConfig, episode_rng
from .reward import RewardWeights
from .scene import SceneParams, VehicleGeometry, friction_schedule


@dataclass(frozen=True)
class BatchConfig:
    n_envs: int = 32
    base_seed: int = 0
    scene: SceneParams = field(default_factory=SceneParams)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    geom: VehicleGeometry = field(default_factory=VehicleGeometry)
    dyn: DynamicsParams = field(default_factory=DynamicsParams)
    bounds: ActionBounds = field(default_factory=ActionBounds)
    weights: RewardWeights = field(default_factory=RewardWeights)
    friction_values: tuple = None  # overrides the schedule when given
    camera: object = None  # CameraModel to render depth, None to skip
    workers: int = 1

    def __post_init__(self):
        if self.n_envs < 1:
            raise ValueError("n_envs must be >= 1")
        if self.friction_values is not None and len(self.friction_values) != self.n_envs:
            raise ValueError("friction_values must have one entry per environment")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def frictions(self):
        if self.friction_values is not None:
            return [float(mu) for mu in self.friction_values]
        if self.n_envs == 1:
            return [self.scene.friction_mu]
        return friction_schedule(self.n_envs)


@dataclass
class Transition:
    env_index: int
    observation: object
    reward: object
    done: bool
    reset_reason: object = None
    stats: object = None  # final EpisodeStats when done
    info: dict = None


@jit
def _map_actions(actions, bounds, ctrls):
    for i in range(actions.shape[0]):
        map_action_kernel(actions[i], bounds, ctrls[i])


class BatchEnv:
    def __init__(self, cfg=None, record=False):
        self.cfg = cfg or BatchConfig()
        n = self.cfg.n_envs
        self.states = np.zeros((n, NS))
        self.params = np.zeros((n, NP))
        self.contacts = np.zeros((n, NC))
        self.ctrls = np.zeros((n, 4))
        self.frictions = self.cfg.frictions()
        self.episodes = [
            Episode(
                scene=replace(self.cfg.scene, friction_mu=mu),
                cfg=self.cfg.episode,
                geom=self.cfg.geom,
                dyn=self.cfg.dyn,
                bounds=self.cfg.bounds,
                weights=self.cfg.weights,
                camera=self.cfg.camera,
                record=record,
                state=self.states[i],
                params=self.params[i],
            )
            for i, mu in enumerate(self.frictions)
        ]
        for i, ep in enumerate(self.episodes):
            ep.contact = self.contacts[i]
        self._bounds = self.cfg.bounds.as_array()
        self._episode_counter = [0] * n
        self._pending_reset = [False] * n
        self._pool = ThreadPoolExecutor(self.cfg.workers) if self.cfg.workers > 1 else None

    @property
    def n_envs(self):
        return self.cfg.n_envs

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _reset_env(self, i):
        rng = episode_rng(self.cfg.base_seed, i, self._episode_counter[i])
        self._episode_counter[i] += 1
        self._pending_reset[i] = False
        return self.episodes[i].reset(rng=rng)

    def reset(self):
        self._episode_counter = [0] * self.n_envs
        return [self._reset_env(i) for i in range(self.n_envs)]

    def _physics(self, dt):
        n = self.n_envs
        if self._pool is None:
            batch_env_step_kernel(self.states, self.ctrls, self.params, dt, self.contacts)
            return
        bounds = np.linspace(0, n, min(self.cfg.workers, n) + 1).astype(int)
        jobs = [
            self._pool.submit(batch_env_step_kernel, self.states[a:b], self.ctrls[a:b], self.params[a:b], dt,
                              self.contacts[a:b])
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        for job in jobs:
            job.result()

    def step(self, actions):
        actions = np.asarray(actions, dtype=float)
        if actions.shape != (self.n_envs, 4):
            raise ValueError(f"expected actions of shape ({self.n_envs}, 4), got {actions.shape}")
        for i in range(self.n_envs):
            if self._pending_reset[i] or self.episodes[i].done:
                self._reset_env(i)
        _map_actions(actions, self._bounds, self.ctrls)
        self._physics(self.cfg.episode.dt)
        out = []
        for i, ep in enumerate(self.episodes):
            obs, reward, done, info = ep.finish_step(actions[i])
            stats = None
            if done:
                self._pending_reset[i] = True
                stats = copy.copy(ep.stats)
            out.append(Transition(i, obs, reward, done, info["reset_reason"], stats, info))
        return out


def batch_reset(cfg):
    """A fresh :class:`BatchEnv` and its initial observations."""
    env = BatchEnv(cfg)
    return env, env.reset()


def batch_step(env, actions):
    return env.step(actions)
