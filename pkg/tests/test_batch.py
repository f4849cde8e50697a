from dataclasses import replace

import numpy as np
import pytest

from aerialpush.agents import HOVER
from aerialpush.batch import BatchConfig, BatchEnv, batch_reset, batch_step
from aerialpush.episode import RANDOM, Episode, EpisodeConfig, ResetReason, episode_rng
from aerialpush.scene import SceneParams, friction_schedule


def _vectors(obs_list):
    return np.array([o.to_vector() for o in obs_list])


def test_reset_assigns_schedule():
    env, obs = batch_reset(BatchConfig())
    assert len(obs) == 32
    assert env.frictions == friction_schedule(32)
    assert len(set(env.frictions)) == 32
    assert [e.scene.friction_mu for e in env.episodes] == env.frictions


def test_single_env_keeps_template_friction():
    env, _ = batch_reset(BatchConfig(n_envs=1, scene=SceneParams(friction_mu=0.37)))
    assert env.frictions == [0.37]


def test_reset_seed_behaviour():
    cfg = BatchConfig(n_envs=8, episode=EpisodeConfig(goal_mode=RANDOM), base_seed=5)
    a = batch_reset(cfg)[1]
    b = batch_reset(cfg)[1]
    np.testing.assert_array_equal(_vectors(a), _vectors(b))
    env_c, c = batch_reset(replace(cfg, base_seed=6))
    assert env_c.frictions == batch_reset(cfg)[0].frictions
    assert not np.array_equal(_vectors(a), _vectors(c))


def test_hover_actions_complete_nothing():
    env, _ = batch_reset(BatchConfig(n_envs=8))
    for _ in range(50):
        out = batch_step(env, np.tile(HOVER, (8, 1)))
        assert not any(t.info["completed"] for t in out)
        assert not any(t.done for t in out)
        assert [t.env_index for t in out] == list(range(8))


def test_action_shape_checked():
    env, _ = batch_reset(BatchConfig(n_envs=4))
    with pytest.raises(ValueError):
        env.step(np.zeros((3, 4)))
    with pytest.raises(ValueError):
        BatchConfig(n_envs=0)
    with pytest.raises(ValueError):
        BatchConfig(n_envs=2, friction_values=(0.1,))


def run_batch(workers, steps=150, seed=9):
    cfg = BatchConfig(n_envs=16, base_seed=seed, workers=workers,
                      episode=EpisodeConfig(goal_mode=RANDOM, max_steps=60))
    rng = np.random.default_rng(seed)
    trace = []
    with BatchEnv(cfg) as env:
        trace.append(_vectors(env.reset()))
        for _ in range(steps):
            out = env.step(rng.uniform(-1.2, 1.2, (16, 4)))
            trace.append(np.array([[*t.observation.to_vector(), t.reward.total, t.done] for t in out]))
        trace.append(env.states.copy())
    return trace


def test_worker_count_does_not_change_results():
    base = run_batch(1)
    for workers in (2, 5):
        for a, b in zip(base, run_batch(workers)):
            np.testing.assert_array_equal(a, b)


def test_auto_reset_contract():
    cfg = BatchConfig(n_envs=4, episode=EpisodeConfig(max_steps=5))
    env, _ = batch_reset(cfg)
    hover = np.tile(HOVER, (4, 1))
    for k in range(1, 6):
        out = env.step(hover)
    assert all(t.done and t.reset_reason == ResetReason.TIME_LIMIT for t in out)
    assert out[3].stats.steps == 5
    out = env.step(hover)
    assert not out[3].done
    assert env.episodes[3].timers.steps == 1
    assert env._episode_counter[3] == 2


def test_batch_env_matches_single_episode():
    cfg = BatchConfig(n_envs=4, base_seed=2, episode=EpisodeConfig(goal_mode=RANDOM))
    env, _ = batch_reset(cfg)
    rng = np.random.default_rng(0)
    actions = rng.uniform(-1, 1, (40, 4, 4))
    i = 2
    ep = Episode(scene=replace(cfg.scene, friction_mu=env.frictions[i]), cfg=cfg.episode)
    ep.reset(rng=episode_rng(cfg.base_seed, i, 0))
    for a in actions:
        t = env.step(a)[i]
        obs, r, done, _ = ep.step(a[i])
        np.testing.assert_array_equal(t.observation.to_vector(), obs.to_vector())
        assert t.reward.total == r.total
        if done:
            break
