"""Evaluation sweeps over friction, CSV export and single-episode trajectories."""

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .agents import MPPIConfig, MPPIPlanner, ScriptedParams, ScriptedPolicy, hover_policy
from .episode import ALTERNATING, Episode, EpisodeConfig, episode_rng
from .scene import SceneParams

AGENTS = ("scripted", "mppi", "hover")

CSV_HEADER = ("friction", "episodes", "mean_goals", "std_goals", "mean_reward", "collision_rate")


@dataclass(frozen=True)
class EvalConfig:
    friction_values: tuple = (0.2, 0.3, 0.4, 0.5, 0.6)
    episodes_per_value: int = 100
    goal_mode: str = ALTERNATING
    agent: str = "scripted"
    seed: int = 0
    max_steps: int = 1000
    workers: int = 1
    scene: SceneParams = field(default_factory=SceneParams)
    scripted: ScriptedParams = field(default_factory=ScriptedParams)
    mppi: MPPIConfig = field(default_factory=MPPIConfig)

    def __post_init__(self):
        if self.episodes_per_value < 1:
            raise ValueError("episodes_per_value must be >= 1")
        if not self.friction_values:
            raise ValueError("need at least one friction value")
        if self.agent not in AGENTS and not callable(self.agent):
            raise ValueError(f"agent must be one of {AGENTS} or a factory callable")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def episode_config(self):
        return EpisodeConfig(max_steps=self.max_steps, goal_mode=self.goal_mode, training_mode=False)


@dataclass
class EvalRow:
    friction: float
    episodes: int
    mean_goals: float
    std_goals: float
    mean_reward: float
    collision_rate: float
    stats: list = field(default_factory=list, repr=False, compare=False)

    @classmethod
    def from_stats(cls, friction, stats):
        goals = np.array([s.goals_completed for s in stats], dtype=float)
        rewards = np.array([s.total_reward for s in stats], dtype=float)
        return cls(
            friction=float(friction),
            episodes=len(stats),
            mean_goals=float(goals.mean()),
            std_goals=float(goals.std()),  # population std over the episodes
            mean_reward=float(rewards.mean()),
            collision_rate=float(np.mean([s.collided for s in stats])),
            stats=list(stats),
        )


def make_agent(agent, seed_key, scripted=None, mppi=None, dt=0.1):
    """A fresh policy callable ``(obs, episode) -> action``."""
    if callable(agent):
        return agent(seed_key)
    if agent == "scripted":
        return ScriptedPolicy(scripted)
    if agent == "mppi":
        return MPPIPlanner(mppi, dt=dt, rng=episode_rng(*seed_key, 1))
    if agent == "hover":
        return hover_policy
    raise ValueError(f"unknown agent {agent!r}")


def run_episode(scene, episode_cfg, policy, rng, record=False, camera=None):
    """Run one episode to termination and return the finished :class:`Episode`."""
    ep = Episode(scene=scene, cfg=episode_cfg, record=record, camera=camera)
    obs = ep.reset(rng=rng)
    done = False
    while not done:
        obs, _, done, _ = ep.step(policy(obs, ep))
    return ep


def _eval_one(cfg, i, j):
    mu = cfg.friction_values[i]
    key = (cfg.seed, i, j)
    policy = make_agent(cfg.agent, key, cfg.scripted, cfg.mppi)
    ep = run_episode(replace(cfg.scene, friction_mu=float(mu)), cfg.episode_config(), policy, episode_rng(*key))
    return ep.stats


def run_eval(cfg=None):
    """One :class:`EvalRow` per friction value; evaluation mode, so collisions never reset."""
    cfg = cfg or EvalConfig()
    jobs = [(i, j) for i in range(len(cfg.friction_values)) for j in range(cfg.episodes_per_value)]
    if cfg.workers > 1 and not callable(cfg.agent):
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_eval_one, [cfg] * len(jobs), *zip(*jobs)))
    else:
        results = [_eval_one(cfg, i, j) for i, j in jobs]
    rows = []
    n = cfg.episodes_per_value
    for i, mu in enumerate(cfg.friction_values):
        rows.append(EvalRow.from_stats(mu, results[i * n : (i + 1) * n]))
    return rows


def export_csv(rows):
    if not rows:
        raise ValueError("no rows to export")
    buf = io.StringIO()
    buf.write(",".join(CSV_HEADER) + "\n")
    for r in sorted(rows, key=lambda r: r.friction):
        buf.write(
            f"{r.friction:.6f},{r.episodes:d},{r.mean_goals:.6f},{r.std_goals:.6f},"
            f"{r.mean_reward:.6f},{r.collision_rate:.6f}\n"
        )
    return buf.getvalue()


def parse_csv(text):
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError("unexpected header")
    return [
        EvalRow(
            friction=float(rec["friction"]),
            episodes=int(rec["episodes"]),
            mean_goals=float(rec["mean_goals"]),
            std_goals=float(rec["std_goals"]),
            mean_reward=float(rec["mean_reward"]),
            collision_rate=float(rec["collision_rate"]),
        )
        for rec in reader
    ]


# --- trajectories -------------------------------------------------------------

TRAJECTORY_COLUMNS = (
    "time",
    "vehicle_x", "vehicle_y", "vehicle_z", "vehicle_yaw",
    "object_x", "object_y", "object_z",
    "goal_x", "goal_y", "goal_z",
    "a1", "a2", "a3", "a4",
    "nav_xy_term", "nav_z_term", "tilt_factor", "progress_term", "completion_term", "reward_total",
    "arm_contact", "vehicle_collision", "object_on_table",
)


def export_trajectory(log):
    """CSV text: one ``#``-prefixed line naming the columns, then one row per step.

    Floats use ``repr`` so values read back exactly.
    """
    lines = ["# " + ",".join(TRAJECTORY_COLUMNS)]
    for rec in log:
        rw = rec.reward
        vals = [
            rec.time, *rec.vehicle, *rec.object, *rec.goal, *rec.action,
            rw.nav_xy_term, rw.nav_z_term, rw.tilt_factor, rw.progress_term, rw.completion_term, rw.total,
        ]
        cells = [repr(float(v)) for v in vals]
        cells += [str(int(bool(f))) for f in (rec.arm_contact, rec.vehicle_collision, rec.object_on_table)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def read_trajectory(text):
    """Parse :func:`export_trajectory` output into a dict of column arrays."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing column header")
    names = lines[0][1:].strip().split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:] if ln], dtype=float)
    data = data.reshape(-1, len(names))
    return {name: data[:, k] for k, name in enumerate(names)}


def rollout(agent="scripted", friction=0.4, seed=0, goal_mode=ALTERNATING, max_steps=1000, scene=None,
            scripted=None, mppi=None, camera=None):
    """Single recorded evaluation episode; returns the finished :class:`Episode`."""
    scene = replace(scene or SceneParams(), friction_mu=float(friction))
    cfg = EpisodeConfig(max_steps=max_steps, goal_mode=goal_mode, training_mode=False)
    key = (seed, 0, 0)
    policy = make_agent(agent, key, scripted, mppi)
    return run_episode(scene, cfg, policy, episode_rng(*key), record=True, camera=camera)


def summary_line(row):
    return (f"mu={row.friction:.3f} episodes={row.episodes} goals={row.mean_goals:.2f}"
            f"+-{row.std_goals:.2f} reward={row.mean_reward:.1f} collisions={row.collision_rate:.2f}")

