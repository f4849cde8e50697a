"""Batched simulator for a quadrotor pushing a cube across a table under varying friction.

Velocity-level vehicle model, capsule/box penalty contact with Coulomb friction,
shaped rewards, observation assembly with a ray-cast depth image, episode and
batch stepping, baseline agents and an evaluation harness.
"""

from ._accel import BACKEND, HAS_NUMBA
from .action import ActionBounds, map_action
from .agents import MPPIConfig, MPPIPlanner, ScriptedParams, ScriptedPolicy, mppi_plan, scripted_policy
from .batch import BatchConfig, BatchEnv, Transition, batch_reset, batch_step
from .dynamics import (
    ContactReport,
    ControlInput,
    DynamicsParams,
    EnvState,
    ObjectState,
    VehicleState,
    contact_query,
    env_step,
    object_step,
    vehicle_step,
)
from .episode import Episode, EpisodeConfig, EpisodeStats, ResetReason, check_termination, episode_step, update_goal
from .geometry import Pose, direction_and_distance, rotation_from_euler, tilt_metric
from .harness import EvalConfig, EvalRow, export_csv, export_trajectory, run_eval
from .observation import Observation, assemble_observation
from .render import CameraModel, render_depth
from .reward import DistanceSet, RewardBreakdown, RewardWeights, compute_distances, f_delta, f_impulse, f_neg, f_pos, step_reward
from .scene import GoalSpec, SceneParams, VehicleGeometry, alternating_goal, friction_schedule, random_goal

__version__ = "0.1.0"
