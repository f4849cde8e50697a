"""INI configuration files.

Each section maps onto one parameter dataclass; keys are its field names::

    [scene]      SceneParams         [episode]   EpisodeConfig
    [vehicle]    VehicleGeometry     [camera]    CameraModel, plus ``enabled``
    [dynamics]   DynamicsParams      [batch]     n_envs, base_seed, workers, friction_values
    [action]     ActionBounds        [eval]      EvalConfig scalars
    [reward]     RewardWeights       [scripted]  ScriptedParams
    [mppi]       MPPIConfig          [serve]     depth, depth_dir, host, port

Tuples are comma separated; ``none`` clears an optional value.  Unknown
sections or keys are errors so typos do not pass silently.
"""

import configparser
import dataclasses
from dataclasses import dataclass, field, replace

from .action import ActionBounds
from .agents import MPPIConfig, ScriptedParams
from .batch import BatchConfig
from .dynamics import DynamicsParams
from .episode import EpisodeConfig
from .harness import EvalConfig
from .render import CameraModel
from .reward import RewardWeights
from .scene import SceneParams, VehicleGeometry


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BatchSection:
    n_envs: int = 32
    base_seed: int = 0
    workers: int = 1
    friction_values: tuple = None


@dataclass(frozen=True)
class EvalSection:
    friction_values: tuple = (0.2, 0.3, 0.4, 0.5, 0.6)
    episodes_per_value: int = 100
    goal_mode: str = "alternating"
    agent: str = "scripted"
    seed: int = 0
    max_steps: int = 1000
    workers: int = 1


@dataclass(frozen=True)
class CameraSection:
    enabled: bool = False
    camera: CameraModel = field(default_factory=CameraModel)


@dataclass(frozen=True)
class ServeSection:
    depth: str = "none"
    depth_dir: str = None
    host: str = "127.0.0.1"
    port: int = 5555


@dataclass(frozen=True)
class Settings:
    scene: SceneParams = field(default_factory=SceneParams)
    vehicle: VehicleGeometry = field(default_factory=VehicleGeometry)
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    action: ActionBounds = field(default_factory=ActionBounds)
    reward: RewardWeights = field(default_factory=RewardWeights)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    camera: CameraSection = field(default_factory=CameraSection)
    batch: BatchSection = field(default_factory=BatchSection)
    eval: EvalSection = field(default_factory=EvalSection)
    scripted: ScriptedParams = field(default_factory=ScriptedParams)
    mppi: MPPIConfig = field(default_factory=MPPIConfig)
    serve: ServeSection = field(default_factory=ServeSection)

    def override(self, section, **values):
        """Copy with non-``None`` ``values`` applied to one section."""
        values = {k: v for k, v in values.items() if v is not None}
        if not values:
            return self
        current = getattr(self, section)
        if section == "camera":
            cam_values = {k: v for k, v in values.items() if k != "enabled"}
            current = replace(current, enabled=values.get("enabled", current.enabled),
                              camera=replace(current.camera, **cam_values))
        else:
            current = replace(current, **values)
        return replace(self, **{section: current})

    def batch_config(self):
        b = self.batch
        return BatchConfig(
            n_envs=b.n_envs, base_seed=b.base_seed, scene=self.scene, episode=self.episode, geom=self.vehicle,
            dyn=self.dynamics, bounds=self.action, weights=self.reward, friction_values=b.friction_values,
            camera=self.camera.camera if self.camera.enabled else None, workers=b.workers,
        )

    def eval_config(self):
        e = self.eval
        return EvalConfig(
            friction_values=tuple(e.friction_values), episodes_per_value=e.episodes_per_value,
            goal_mode=e.goal_mode, agent=e.agent, seed=e.seed, max_steps=e.max_steps, workers=e.workers,
            scene=self.scene, scripted=self.scripted, mppi=self.mppi,
        )


def _parse_value(text, kind, key):
    raw = text.strip()
    if raw.lower() in ("none", ""):
        return None
    try:
        if kind is bool:
            low = raw.lower()
            if low not in configparser.ConfigParser.BOOLEAN_STATES:
                raise ValueError(raw)
            return configparser.ConfigParser.BOOLEAN_STATES[low]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is tuple:
            return tuple(float(x) for x in raw.split(","))
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from None


def _apply(obj, items, section):
    kinds = {f.name: f.type for f in dataclasses.fields(obj) if f.type in (bool, int, float, str, tuple)}
    values = {}
    for key, text in items:
        if key not in kinds:
            raise ConfigError(f"[{section}] unknown key {key!r}")
        values[key] = _parse_value(text, kinds[key], f"[{section}] {key}")
    try:
        return replace(obj, **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def parse_settings(text, base=None):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    settings = base or Settings()
    known = {f.name for f in dataclasses.fields(Settings)}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]")
        items = parser.items(section)
        current = getattr(settings, section)
        if section == "camera":
            enabled = [(k, v) for k, v in items if k == "enabled"]
            rest = [(k, v) for k, v in items if k != "enabled"]
            current = replace(
                current,
                enabled=_apply(current, enabled, section).enabled,
                camera=_apply(current.camera, rest, section),
            )
        else:
            current = _apply(current, items, section)
        settings = replace(settings, **{section: current})
    return settings


def load_settings(path=None):
    if path is None:
        return Settings()
    with open(path, encoding="utf-8") as fh:
        return parse_settings(fh.read())
