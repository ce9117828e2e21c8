"""Scenario description and loading from YAML/JSON files.

A scenario file is a mapping with these sections (all optional except
``obstacles``)::

    name: long_range
    seed: 0
    uav: {start: [0, 0, 0], goal: [60, 0, 0], radius: 0.15}
    limits: {v_max: 10.0, a_max: 6.0, j_max: 30.0, latency: 0.02}
    sensing: {noise_std: 0.1, perfect: false, range: 150.0, process_noise: 1.0,
              smd_warmup: 1.0}
    control_rate: 100.0
    timeout: 60.0
    end_when_clear: false     # stop (as a success) once every obstacle has passed
    mission: {cruise_speed: 2.0, kp: 1.0, kd: 2.0, t_s: 0.5, k_s: 1.0,
              d_cl: 0.05, t_hd: 3.0, goal_tol: 0.5}
    filter: {alpha_total: 0.1, H_max: 0.4, ...}   # DRACBFFilter parameters
    obstacles:
      - {kind: head_on, time_to_cross: 6.0, speed: [5, 10], offset: [-0.2, 0.2]}
      - {kind: crossing, angle_deg: 45, time_to_cross: 8.0, speed: [5, 10]}
      - {start: [30, 0, 0], velocity: [-6, 0, 0], radius: 0.15}

Ranges written as ``[lo, hi]`` are drawn uniformly per episode; scalars are
fixed. ``head_on`` and ``crossing`` obstacles are aimed so that, at constant
cruise speed, they reach the UAV's path point at ``time_to_cross``; the
``offset`` shifts that crossing point sideways (``offset_axis``: ``y`` or
``z``). Giving ``start_range`` (m) instead of ``time_to_cross`` places the
obstacle at that initial distance from the UAV and derives the crossing
time from it.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from ..filters import CBFQPFilter


class ConfigError(ValueError):
    pass


@dataclass
class MissionConfig:
    cruise_speed: float = 2.0
    kp: float = 1.0
    kd: float = 2.0
    t_s: float = 0.5
    k_s: float = 1.0
    d_cl: float = 0.05
    t_hd: float = 3.0
    goal_tol: float = 0.5
    hover_speed: float = 0.05
    rejoin_angle_deg: float = 10.0


@dataclass
class Limits:
    v_max: float = 10.0
    a_max: float = 6.0
    j_max: float = 30.0
    latency: float = 0.02


@dataclass
class Sensing:
    noise_std: float = 0.1
    perfect: bool = False
    range: float = 150.0
    process_noise: float = 1.0
    smd_warmup: float = 1.0


@dataclass
class ObstacleSpec:
    start: np.ndarray
    velocity: np.ndarray
    radius: float = 0.15


@dataclass
class Scenario:
    obstacles: list = field(default_factory=list)
    name: str = "scenario"
    seed: int = 0
    uav_start: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    uav_goal: list = field(default_factory=lambda: [60.0, 0.0, 0.0])
    uav_radius: float = 0.15
    limits: Limits = field(default_factory=Limits)
    sensing: Sensing = field(default_factory=Sensing)
    control_rate: float = 100.0
    timeout: float = 60.0
    end_when_clear: bool = False
    mission: MissionConfig = field(default_factory=MissionConfig)
    filter: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.control_rate > 0:
            raise ConfigError("control_rate must be > 0")
        if not self.timeout > 0:
            raise ConfigError("timeout must be > 0")
        for ob in self.obstacles:
            if not isinstance(ob, dict):
                raise ConfigError("obstacle entries must be mappings")
            if "kind" not in ob and not ("start" in ob and "velocity" in ob):
                raise ConfigError("an obstacle needs either 'kind' or both 'start' and 'velocity'")
            if ob.get("kind") not in (None, "head_on", "crossing"):
                raise ConfigError(f"unknown obstacle kind {ob.get('kind')!r}")
        unknown = set(self.filter) - set(CBFQPFilter._get_param_names())
        if unknown:
            raise ConfigError(f"unknown filter settings: {sorted(unknown)}")

    @property
    def dt(self) -> float:
        return 1.0 / self.control_rate

    def to_dict(self) -> dict:
        return asdict(self)

    def fingerprint(self) -> str:
        """Stable short hash of the full configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=float)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, **changes) -> "Scenario":
        """Copy with dotted-path overrides, e.g. ``{"mission.t_hd": 1.0}``."""
        data = copy.deepcopy(self.to_dict())
        for key, value in changes.items():
            node = data
            parts = key.split(".")
            for p in parts[:-1]:
                node = node.setdefault(p, {})
            node[parts[-1]] = value
        return scenario_from_dict(data)

    def realize(self, rng: np.random.Generator) -> list[ObstacleSpec]:
        """Concrete obstacle start states for one episode."""
        start = np.asarray(self.uav_start, dtype=np.float64)
        goal = np.asarray(self.uav_goal, dtype=np.float64)
        path = goal - start
        length = float(np.linalg.norm(path))
        e_path = path / length if length > 0 else np.array([1.0, 0.0, 0.0])
        e_side = np.cross([0.0, 0.0, 1.0], e_path)
        if np.linalg.norm(e_side) < 1e-9:
            e_side = np.array([0.0, 1.0, 0.0])
        e_side /= np.linalg.norm(e_side)
        e_up = np.cross(e_path, e_side)
        out = []
        for ob in self.obstacles:
            radius = float(_draw(ob.get("radius", 0.15), rng))
            if "kind" not in ob:
                out.append(ObstacleSpec(np.asarray(ob["start"], float), np.asarray(ob["velocity"], float), radius))
                continue
            speed = float(_draw(ob.get("speed", 5.0), rng))
            offset = float(_draw(ob.get("offset", 0.0), rng))
            axis = e_up if ob.get("offset_axis", "y") == "z" else e_side
            if ob["kind"] == "head_on":
                u = -e_path
            else:
                ang = math.radians(float(_draw(ob.get("angle_deg", 45.0), rng)))
                u = -math.cos(ang) * e_path - math.sin(ang) * e_side
            # the velocity loop is first order with time constant 1/kd
            lag = 1.0 / self.mission.kd if self.mission.kd > 0 else 0.0

            def place(t_c):
                along = min(self.mission.cruise_speed * max(t_c - lag, 0.0), length)
                cross_pt = start + along * e_path + offset * axis
                return cross_pt - u * speed * t_c

            if "start_range" in ob:
                t_c = _solve_start_range(place, start, float(_draw(ob["start_range"], rng)))
            else:
                t_c = float(_draw(ob.get("time_to_cross", 6.0), rng))
            out.append(ObstacleSpec(place(t_c), u * speed, radius))
        return out


def _solve_start_range(place, start: np.ndarray, rng_m: float) -> float:
    """Crossing time at which the obstacle starts ``rng_m`` metres from the UAV."""
    def gap(t):
        return float(np.linalg.norm(place(t) - start)) - rng_m
    lo, hi = 0.0, 1.0
    while gap(hi) < 0:
        hi *= 2.0
        if hi > 1e6:
            raise ConfigError(f"cannot place an obstacle at range {rng_m}")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if gap(mid) < 0 else (lo, mid)
    return hi


def _draw(value, rng: np.random.Generator):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigError(f"ranges must be [lo, hi], got {value}")
        lo, hi = float(value[0]), float(value[1])
        return lo if hi == lo else rng.uniform(lo, hi)
    return value


def scenario_from_dict(data: dict) -> Scenario:
    data = dict(data)
    try:
        if "uav" in data:
            uav = data.pop("uav")
            data.setdefault("uav_start", uav.get("start", [0.0, 0.0, 0.0]))
            data.setdefault("uav_goal", uav.get("goal", [60.0, 0.0, 0.0]))
            data.setdefault("uav_radius", uav.get("radius", 0.15))
        if "limits" in data:
            data["limits"] = Limits(**data["limits"])
        if "sensing" in data:
            data["sensing"] = Sensing(**data["sensing"])
        if "mission" in data:
            data["mission"] = MissionConfig(**data["mission"])
        return Scenario(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    """Read a scenario from a YAML or JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data: Any = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at top level")
    return scenario_from_dict(data)


def default_scenario(name: Optional[str] = None) -> Scenario:
    return Scenario(name=name or "default", obstacles=[
        {"kind": "head_on", "time_to_cross": 8.0, "speed": [5.0, 10.0], "offset": [-0.2, 0.2]},
        {"kind": "crossing", "angle_deg": 45.0, "time_to_cross": 16.0, "speed": [5.0, 10.0],
         "offset": [-0.2, 0.2]},
    ])
