"""Mission phases around an avoidance manoeuvre and the nominal acceleration of each."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

import numpy as np

from .._validation import norm3
from ..drcvar import TriggerDecision
from ..relkin import ObstacleEstimate
from .scenario import MissionConfig


class Phase(str, enum.Enum):
    CRUISE = "CRUISE"
    AVOID = "AVOID"
    BRAKE = "BRAKE"
    HOVER = "HOVER"
    HOLD = "HOLD"
    RESUME = "RESUME"


# Trigger-driven entries into AVOID are allowed from every other phase.
LEGAL = {
    Phase.CRUISE: {Phase.CRUISE, Phase.AVOID},
    Phase.AVOID: {Phase.AVOID, Phase.BRAKE},
    Phase.BRAKE: {Phase.BRAKE, Phase.HOVER, Phase.AVOID},
    Phase.HOVER: {Phase.HOVER, Phase.HOLD, Phase.AVOID},
    Phase.HOLD: {Phase.HOLD, Phase.RESUME, Phase.AVOID},
    Phase.RESUME: {Phase.RESUME, Phase.CRUISE, Phase.AVOID},
}


class IllegalTransition(RuntimeError):
    pass


@dataclass(frozen=True)
class MissionState:
    phase: Phase = Phase.CRUISE
    phase_entry_time: float = 0.0
    bypass_point: Optional[np.ndarray] = None
    threat_id: Optional[int] = None
    evasive: Optional[np.ndarray] = field(default=None, compare=False)


@dataclass
class MissionContext:
    t: float
    position: np.ndarray
    velocity: np.ndarray
    goal: np.ndarray
    a_max: float
    uav_radius: float = 0.15
    estimates: Mapping[int, ObstacleEstimate] = field(default_factory=dict)


def _clamp(a: np.ndarray, a_max: float) -> np.ndarray:
    return np.clip(a, -a_max, a_max)


def goal_nominal(ctx: MissionContext, cfg: MissionConfig) -> np.ndarray:
    """PD towards the goal with the reference speed capped at the cruise speed."""
    v_ref = (cfg.kp / cfg.kd) * (ctx.goal - ctx.position)
    speed = norm3(v_ref)
    if speed > cfg.cruise_speed:
        v_ref *= cfg.cruise_speed / speed
    return _clamp(cfg.kd * (v_ref - ctx.velocity), ctx.a_max)


def hold_nominal(ctx: MissionContext, point: np.ndarray, cfg: MissionConfig) -> np.ndarray:
    return _clamp(cfg.kp * (point - ctx.position) - cfg.kd * ctx.velocity, ctx.a_max)


def brake_nominal(ctx: MissionContext, cfg: MissionConfig) -> np.ndarray:
    return _clamp(-cfg.k_s * ctx.velocity / cfg.t_s, ctx.a_max)


def ray_clearance(position, est: ObstacleEstimate, uav_radius: float) -> float:
    """Distance from the UAV to the obstacle's forward motion ray, minus the radius sum."""
    w = np.asarray(position, dtype=np.float64) - est.position
    speed = norm3(est.velocity)
    if speed < 1e-6:
        dist = norm3(w)
    else:
        u = est.velocity / speed
        s = float(w @ u)
        dist = norm3(w) if s <= 0 else norm3(w - s * u)
    return dist - (uav_radius + est.radius)


def on_course(ctx: MissionContext, cfg: MissionConfig) -> bool:
    to_goal = ctx.goal - ctx.position
    dist = norm3(to_goal)
    if dist <= cfg.goal_tol:
        return True
    speed = norm3(ctx.velocity)
    if speed < 0.5 * cfg.cruise_speed:
        return False
    cos = float(ctx.velocity @ to_goal) / (speed * dist)
    return cos >= math.cos(math.radians(cfg.rejoin_angle_deg))


def _enter(ms: MissionState, phase: Phase, t: float, **kw) -> MissionState:
    if phase not in LEGAL[ms.phase]:
        raise IllegalTransition(f"{ms.phase.value} -> {phase.value}")
    return replace(ms, phase=phase, phase_entry_time=t, **kw)


def mission_update(ms: MissionState, trigger: TriggerDecision, ctx: MissionContext,
                   cfg: MissionConfig) -> tuple[MissionState, np.ndarray]:
    """Advance the phase machine by one control cycle and return the nominal command."""
    t = ctx.t
    if trigger.fired:
        if ms.phase != Phase.AVOID:
            ms = _enter(ms, Phase.AVOID, t, threat_id=trigger.threat_id,
                        evasive=np.asarray(trigger.evasive_nominal, dtype=np.float64))
        elif trigger.threat_id != ms.threat_id:
            ms = replace(ms, threat_id=trigger.threat_id,
                         evasive=np.asarray(trigger.evasive_nominal, dtype=np.float64))

    if ms.phase == Phase.CRUISE:
        return ms, goal_nominal(ctx, cfg)

    if ms.phase == Phase.AVOID:
        est = ctx.estimates.get(ms.threat_id)
        if est is not None and ray_clearance(ctx.position, est, ctx.uav_radius) < cfg.d_cl:
            return ms, _clamp(ms.evasive, ctx.a_max)
        ms = _enter(ms, Phase.BRAKE, t)
        return ms, brake_nominal(ctx, cfg)

    speed = norm3(ctx.velocity)
    if ms.phase == Phase.BRAKE:
        if speed < cfg.hover_speed or t - ms.phase_entry_time >= cfg.t_s - 1e-9:
            ms = _enter(ms, Phase.HOVER, t, bypass_point=np.array(ctx.position, dtype=np.float64))
            return ms, hold_nominal(ctx, ms.bypass_point, cfg)
        return ms, brake_nominal(ctx, cfg)

    if ms.phase == Phase.HOVER:
        if speed < cfg.hover_speed or t - ms.phase_entry_time >= cfg.t_s - 1e-9:
            ms = _enter(ms, Phase.HOLD, t)
        return ms, hold_nominal(ctx, ms.bypass_point, cfg)

    if ms.phase == Phase.HOLD:
        if t - ms.phase_entry_time >= cfg.t_hd - 1e-9:
            ms = _enter(ms, Phase.RESUME, t)
            return ms, goal_nominal(ctx, cfg)
        return ms, hold_nominal(ctx, ms.bypass_point, cfg)

    if ms.phase == Phase.RESUME:
        if on_course(ctx, cfg):
            ms = _enter(ms, Phase.CRUISE, t)
        return ms, goal_nominal(ctx, cfg)

    raise IllegalTransition(f"unknown phase {ms.phase}")
