"""Acceleration-level barrier: effective clearance, half-spaces and horizon search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._validation import norm3
from .projection import ProjectionConfig, gauss_southwell_arrays, stack_constraints
from .relkin import RelativeKinematics


@dataclass(frozen=True)
class ClearanceParams:
    R_sum: float = 0.3
    v_max: float = 10.0
    a_max: float = 6.0
    j_max: float = 30.0
    latency: float = 0.02

    def __post_init__(self):
        for name in ("R_sum", "v_max", "a_max", "j_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.latency < 0:
            raise ValueError(f"latency must be >= 0, got {self.latency}")


@dataclass(frozen=True)
class HalfSpace:
    """Safe accelerations satisfy ``normal @ a <= bound``."""

    normal: np.ndarray
    bound: float
    obstacle_id: int = 0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=np.float64)
        if abs(norm3(n) - 1.0) > 1e-9:
            raise ValueError("half-space normal must be a unit vector")
        if not np.isfinite(self.bound):
            raise ValueError("half-space bound must be finite")
        object.__setattr__(self, "normal", n)

    def residual(self, a) -> float:
        return float(self.normal @ np.asarray(a, dtype=np.float64) - self.bound)


@dataclass(frozen=True)
class HorizonConfig:
    H_min: float = 0.15
    H_max: float = 0.4
    n_candidates: int = 6

    def __post_init__(self):
        if not 0 < self.H_min < self.H_max:
            raise ValueError(f"need 0 < H_min < H_max, got {self.H_min}, {self.H_max}")
        if self.n_candidates < 2:
            raise ValueError("n_candidates must be >= 2")

    def grid(self) -> np.ndarray:
        return np.linspace(self.H_min, self.H_max, self.n_candidates)


def effective_clearance(cp: ClearanceParams, H: float, acc_bound_i: float) -> float:
    """Radius sum padded for latency, actuation, jerk ramp and obstacle acceleration."""
    if H <= 0:
        raise ValueError(f"H must be > 0, got {H}")
    d = cp.latency
    return (cp.R_sum
            + cp.v_max * d
            + 0.5 * cp.a_max * d * d
            + cp.j_max * H ** 3 / 6.0
            + 0.5 * acc_bound_i * H * H)


def margin_bound(d: float, R_eff: float, v_cl: float, H: float, tightening: float = 0.0) -> float:
    return 2.0 / (H * H) * (d - R_eff - v_cl * H - tightening)


def halfspace(rk: RelativeKinematics, R_eff: float, H: float) -> HalfSpace:
    if H <= 0:
        raise ValueError(f"H must be > 0, got {H}")
    return HalfSpace(rk.los_unit, margin_bound(rk.range, R_eff, rk.closing_speed, H), rk.obstacle_id)


def tightened_halfspace(rk: RelativeKinematics, R_eff: float, H: float,
                        lambda_i: float, sigma_dH: float) -> HalfSpace:
    """Half-space with the bound reduced by the risk margin ``lambda_i * sigma_dH``."""
    if H <= 0:
        raise ValueError(f"H must be > 0, got {H}")
    if lambda_i < 0 or sigma_dH < 0:
        raise ValueError("lambda_i and sigma_dH must be >= 0")
    b = margin_bound(rk.range, R_eff, rk.closing_speed, H, lambda_i * sigma_dH)
    return HalfSpace(rk.los_unit, b, rk.obstacle_id)


def barrier_residual(rk: RelativeKinematics, a_e, a_i, R_sum: float, H: float) -> float:
    """Second-order barrier expression ``h'' + (2/H) h' + (2/H^2) h``.

    Diagnostic only: a non-negative value means the second-order condition
    holds for the given UAV and obstacle accelerations.
    """
    P, V = rk.rel_pos, rk.rel_vel
    a_rel = np.asarray(a_i, dtype=np.float64) - np.asarray(a_e, dtype=np.float64)
    h = float(P @ P) - R_sum * R_sum
    h_dot = 2.0 * float(P @ V)
    h_ddot = 2.0 * float(V @ V) + 2.0 * float(P @ a_rel)
    return h_ddot + (2.0 / H) * h_dot + (2.0 / H ** 2) * h


def feasibility_tolerance(H: float) -> float:
    return 1e-6 * 2.0 / (H * H)


def select_horizon(cfg: HorizonConfig, builder: Callable[[float], Sequence[HalfSpace]],
                   a_n, a_max: float, proj: ProjectionConfig | None = None) -> float:
    """Largest grid horizon whose constraint set the projector can satisfy.

    ``builder(H)`` returns the tightened half-spaces for horizon ``H``.
    Feasibility is certified by running the projection from ``a_n`` and
    checking the residual violation; ``H_min`` is returned when no candidate
    passes.
    """
    proj = proj or ProjectionConfig(a_max=a_max)
    a_n = np.asarray(a_n, dtype=np.float64)
    for H in cfg.grid()[::-1]:
        H = float(H)
        A, b = stack_constraints(builder(H))
        if A.shape[0] == 0:
            return H
        res = gauss_southwell_arrays(a_n, A, b, proj.omega, int(proj.base_iters), a_max)
        if res.max_violation <= feasibility_tolerance(H):
            return H
    return float(cfg.H_min)
