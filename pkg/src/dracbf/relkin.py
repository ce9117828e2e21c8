"""Relative kinematics and line-of-sight geometry between the UAV and obstacles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_covariance, check_positive, check_vector3

D_MIN = 1e-3


class DegenerateRange(ValueError):
    """UAV and obstacle centres coincide; the caller must treat this as a collision."""


class NonPsdCovariance(ValueError):
    """The LoS-projected covariance is negative, i.e. the tracker output is corrupt."""


@dataclass
class UavState:
    position: np.ndarray
    velocity: np.ndarray
    position_cov: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def __post_init__(self):
        self.position = check_vector3(self.position, "position")
        self.velocity = check_vector3(self.velocity, "velocity")
        self.position_cov = check_covariance(self.position_cov, "position_cov")


@dataclass
class ObstacleEstimate:
    """Tracker output for one obstacle.

    ``velocity_cov`` is optional; when absent the Monte Carlo layer samples the
    velocity isotropically with standard deviation ``sigma_v_los``.
    """

    position: np.ndarray
    velocity: np.ndarray
    position_cov: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    sigma_v_los: float = 0.0
    acc_bound: float = 0.0
    radius: float = 0.15
    obstacle_id: int = 0
    velocity_cov: Optional[np.ndarray] = None

    def __post_init__(self):
        self.position = check_vector3(self.position, "position")
        self.velocity = check_vector3(self.velocity, "velocity")
        self.position_cov = check_covariance(self.position_cov, "position_cov")
        self.sigma_v_los = check_positive(self.sigma_v_los, "sigma_v_los", allow_zero=True)
        self.acc_bound = check_positive(self.acc_bound, "acc_bound", allow_zero=True)
        if self.velocity_cov is not None:
            self.velocity_cov = check_covariance(self.velocity_cov, "velocity_cov")


@dataclass(frozen=True)
class RelativeKinematics:
    rel_pos: np.ndarray
    rel_vel: np.ndarray
    los_unit: np.ndarray
    range: float
    closing_speed: float
    obstacle_id: int = 0


def relative_kinematics(uav: UavState, obs: ObstacleEstimate, d_min: float = D_MIN) -> RelativeKinematics:
    """LoS unit vector, range and closing speed of ``obs`` as seen from ``uav``.

    Raises DegenerateRange when the range does not exceed ``d_min``.
    """
    P = obs.position - uav.position
    V = obs.velocity - uav.velocity
    d = math.sqrt(P[0] * P[0] + P[1] * P[1] + P[2] * P[2])
    if d <= d_min:
        raise DegenerateRange(f"range {d:.3e} m is below the floor {d_min:.1e} m")
    n = P / d
    v_cl = max(0.0, -float(n @ V))
    return RelativeKinematics(P, V, n, d, v_cl, obs.obstacle_id)


def los_sigma(uav_cov, obs_cov, n, H: float, sigma_v_los: float, tol: float = 1e-12) -> float:
    """Standard deviation of the predicted LoS distance over lookahead ``H``."""
    if H <= 0:
        raise ValueError(f"H must be > 0, got {H}")
    n = np.asarray(n, dtype=np.float64)
    var_pos = float(n @ (np.asarray(uav_cov) + np.asarray(obs_cov)) @ n)
    if var_pos < -tol:
        raise NonPsdCovariance(f"LoS position variance is negative ({var_pos:.3e})")
    return math.sqrt(max(var_pos, 0.0) + (H * sigma_v_los) ** 2)
