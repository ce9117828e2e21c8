"""Constant-velocity Kalman tracker standing in for the obstacle tracker."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .._validation import norm3
from ..relkin import ObstacleEstimate


@dataclass
class TrackerState:
    mean: np.ndarray        # (6,) position then velocity
    cov: np.ndarray         # (6, 6)
    q: float = 1.0          # white-noise acceleration intensity, m^2/s^3
    r_std: float = 0.1      # measurement noise std, m
    n_updates: int = 0


def init_track(z, q: float = 1.0, r_std: float = 0.1, vel_std: float = 10.0) -> TrackerState:
    z = np.asarray(z, dtype=np.float64)
    cov = np.diag([max(r_std, 1e-6) ** 2] * 3 + [vel_std ** 2] * 3)
    return TrackerState(np.concatenate([z, np.zeros(3)]), cov, q, r_std, 1)


@lru_cache(maxsize=32)
def _transition(dt: float, q: float):
    F = np.eye(6)
    F[:3, 3:] = dt * np.eye(3)
    Q = np.zeros((6, 6))
    Q[:3, :3] = dt ** 3 / 3.0 * np.eye(3)
    Q[:3, 3:] = Q[3:, :3] = dt ** 2 / 2.0 * np.eye(3)
    Q[3:, 3:] = dt * np.eye(3)
    Q *= q
    F.flags.writeable = False
    Q.flags.writeable = False
    return F, Q


def predict(ts: TrackerState, dt: float) -> TrackerState:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    F, Q = _transition(float(dt), float(ts.q))
    cov = F @ ts.cov @ F.T + Q
    return TrackerState(F @ ts.mean, 0.5 * (cov + cov.T), ts.q, ts.r_std, ts.n_updates)


def update(ts: TrackerState, z) -> TrackerState:
    z = np.asarray(z, dtype=np.float64)
    R = max(ts.r_std, 1e-6) ** 2 * np.eye(3)
    S = ts.cov[:3, :3] + R
    K = np.linalg.solve(S, ts.cov[:3, :]).T
    mean = ts.mean + K @ (z - ts.mean[:3])
    # Joseph form keeps the covariance PSD
    I_KH = np.eye(6)
    I_KH[:, :3] -= K
    cov = I_KH @ ts.cov @ I_KH.T + K @ R @ K.T
    return TrackerState(mean, 0.5 * (cov + cov.T), ts.q, ts.r_std, ts.n_updates + 1)


def estimate_from_track(ts: TrackerState, uav_position, obstacle_id: int = 0, radius: float = 0.15,
                        acc_bound: float = 0.0) -> ObstacleEstimate:
    """Tracker output tuple: position, velocity, position covariance and LoS velocity std."""
    p, v = ts.mean[:3], ts.mean[3:]
    P_pos, P_vel = ts.cov[:3, :3], ts.cov[3:, 3:]
    los = p - np.asarray(uav_position, dtype=np.float64)
    d = norm3(los)
    n = los / d if d > 1e-9 else np.array([1.0, 0.0, 0.0])
    sigma_v = math.sqrt(max(float(n @ P_vel @ n), 0.0))
    return ObstacleEstimate(p.copy(), v.copy(), P_pos.copy(), sigma_v, acc_bound, radius, obstacle_id, P_vel.copy())


def tracker_step(ts: TrackerState, z, dt: float, uav_position=None, obstacle_id: int = 0,
                 radius: float = 0.15, acc_bound: float = 0.0):
    """Predict by ``dt`` and, when ``z`` is given, update; returns (state, estimate)."""
    ts = predict(ts, dt)
    if z is not None:
        ts = update(ts, z)
    uav_position = np.zeros(3) if uav_position is None else uav_position
    return ts, estimate_from_track(ts, uav_position, obstacle_id, radius, acc_bound)
