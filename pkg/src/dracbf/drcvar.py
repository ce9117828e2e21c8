"""Monte Carlo early-warning layer based on a distributionally robust CVaR.

Obstacle states are sampled from the tracker's Gaussian, propagated with
constant velocity over a short prediction grid, and scored by how far each
sample intrudes into a speed-dependent safe distance. The empirical CVaR of
that intrusion, shifted up by a Wasserstein margin, fires the trigger when
it becomes non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Optional, Sequence

import numpy as np

from ._validation import norm3
from .relkin import ObstacleEstimate, RelativeKinematics, UavState, los_sigma

WORLD_UP = np.array([0.0, 0.0, 1.0])


class InvalidDecel(ValueError):
    pass


@dataclass(frozen=True)
class CvarConfig:
    beta: float = 0.05
    tau: float = 0.02
    epsilon: float = 0.05
    L_Z: float = 1.0
    n_samples: int = 64
    pred_horizon: float = 0.4
    pred_dt: float = 0.05
    uav_decel: float = 6.0
    obs_decel: float = 2.0

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if self.epsilon < 0 or not self.L_Z > 0:
            raise ValueError("need epsilon >= 0 and L_Z > 0")
        if self.n_samples < 2 or math.ceil(self.beta * self.n_samples) < 1:
            raise ValueError("n_samples must be >= 2")
        if not 0 < self.pred_dt <= self.pred_horizon:
            raise ValueError("need 0 < pred_dt <= pred_horizon")

    def time_grid(self) -> np.ndarray:
        k = int(math.floor(self.pred_horizon / self.pred_dt + 1e-9))
        return np.arange(k + 1) * self.pred_dt


@dataclass(frozen=True)
class TriggerDecision:
    fired: bool
    worst_cvar: float
    alpha_override: Optional[float] = None
    H_override: Optional[float] = None
    evasive_nominal: Optional[np.ndarray] = None
    threat_id: Optional[int] = None
    per_obstacle: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class SampleSet:
    """Relative trajectories, arrays of shape (n_samples, n_times, 3)."""

    times: np.ndarray
    rel_pos: np.ndarray
    rel_vel: np.ndarray


def _velocity_cov(est: ObstacleEstimate) -> np.ndarray:
    if est.velocity_cov is not None:
        return est.velocity_cov
    return np.eye(3) * est.sigma_v_los ** 2


def _sample_gaussian(rng: np.random.Generator, mean: np.ndarray, cov: np.ndarray, n: int) -> np.ndarray:
    try:
        root = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # singular PSD covariance (e.g. exact sensing): eigh square root instead
        w, U = np.linalg.eigh(cov)
        root = U * np.sqrt(np.clip(w, 0.0, None))
    return mean + rng.standard_normal((n, mean.size)) @ root.T


def propagate_samples(est: ObstacleEstimate, uav: UavState, cfg: CvarConfig,
                      rng: np.random.Generator) -> SampleSet:
    """Draw obstacle (p, v) samples and propagate them with constant velocity.

    The UAV position uncertainty is folded into the position draw; the
    relative velocity uses the UAV's current velocity.
    """
    t = cfg.time_grid()
    n = int(cfg.n_samples)
    mean = np.concatenate([est.position - uav.position, est.velocity - uav.velocity])
    cov = np.zeros((6, 6))
    cov[:3, :3] = est.position_cov + uav.position_cov
    cov[3:, 3:] = _velocity_cov(est)
    draws = _sample_gaussian(rng, mean, cov, n)
    P0, V = draws[:, :3], draws[:, 3:]
    rel_pos = P0[:, None, :] + V[:, None, :] * t[None, :, None]
    rel_vel = np.broadcast_to(V[:, None, :], rel_pos.shape)
    return SampleSet(t, rel_pos, rel_vel)


def dynamic_distance(v, cfg: CvarConfig):
    """Reaction plus braking distance at closing speed ``v`` (scalar or array)."""
    decel = cfg.uav_decel + cfg.obs_decel
    if decel <= 0:
        raise InvalidDecel("uav_decel + obs_decel must be > 0")
    v = np.asarray(v, dtype=np.float64)
    out = v * cfg.tau + v * v / (2.0 * decel)
    return float(out) if out.ndim == 0 else out


def violation_terms(samples: SampleSet, R_sum: float, cfg: CvarConfig) -> np.ndarray:
    """Intrusion ``R_sum + D_dyn - range`` for every sample and time, shape (n_samples, n_times)."""
    P, V = samples.rel_pos, samples.rel_vel
    if P.shape[0] == 0:
        raise ValueError("samples must be non-empty")
    d = np.sqrt(np.einsum("...i,...i->...", P, P))
    v_cl = np.maximum(0.0, -np.einsum("...i,...i->...", P, V) / np.maximum(d, 1e-12))
    return R_sum + dynamic_distance(v_cl, cfg) - d


def dr_cvar(Z, beta: float, epsilon: float, L_Z: float) -> float:
    """Mean of the ``ceil(beta*N)`` largest values of ``Z`` plus ``epsilon*L_Z``."""
    Z = np.asarray(Z, dtype=np.float64).reshape(-1)
    if Z.size == 0:
        raise ValueError("Z must be non-empty")
    m = max(1, math.ceil(beta * Z.size - 1e-12))
    tail = np.partition(Z, Z.size - m)[Z.size - m:]
    return float(tail.mean()) + epsilon * L_Z


def max_cvar_over_time(Z: np.ndarray, cfg: CvarConfig) -> float:
    """CVaR across samples at each prediction time, maximised over time."""
    n = Z.shape[0]
    m = max(1, math.ceil(cfg.beta * n - 1e-12))
    tail = np.partition(Z, n - m, axis=0)[n - m:]
    return float(tail.mean(axis=0).max()) + cfg.epsilon * cfg.L_Z


def evasive_direction(rk: RelativeKinematics, obs_velocity=None) -> np.ndarray:
    """Unit vector normal to the LoS inside the plane spanned by the LoS and world-up.

    The sign points away from the obstacle's own motion along that direction;
    a tie resolves upwards.
    """
    n = rk.los_unit
    e = WORLD_UP - (WORLD_UP @ n) * n
    norm = norm3(e)
    if norm < 1e-6:
        # LoS is vertical: fall back to the horizontal axis least aligned with it
        axis = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        e = axis - (axis @ n) * n
        norm = norm3(e)
    e = e / norm
    if obs_velocity is not None:
        lateral = float(np.asarray(obs_velocity, dtype=np.float64) @ e)
        if lateral > 1e-9:
            e = -e
    return e


def evaluate_trigger(cvar_maxima: Sequence[float], kinematics: Sequence[RelativeKinematics],
                     alpha_total: float, H_max: float, a_max: float,
                     obs_velocities: Optional[Sequence] = None) -> TriggerDecision:
    """Fire when any obstacle's time-maximised CVaR is non-negative.

    ``obs_velocities`` (absolute obstacle velocities) pick the evasive side;
    without them the evasive direction defaults upwards.
    """
    cvar_maxima = [float(c) for c in cvar_maxima]
    if not cvar_maxima:
        return TriggerDecision(False, -math.inf)
    worst = int(np.argmax(cvar_maxima))
    worst_cvar = cvar_maxima[worst]
    if worst_cvar < 0.0:
        return TriggerDecision(False, worst_cvar, per_obstacle=tuple(cvar_maxima))
    rk = kinematics[worst]
    vel = None if obs_velocities is None else obs_velocities[worst]
    evasive = a_max * evasive_direction(rk, vel)
    return TriggerDecision(True, worst_cvar, alpha_total / 2.0, H_max, evasive,
                           rk.obstacle_id, tuple(cvar_maxima))


def closest_approach_scores(kinematics: Sequence[RelativeKinematics], estimates: Sequence[ObstacleEstimate],
                            uav: UavState, R_sum: float, alpha_total: float, window: float) -> list[float]:
    """Single-time Gaussian chance constraint at the time of closest approach.

    For each obstacle the constant-velocity closest approach inside
    ``[0, window]`` is located and the score is
    ``R_sum + z_(1-alpha) * sigma - d_ca``; a non-negative score means the
    chance of intruding at that instant exceeds ``alpha_total``. This is the
    trigger the ablation compares against.
    """
    z = NormalDist().inv_cdf(1.0 - alpha_total)
    scores = []
    for rk, est in zip(kinematics, estimates):
        P, V = rk.rel_pos, rk.rel_vel
        vv = float(V @ V)
        t_ca = 0.0 if vv < 1e-12 else min(max(-float(P @ V) / vv, 0.0), window)
        d_ca = norm3(P + V * t_ca)
        n_ca = (P + V * t_ca) / max(d_ca, 1e-9)
        sigma = los_sigma(uav.position_cov, est.position_cov, n_ca, max(t_ca, 1e-9), est.sigma_v_los)
        scores.append(R_sum + z * sigma - d_ca)
    return scores
