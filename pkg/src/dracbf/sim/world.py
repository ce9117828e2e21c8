"""Double-integrator UAV, straight-line obstacles and noisy position sensing."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .._validation import norm3
from .scenario import Limits, ObstacleSpec


class LatencyBuffer:
    """Delay line: a command pushed at step k is released at step k + depth."""

    def __init__(self, latency: float, control_rate: float, initial=None):
        self.depth = int(math.ceil(latency * control_rate - 1e-9))
        init = np.zeros(3) if initial is None else np.asarray(initial, dtype=np.float64)
        self._queue = deque([init.copy() for _ in range(self.depth)])

    def push(self, command) -> np.ndarray:
        """Enqueue ``command`` and return the command that takes effect now."""
        self._queue.append(np.asarray(command, dtype=np.float64).copy())
        return self._queue.popleft()


@dataclass
class World:
    t: float
    uav_pos: np.ndarray
    uav_vel: np.ndarray
    uav_acc: np.ndarray
    obs_pos: np.ndarray      # (N, 3)
    obs_vel: np.ndarray      # (N, 3)
    obs_radius: np.ndarray   # (N,)
    limits: Limits = field(default_factory=Limits)
    step_index: int = 0

    @classmethod
    def create(cls, uav_start, obstacles: list[ObstacleSpec], limits: Limits) -> "World":
        n = len(obstacles)
        return cls(
            0.0,
            np.asarray(uav_start, dtype=np.float64).copy(),
            np.zeros(3),
            np.zeros(3),
            np.array([o.start for o in obstacles], dtype=np.float64).reshape(n, 3),
            np.array([o.velocity for o in obstacles], dtype=np.float64).reshape(n, 3),
            np.array([o.radius for o in obstacles], dtype=np.float64),
            limits,
        )

    def separations(self) -> np.ndarray:
        return np.linalg.norm(self.obs_pos - self.uav_pos, axis=1)


def step_world(world: World, applied_acc, dt: float) -> World:
    """Advance the world by ``dt`` in place and return it.

    The UAV acceleration slews towards ``applied_acc`` at no more than
    ``j_max`` per axis and is clamped to ``a_max`` per axis; velocity is
    integrated (trapezoidal position update) and norm-clamped to ``v_max``.
    """
    lim = world.limits
    target = np.clip(np.asarray(applied_acc, dtype=np.float64), -lim.a_max, lim.a_max)
    step = lim.j_max * dt
    acc = world.uav_acc + np.clip(target - world.uav_acc, -step, step)
    acc = np.clip(acc, -lim.a_max, lim.a_max)
    v_new = world.uav_vel + acc * dt
    speed = norm3(v_new)
    if speed > lim.v_max:
        v_new *= lim.v_max / speed
    world.uav_pos = world.uav_pos + 0.5 * (world.uav_vel + v_new) * dt
    world.uav_vel = v_new
    world.uav_acc = acc
    world.obs_pos = world.obs_pos + world.obs_vel * dt
    world.t += dt
    world.step_index += 1
    return world


def measure(world: World, rng: np.random.Generator, noise_std: float) -> np.ndarray:
    """Noisy obstacle positions, shape (N, 3)."""
    if noise_std <= 0:
        return world.obs_pos.copy()
    return world.obs_pos + rng.normal(0.0, noise_std, size=world.obs_pos.shape)
