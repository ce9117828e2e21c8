"""Sliding-mode differentiator for obstacle acceleration and its running envelope."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_vector3, norm3


@dataclass(frozen=True)
class SmdGains:
    l1: float
    l2: float
    l3: float
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("l1", "l2", "l3", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def from_levant(cls, gamma: float = 1.5, L0: float = 4.0, L1: float = 3.0, L2: float = 2.0) -> "SmdGains":
        """Map a (gamma, L0, L1, L2) tuple onto the three differentiator gains.

        ``gamma`` plays the role of the Lipschitz estimate: the square-root
        channel scales with ``gamma**0.5`` and the two sign channels with
        ``gamma``.
        """
        return cls(l1=math.sqrt(gamma) * L0, l2=gamma * L1, l3=gamma * L2, gamma=gamma)


@dataclass
class SmdState:
    z0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    z1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    z2: np.ndarray = field(default_factory=lambda: np.zeros(3))
    initialized: bool = False

    def copy(self) -> "SmdState":
        return SmdState(self.z0.copy(), self.z1.copy(), self.z2.copy(), self.initialized)


def smd_step(state: SmdState, v_meas, dt: float, gains: SmdGains) -> SmdState:
    """One explicit-Euler step of the differentiator, applied per axis.

    The first call only latches ``z0`` to the measurement. ``np.sign(0) == 0``
    so a converged state is an exact fixed point.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    v = check_vector3(v_meas, "v_meas")
    if not state.initialized:
        return SmdState(v.copy(), np.zeros(3), np.zeros(3), True)
    e = state.z0 - v
    s = np.sign(e)
    z0_dot = -gains.l1 * np.sqrt(np.abs(e)) * s + state.z1
    z1_dot = -gains.l2 * s
    z2_dot = -gains.l3 * np.sign(state.z2 - z1_dot)
    return SmdState(state.z0 + dt * z0_dot, state.z1 + dt * z1_dot, state.z2 + dt * z2_dot, True)


def update_acc_bound(current_bound: float, state: SmdState) -> float:
    if current_bound < 0:
        raise ValueError("current_bound must be >= 0")
    return max(float(current_bound), norm3(state.z1))


class ObstacleAccelerationEstimator:
    """Per-obstacle differentiator plus its monotone acceleration envelope."""

    def __init__(self, gains: SmdGains, a_floor: float = 1.0):
        self.gains = gains
        self.state = SmdState()
        self.acc_bound = float(a_floor)

    def update(self, v_meas, dt: float) -> float:
        self.state = smd_step(self.state, v_meas, dt, self.gains)
        self.acc_bound = update_acc_bound(self.acc_bound, self.state)
        return self.acc_bound

    @property
    def acceleration(self) -> np.ndarray:
        return self.state.z1

    @property
    def jerk(self) -> np.ndarray:
        return self.state.z2
