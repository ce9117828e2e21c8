"""Per-obstacle split of the risk budget and Cantelli tightening factors."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .relkin import RelativeKinematics

RISK_EPS = 1e-6


class EmptyObstacleSet(ValueError):
    pass


class InvalidAlpha(ValueError):
    pass


def allocate_risk(kinematics: Sequence[RelativeKinematics], alpha_total: float,
                  eps: float = RISK_EPS) -> np.ndarray:
    """Split ``alpha_total`` across obstacles by proximity and closing speed.

    Closer and faster-closing obstacles get a larger share. The shares always
    sum to ``alpha_total``.
    """
    if len(kinematics) == 0:
        raise EmptyObstacleSet("risk allocation needs at least one obstacle")
    if not 0.0 < alpha_total < 1.0:
        raise InvalidAlpha(f"alpha_total must lie in (0, 1), got {alpha_total}")
    if eps <= 0:
        raise ValueError("eps must be > 0")
    v_cl = np.array([k.closing_speed for k in kinematics], dtype=np.float64)
    d = np.array([k.range for k in kinematics], dtype=np.float64)
    r = v_cl / (v_cl.max() + eps)
    w = (1.0 + r) / np.maximum(d, 1e-3)
    return w / w.sum() * alpha_total


def cantelli_lambda(alpha_i: float) -> float:
    """One-sided Cantelli factor: ``P(X >= mu - lam*sigma) >= 1 - alpha``."""
    if not 0.0 < alpha_i < 1.0:
        raise InvalidAlpha(f"alpha must lie in (0, 1), got {alpha_i}")
    return math.sqrt((1.0 - alpha_i) / alpha_i)
