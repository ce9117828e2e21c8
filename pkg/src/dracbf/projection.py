"""Fixed-budget Gauss-Southwell projection onto half-spaces and the acceleration box."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_vector3


@dataclass(frozen=True)
class ProjectionConfig:
    omega: float = 1.0
    base_iters: int = 12
    a_max: float = 6.0

    def __post_init__(self):
        if not 0.0 < self.omega <= 1.0:
            raise ValueError(f"omega must lie in (0, 1], got {self.omega}")
        if int(self.base_iters) < 1:
            raise ValueError(f"base_iters must be >= 1, got {self.base_iters}")
        if not self.a_max > 0:
            raise ValueError(f"a_max must be > 0, got {self.a_max}")


@dataclass(frozen=True)
class ProjectionResult:
    acceleration: np.ndarray
    max_violation: float
    # first iteration (1-based) whose iterate met the tolerance, 0 if it never did
    settled_at: int = 0

    def __iter__(self):
        # unpack as (acceleration, max_violation)
        yield self.acceleration
        yield self.max_violation


def stack_constraints(constraints) -> tuple[np.ndarray, np.ndarray]:
    """Normals as an (m, 3) array and bounds as an (m,) array, ordered by obstacle_id."""
    if len(constraints) == 0:
        return np.zeros((0, 3)), np.zeros(0)
    ordered = sorted(constraints, key=lambda c: c.obstacle_id)
    A = np.array([c.normal for c in ordered], dtype=np.float64)
    b = np.array([c.bound for c in ordered], dtype=np.float64)
    return A, b


def max_violation(a, constraints) -> float:
    """Largest signed residual ``A_i a - b_i``; ``-inf`` for no constraints."""
    if len(constraints) == 0:
        return -np.inf
    A, b = stack_constraints(constraints)
    return float(np.max(A @ np.asarray(a, dtype=np.float64) - b))


def most_violated(a, constraints) -> tuple[int, float]:
    """(index into ``constraints`` sorted by obstacle_id, residual) of the worst row."""
    A, b = stack_constraints(constraints)
    if A.shape[0] == 0:
        raise ValueError("no constraints")
    r = A @ np.asarray(a, dtype=np.float64) - b
    # np.argmax returns the first maximiser, i.e. the lowest obstacle_id on ties
    i = int(np.argmax(r))
    return i, float(r[i])


def gauss_southwell_arrays(a0: np.ndarray, A: np.ndarray, b: np.ndarray, omega: float,
                           iters: int, a_max: float, tol: float = 0.0) -> ProjectionResult:
    """Array form of :func:`gauss_southwell_project`; rows must be pre-ordered."""
    x, y, z = (float(v) for v in a0)
    if A.shape[0] == 0:
        return ProjectionResult(np.clip(np.array([x, y, z]), -a_max, a_max), 0.0, 1)
    # plain floats: for 3-vectors and a handful of rows this beats numpy dispatch
    rows = [(r[0], r[1], r[2], r[0] * r[0] + r[1] * r[1] + r[2] * r[2], bi)
            for r, bi in zip(A.tolist(), b.tolist())]
    lo = -a_max
    settled = 0
    for it in range(iters):
        worst, wr = -math.inf, None
        for r in rows:
            v = r[0] * x + r[1] * y + r[2] * z - r[4]
            if v > worst:  # strict: the first (lowest id) row wins ties
                worst, wr = v, r
        if worst > 0.0:
            s = omega * worst / wr[3]
            x, y, z = x - s * wr[0], y - s * wr[1], z - s * wr[2]
        x = lo if x < lo else a_max if x > a_max else x
        y = lo if y < lo else a_max if y > a_max else y
        z = lo if z < lo else a_max if z > a_max else z
        if not settled:
            if max(r[0] * x + r[1] * y + r[2] * z - r[4] for r in rows) <= tol:
                settled = it + 1
    viol = max(r[0] * x + r[1] * y + r[2] * z - r[4] for r in rows)
    return ProjectionResult(np.array([x, y, z]), max(0.0, viol), settled)


def gauss_southwell_project(a0, constraints: Sequence, cfg: ProjectionConfig = ProjectionConfig(),
                            tol: float = 0.0) -> ProjectionResult:
    """Project ``a0`` towards ``{a : A_i a <= b_i} ∩ box`` with a fixed iteration budget.

    Every iteration corrects the single most violated half-space (relaxed by
    ``omega``) and then clamps each component to ``[-a_max, a_max]``. The loop
    always runs ``cfg.base_iters`` times so the cost does not depend on which
    constraints are active. Returns the final iterate and its remaining
    violation ``max_i (A_i a - b_i)_+``.
    """
    a0 = check_vector3(a0, "a0")
    A, b = stack_constraints(constraints)
    return gauss_southwell_arrays(a0, A, b, cfg.omega, int(cfg.base_iters), cfg.a_max, tol)
