"""Exact small-QP solver by active-set enumeration, and the CLF-CBF-QP baseline.

The problems here are tiny (3 acceleration components plus an optional CLF
slack, a handful of half-spaces and six box faces), so enumerating every
candidate active set and solving each equality-constrained least-distance
problem in closed form is both exact and fast enough.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._validation import check_vector3, norm3


class Infeasible(RuntimeError):
    """No candidate satisfies every hard constraint."""


@dataclass(frozen=True)
class ClfTerm:
    """Soft CLF row ``L_fV + L_gV u + c V <= delta`` with cost ``W delta^2``."""

    L_gV: np.ndarray
    L_fV: float
    c: float
    V: float
    W: float

    def __post_init__(self):
        if not (self.W > 0 and self.c > 0):
            raise ValueError("CLF term needs W > 0 and c > 0")
        object.__setattr__(self, "L_gV", check_vector3(self.L_gV, "L_gV"))


@dataclass(frozen=True)
class QpProblem:
    u_nom: np.ndarray
    A: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    a_max: float = 6.0
    clf: Optional[ClfTerm] = None

    def __post_init__(self):
        object.__setattr__(self, "u_nom", check_vector3(self.u_nom, "u_nom"))
        A = np.asarray(self.A, dtype=np.float64).reshape(-1, 3)
        b = np.asarray(self.b, dtype=np.float64).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError("A and b disagree on the number of rows")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_halfspaces(cls, u_nom, halfspaces: Sequence, a_max: float, clf: Optional[ClfTerm] = None):
        A = np.array([h.normal for h in halfspaces], dtype=np.float64).reshape(-1, 3)
        b = np.array([h.bound for h in halfspaces], dtype=np.float64)
        return cls(u_nom, A, b, a_max, clf)


@dataclass(frozen=True)
class QpSolution:
    u_star: np.ndarray
    delta_star: float
    objective: float
    # indices into the stacked rows: half-spaces first, then box faces
    # x+, x-, y+, y-, z+, z-, then the CLF row and delta >= 0 when present
    active_set: tuple


def _box_rows(dim_u: int, dim: int, a_max: float):
    G, h = [], []
    for j in range(dim_u):
        for sgn in (1.0, -1.0):
            row = np.zeros(dim)
            row[j] = sgn
            G.append(row)
            h.append(a_max)
    return G, h


def enumerate_least_distance(x0: np.ndarray, G: np.ndarray, h: np.ndarray,
                             max_active: int, tol: float = 1e-9):
    """Exact minimiser of ``0.5 ||x - x0||^2`` subject to ``G x <= h``.

    Every subset of at most ``max_active`` rows with independent normals is
    treated as an equality system; its closed-form projection is kept if it
    satisfies all rows, and the nearest such point wins.
    Returns ``(x, active_rows)`` or raises Infeasible.
    """
    m = G.shape[0]
    scale = 1.0 + float(np.max(np.abs(h))) if m else 1.0
    best, best_f, best_set = None, math.inf, ()
    if m == 0 or np.all(G @ x0 - h <= tol * scale):
        return x0.copy(), ()
    for k in range(1, min(max_active, m) + 1):
        for S in itertools.combinations(range(m), k):
            Gs, hs = G[S, :], h[list(S)]
            M = Gs @ Gs.T
            if np.linalg.matrix_rank(M, tol=1e-10) < k:
                continue
            mu = np.linalg.solve(M, Gs @ x0 - hs)
            x = x0 - Gs.T @ mu
            if np.any(G @ x - h > tol * scale):
                continue
            f = 0.5 * float((x - x0) @ (x - x0))
            if f < best_f - 1e-15:
                best, best_f, best_set = x, f, S
    if best is None:
        raise Infeasible("no active-set candidate satisfies all constraints")
    return best, tuple(best_set)


def solve_projection_qp(p: QpProblem) -> QpSolution:
    """Euclidean projection of ``u_nom`` onto the half-spaces intersected with the box."""
    rows_G, rows_h = [r for r in p.A], list(p.b)
    bG, bh = _box_rows(3, 3, p.a_max)
    G = np.array(rows_G + bG, dtype=np.float64).reshape(-1, 3)
    h = np.array(rows_h + bh, dtype=np.float64)
    u, active = enumerate_least_distance(p.u_nom, G, h, max_active=3)
    f = 0.5 * float((u - p.u_nom) @ (u - p.u_nom))
    return QpSolution(u, 0.0, f, active)


def clf_cbf_qp_step(p: QpProblem) -> QpSolution:
    """Solve ``min 0.5||u - u_nom||^2 + W delta^2`` with a soft CLF row.

    The slack is rescaled to ``s = sqrt(2W) delta`` so the whole problem is a
    least-distance problem in (u, s) and the same enumeration applies.
    """
    if p.clf is None:
        return solve_projection_qp(p)
    clf = p.clf
    k = math.sqrt(2.0 * clf.W)
    rows_G = [np.append(r, 0.0) for r in p.A]
    rows_h = list(p.b)
    bG, bh = _box_rows(3, 4, p.a_max)
    # L_gV u - s/k <= -L_fV - c V
    clf_row = np.append(clf.L_gV, -1.0 / k)
    G = np.array(rows_G + bG + [clf_row, np.array([0.0, 0.0, 0.0, -1.0])], dtype=np.float64)
    h = np.array(rows_h + bh + [-clf.L_fV - clf.c * clf.V, 0.0], dtype=np.float64)
    x0 = np.append(p.u_nom, 0.0)
    x, active = enumerate_least_distance(x0, G, h, max_active=4)
    u, delta = x[:3], max(0.0, x[3] / k)
    f = 0.5 * float((u - p.u_nom) @ (u - p.u_nom)) + clf.W * delta * delta
    return QpSolution(u, delta, f, active)


def cbf_halfspace_row(L_fh: float, L_gh, alpha_h: float) -> tuple[np.ndarray, float]:
    """Rewrite ``L_fh + L_gh u + alpha(h) >= 0`` as a unit-normal row ``A u <= b``."""
    g = check_vector3(L_gh, "L_gh")
    norm = norm3(g)
    if norm == 0.0:
        raise ValueError("L_gh must be non-zero for the row to constrain u")
    return -g / norm, (L_fh + alpha_h) / norm


def hocbf_row(P, V, a_i_bound: float, R: float, kappa: float) -> tuple[np.ndarray, float]:
    """Acceleration row for the composed barrier ``psi = h_dot + kappa h``.

    With ``h = |P|^2 - R^2`` and relative acceleration ``a_i - a_e``, enforcing
    ``psi_dot + kappa psi >= 0`` under the worst obstacle acceleration of
    magnitude ``a_i_bound`` is linear in the UAV acceleration ``a_e``.
    """
    P = np.asarray(P, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    d = norm3(P)
    h = d * d - R * R
    h_dot = 2.0 * float(P @ V)
    # psi_dot = 2 V.V + 2 P.(a_i - a_e) + kappa h_dot
    L_fh = 2.0 * float(V @ V) - 2.0 * d * a_i_bound + 2.0 * kappa * h_dot
    L_gh = -2.0 * P
    return cbf_halfspace_row(L_fh, L_gh, kappa * kappa * h)
