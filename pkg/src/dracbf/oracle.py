"""Cross-checks of the fixed-budget projection against exact solvers.

Random instances are small polytopes ``{a : A a <= b} ∩ [-a_max, a_max]^3``
with a strictly interior point. The Gauss-Southwell result is compared with
the active-set QP, and the QP itself with brute force over a dense grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .projection import gauss_southwell_arrays
from .qp import QpProblem, solve_projection_qp


@dataclass(frozen=True)
class Instance:
    a0: np.ndarray
    A: np.ndarray
    b: np.ndarray
    a_max: float
    center: np.ndarray   # a point with slack >= margin on every row and box face
    margin: float


def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def random_instance(rng: np.random.Generator, a_max: float = 6.0, max_rows: int = 4,
                    min_angle_deg: float = 30.0, margin_frac: float = 0.05) -> Instance:
    """Draw a feasible instance with 1..``max_rows`` half-spaces.

    Normals are unit vectors pairwise at least ``min_angle_deg`` apart. An
    interior centre is drawn inside the shrunken box and every bound leaves a
    positive slack at that centre, so the feasible set has an interior ball
    of radius ``margin_frac * a_max``. The nominal point ``a0`` is uniform in
    the acceleration box.
    """
    m = int(rng.integers(1, max_rows + 1))
    cos_lim = math.cos(math.radians(min_angle_deg))
    normals: list[np.ndarray] = []
    while len(normals) < m:
        n = _unit(rng)
        if all(float(n @ q) <= cos_lim for q in normals):
            normals.append(n)
    A = np.array(normals)
    margin = margin_frac * a_max
    center = rng.uniform(-(a_max - margin), a_max - margin, size=3)
    slack = margin + rng.uniform(0.0, a_max, size=m)
    b = A @ center + slack
    a0 = rng.uniform(-a_max, a_max, size=3)
    return Instance(a0, A, b, float(a_max), center, margin)


@dataclass(frozen=True)
class Comparison:
    violation: float     # GS residual max_i (A_i a - b_i)_+
    distance: float      # ||a_GS - a_QP||
    a_gs: np.ndarray
    a_qp: np.ndarray


def compare_gs_qp(inst: Instance, iters: int = 12, omega: float = 1.0) -> Comparison:
    order = np.arange(inst.A.shape[0])
    res = gauss_southwell_arrays(inst.a0, inst.A[order], inst.b[order], omega, iters, inst.a_max)
    qp = solve_projection_qp(QpProblem(inst.a0, inst.A, inst.b, inst.a_max))
    return Comparison(res.max_violation, float(np.linalg.norm(res.acceleration - qp.u_star)),
                      res.acceleration, qp.u_star)


def grid_search(a0, A, b, a_max: float, spacing: float = 0.01, x=None):
    """Brute force over a regular grid on the box.

    Returns the nearest feasible grid point to ``a0`` and, when a candidate
    ``x`` is given, ``max_q (a0 - x) . (q - x)`` over feasible grid points
    ``q``. A true projection makes that maximum non-positive.
    """
    a0 = np.asarray(a0, dtype=np.float64)
    n = int(round(2 * a_max / spacing)) + 1
    axis = np.linspace(-a_max, a_max, n)
    Y, Z = np.meshgrid(axis, axis, indexing="ij")
    Y, Z = Y.ravel(), Z.ravel()
    best, best_d2, vi = None, math.inf, -math.inf
    g = None if x is None else a0 - np.asarray(x, dtype=np.float64)
    for xv in axis:
        # rows evaluated slice by slice to keep memory flat
        r = A[:, 0:1] * xv + A[:, 1:2] * Y + A[:, 2:3] * Z - b[:, None]
        ok = np.all(r <= 0.0, axis=0)
        if not ok.any():
            continue
        Yo, Zo = Y[ok], Z[ok]
        d2 = (xv - a0[0]) ** 2 + (Yo - a0[1]) ** 2 + (Zo - a0[2]) ** 2
        j = int(np.argmin(d2))
        if d2[j] < best_d2:
            best_d2 = float(d2[j])
            best = np.array([xv, Yo[j], Zo[j]])
        if g is not None:
            vi = max(vi, float(np.max(g[0] * (xv - x[0]) + g[1] * (Yo - x[1]) + g[2] * (Zo - x[2]))))
    if best is None:
        raise ValueError("no feasible grid point")
    return best, vi


@dataclass
class OracleReport:
    n_instances: int
    n_violation_fail: int
    n_distance_fail: int
    worst_violation: float
    worst_distance: float
    n_grid: int = 0
    n_grid_fail: int = 0
    worst_grid_gap: float = 0.0

    @property
    def passed(self) -> bool:
        return self.n_violation_fail == 0 and self.n_distance_fail == 0 and self.n_grid_fail == 0

    def lines(self) -> list[str]:
        return [
            f"GS vs QP: {self.n_instances} instances, violation failures {self.n_violation_fail} "
            f"(worst {self.worst_violation:.3g}), distance failures {self.n_distance_fail} "
            f"(worst {self.worst_distance:.3g})",
            f"QP vs grid: {self.n_grid} instances, failures {self.n_grid_fail} "
            f"(largest QP-to-grid distance {self.worst_grid_gap:.3g})",
        ]


def run_oracle_suite(n_instances: int = 1000, n_grid: int = 100, seed: int = 0, a_max: float = 6.0,
                     viol_tol: float = 1e-3, dist_frac: float = 0.05, grid_a_max: float = 1.0,
                     grid_spacing: float = 0.01) -> OracleReport:
    """GS-vs-QP on ``n_instances`` draws and QP-vs-grid on ``n_grid`` draws.

    The grid check passes when the QP point is feasible, no farther from
    ``a0`` than the nearest feasible grid point, and satisfies the projection
    inequality ``(a0 - x) . (q - x) <= 0`` at every feasible grid point.
    """
    rng = np.random.default_rng(seed)
    viol_fail = dist_fail = 0
    worst_v = worst_d = 0.0
    for _ in range(n_instances):
        c = compare_gs_qp(random_instance(rng, a_max))
        worst_v, worst_d = max(worst_v, c.violation), max(worst_d, c.distance)
        viol_fail += c.violation > viol_tol
        dist_fail += c.distance > dist_frac * a_max
    report = OracleReport(n_instances, viol_fail, dist_fail, worst_v, worst_d, n_grid)
    for _ in range(n_grid):
        inst = random_instance(rng, grid_a_max)
        qp = solve_projection_qp(QpProblem(inst.a0, inst.A, inst.b, inst.a_max)).u_star
        g, vi = grid_search(inst.a0, inst.A, inst.b, inst.a_max, grid_spacing, qp)
        feasible = np.all(inst.A @ qp - inst.b <= 1e-9) and np.all(np.abs(qp) <= inst.a_max + 1e-9)
        no_worse = np.linalg.norm(qp - inst.a0) <= np.linalg.norm(g - inst.a0) + 1e-9
        gap = float(np.linalg.norm(qp - g))
        report.worst_grid_gap = max(report.worst_grid_gap, gap)
        report.n_grid_fail += not (feasible and no_worse and vi <= 1e-9)
    return report
