"""Safety filters with a scikit-learn style parameter interface.

Both filters expose their configuration through ``get_params``/``set_params``
so that sweeps can ``clone`` a base filter and change a single knob. ``fit``
validates the parameters and resets the per-obstacle state; a filter has to
be fitted before it is stepped.

Per control cycle the caller runs

    kin, decision = f.assess(uav, estimates, step)
    ...pick the nominal acceleration (may depend on ``decision``)...
    out = f.safe_acceleration(uav, estimates, a_nominal, decision, kin)

or :meth:`DRACBFFilter.step` when the nominal does not depend on the trigger.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_open_unit, check_positive, check_vector3
from .acbf import (ClearanceParams, HalfSpace, HorizonConfig, effective_clearance,
                   select_horizon, tightened_halfspace)
from .drcvar import (CvarConfig, TriggerDecision, closest_approach_scores, evaluate_trigger,
                     max_cvar_over_time, propagate_samples, violation_terms)
from .projection import ProjectionConfig, gauss_southwell_arrays, stack_constraints
from .qp import ClfTerm, Infeasible, QpProblem, clf_cbf_qp_step, hocbf_row
from .relkin import ObstacleEstimate, RelativeKinematics, UavState, los_sigma, relative_kinematics
from .risk import allocate_risk, cantelli_lambda
from .smd import ObstacleAccelerationEstimator, SmdGains

TRIGGERS = ("cvar", "gaussian", "none")


@dataclass(frozen=True)
class FilterOutput:
    acceleration: np.ndarray
    horizon: float
    alpha_total: float
    constraints: tuple
    max_violation: float
    infeasible: bool
    decision: TriggerDecision


class DRACBFFilter(BaseEstimator):
    """Acceleration-space safety filter with risk tightening and an early trigger.

    ``trigger`` selects the early-warning rule: ``"cvar"`` (distributionally
    robust CVaR over Monte Carlo predictions), ``"gaussian"`` (single-time
    chance constraint at closest approach) or ``"none"``.
    """

    def __init__(self, alpha_total=0.10, H_min=0.15, H_max=0.4, n_horizons=6,
                 omega=1.0, base_iters=12, a_max=6.0, v_max=10.0, j_max=30.0,
                 latency=0.02, uav_radius=0.15, smd_gamma=1.5, smd_L0=4.0,
                 smd_L1=3.0, smd_L2=2.0, a_floor=1.0, beta=0.05, tau=0.02,
                 epsilon=0.05, L_Z=1.0, n_samples=64, pred_horizon=None,
                 pred_dt=0.05, uav_decel=None, obs_decel=2.0, trigger="cvar",
                 random_state=0):
        self.alpha_total = alpha_total
        self.H_min = H_min
        self.H_max = H_max
        self.n_horizons = n_horizons
        self.omega = omega
        self.base_iters = base_iters
        self.a_max = a_max
        self.v_max = v_max
        self.j_max = j_max
        self.latency = latency
        self.uav_radius = uav_radius
        self.smd_gamma = smd_gamma
        self.smd_L0 = smd_L0
        self.smd_L1 = smd_L1
        self.smd_L2 = smd_L2
        self.a_floor = a_floor
        self.beta = beta
        self.tau = tau
        self.epsilon = epsilon
        self.L_Z = L_Z
        self.n_samples = n_samples
        self.pred_horizon = pred_horizon
        self.pred_dt = pred_dt
        self.uav_decel = uav_decel
        self.obs_decel = obs_decel
        self.trigger = trigger
        self.random_state = random_state

    # -- lifecycle -----------------------------------------------------------

    def fit(self, X=None, y=None):
        """Validate parameters and reset all per-obstacle state. ``X``/``y`` are ignored."""
        check_open_unit(self.alpha_total, "alpha_total")
        check_positive(self.uav_radius, "uav_radius")
        check_positive(self.a_floor, "a_floor", allow_zero=True)
        if self.trigger not in TRIGGERS:
            raise ValueError(f"trigger must be one of {TRIGGERS}, got {self.trigger!r}")
        self.horizon_ = HorizonConfig(float(self.H_min), float(self.H_max), int(self.n_horizons))
        self.projection_ = ProjectionConfig(float(self.omega), int(self.base_iters), float(self.a_max))
        self.smd_gains_ = SmdGains.from_levant(self.smd_gamma, self.smd_L0, self.smd_L1, self.smd_L2)
        self.cvar_ = CvarConfig(
            beta=float(self.beta), tau=float(self.tau), epsilon=float(self.epsilon), L_Z=float(self.L_Z),
            n_samples=int(self.n_samples),
            pred_horizon=float(self.H_max if self.pred_horizon is None else self.pred_horizon),
            pred_dt=float(self.pred_dt),
            uav_decel=float(self.a_max if self.uav_decel is None else self.uav_decel),
            obs_decel=float(self.obs_decel))
        # validates the limits; R_sum is replaced per obstacle
        ClearanceParams(2 * self.uav_radius, self.v_max, self.a_max, self.j_max, self.latency)
        self.reset()
        return self

    def reset(self):
        self.acc_estimators_ = {}
        self.n_infeasible_ = 0
        return self

    def _clearance(self, est: ObstacleEstimate) -> ClearanceParams:
        return ClearanceParams(self.uav_radius + est.radius, self.v_max, self.a_max, self.j_max, self.latency)

    # -- obstacle acceleration -----------------------------------------------

    def observe_velocity(self, obstacle_id: int, velocity, dt: float) -> float:
        """Feed one velocity measurement to the obstacle's differentiator; returns its envelope."""
        check_is_fitted(self, "acc_estimators_")
        est = self.acc_estimators_.get(obstacle_id)
        if est is None:
            est = self.acc_estimators_[obstacle_id] = ObstacleAccelerationEstimator(self.smd_gains_, self.a_floor)
        return est.update(velocity, dt)

    def acc_bound(self, obstacle_id: int) -> float:
        est = self.acc_estimators_.get(obstacle_id)
        return float(self.a_floor) if est is None else est.acc_bound

    def _acc_bound_for(self, est: ObstacleEstimate) -> float:
        if est.obstacle_id in self.acc_estimators_:
            return self.acc_estimators_[est.obstacle_id].acc_bound
        return max(float(self.a_floor), est.acc_bound)

    # -- early warning ----------------------------------------------------------

    def _rng(self, obstacle_id: int, step: int) -> np.random.Generator:
        seed = 0 if self.random_state is None else int(self.random_state)
        return np.random.default_rng([seed, int(obstacle_id), int(step)])

    def assess(self, uav: UavState, estimates: Sequence[ObstacleEstimate], step: int = 0):
        """Relative kinematics of every obstacle and the early-warning decision."""
        check_is_fitted(self, "acc_estimators_")
        kin = [relative_kinematics(uav, e) for e in estimates]
        if not estimates or self.trigger == "none":
            return kin, TriggerDecision(False, -np.inf)
        if self.trigger == "cvar":
            scores = []
            for e in estimates:
                samples = propagate_samples(e, uav, self.cvar_, self._rng(e.obstacle_id, step))
                Z = violation_terms(samples, self.uav_radius + e.radius, self.cvar_)
                scores.append(max_cvar_over_time(Z, self.cvar_))
        else:
            scores = [closest_approach_scores([k], [e], uav, self.uav_radius + e.radius,
                                              self.alpha_total, self.cvar_.pred_horizon)[0]
                      for k, e in zip(kin, estimates)]
        decision = evaluate_trigger(scores, kin, self.alpha_total, self.H_max, self.a_max,
                                    [e.velocity for e in estimates])
        return kin, decision

    # -- constraints and projection ----------------------------------------------

    def constraints(self, uav: UavState, estimates: Sequence[ObstacleEstimate],
                    kinematics: Sequence[RelativeKinematics], H: float, alpha_total: float) -> list[HalfSpace]:
        """Tightened half-space of every obstacle for horizon ``H``."""
        if not estimates:
            return []
        alphas = allocate_risk(kinematics, alpha_total)
        out = []
        for e, rk, a_i in zip(estimates, kinematics, alphas):
            R_eff = effective_clearance(self._clearance(e), H, self._acc_bound_for(e))
            sigma = los_sigma(uav.position_cov, e.position_cov, rk.los_unit, H, e.sigma_v_los)
            out.append(tightened_halfspace(rk, R_eff, H, cantelli_lambda(a_i), sigma))
        return out

    def _horizon_and_alpha(self, uav, estimates, kin, a_nom, decision):
        if decision.fired:
            return float(decision.H_override), float(decision.alpha_override)
        alpha = float(self.alpha_total)
        H = select_horizon(self.horizon_, lambda H: self.constraints(uav, estimates, kin, H, alpha),
                           a_nom, self.a_max, self.projection_)
        return H, alpha

    def safe_acceleration(self, uav: UavState, estimates: Sequence[ObstacleEstimate], a_nominal,
                          decision: Optional[TriggerDecision] = None,
                          kinematics: Optional[Sequence[RelativeKinematics]] = None, **kwargs) -> FilterOutput:
        """Project ``a_nominal`` onto the tightened half-spaces and the acceleration box."""
        check_is_fitted(self, "acc_estimators_")
        a_nom = check_vector3(a_nominal, "a_nominal")
        if kinematics is None:
            kinematics = [relative_kinematics(uav, e) for e in estimates]
        if decision is None:
            decision = TriggerDecision(False, -np.inf)
        H, alpha = self._horizon_and_alpha(uav, estimates, kinematics, a_nom, decision)
        cons = self.constraints(uav, estimates, kinematics, H, alpha)
        A, b = stack_constraints(cons)
        p = self.projection_
        tol = 1e-6 * 2.0 / (H * H)
        res = gauss_southwell_arrays(a_nom, A, b, p.omega, p.base_iters, p.a_max, tol)
        infeasible = res.max_violation > tol
        self.n_infeasible_ += int(infeasible)
        return FilterOutput(res.acceleration, H, alpha, tuple(cons), res.max_violation, infeasible, decision)

    def step(self, uav: UavState, estimates: Sequence[ObstacleEstimate], a_nominal, step: int = 0) -> FilterOutput:
        """Assess and filter in one call; a fired trigger replaces the nominal by its evasive command."""
        kin, decision = self.assess(uav, estimates, step)
        a_nom = decision.evasive_nominal if decision.fired else a_nominal
        return self.safe_acceleration(uav, estimates, a_nom, decision, kin)


class CBFQPFilter(DRACBFFilter):
    """Baseline: exact CLF-CBF-QP on the composed barrier instead of the projector.

    The barrier of each obstacle is ``h = |P|^2 - R^2`` with ``R`` the same
    effective clearance plus risk margin used by :class:`DRACBFFilter`, composed
    once with its derivative (``kappa = 1/H``) so that the acceleration
    appears. The optional CLF ``V = 0.5 |v - v_des|^2`` with
    ``v_des = -k_p (p - goal)`` is soft.
    """

    def __init__(self, alpha_total=0.10, H_min=0.15, H_max=0.4, n_horizons=6,
                 omega=1.0, base_iters=12, a_max=6.0, v_max=10.0, j_max=30.0,
                 latency=0.02, uav_radius=0.15, smd_gamma=1.5, smd_L0=4.0,
                 smd_L1=3.0, smd_L2=2.0, a_floor=1.0, beta=0.05, tau=0.02,
                 epsilon=0.05, L_Z=1.0, n_samples=64, pred_horizon=None,
                 pred_dt=0.05, uav_decel=None, obs_decel=2.0, trigger="cvar",
                 random_state=0, clf_kp=1.0, clf_rate=1.0, clf_weight=10.0):
        super().__init__(alpha_total, H_min, H_max, n_horizons, omega, base_iters, a_max, v_max,
                         j_max, latency, uav_radius, smd_gamma, smd_L0, smd_L1, smd_L2, a_floor,
                         beta, tau, epsilon, L_Z, n_samples, pred_horizon, pred_dt, uav_decel,
                         obs_decel, trigger, random_state)
        self.clf_kp = clf_kp
        self.clf_rate = clf_rate
        self.clf_weight = clf_weight

    def _clf(self, uav: UavState, goal) -> ClfTerm:
        v_des = -self.clf_kp * (uav.position - np.asarray(goal, dtype=np.float64))
        err = uav.velocity - v_des
        # d/dt v_des = -k_p v, so V_dot = err.(a + k_p v)
        return ClfTerm(err, float(err @ (self.clf_kp * uav.velocity)), float(self.clf_rate),
                       0.5 * float(err @ err), float(self.clf_weight))

    def cbf_rows(self, uav, estimates, kinematics, H, alpha_total):
        if not estimates:
            return np.zeros((0, 3)), np.zeros(0)
        alphas = allocate_risk(kinematics, alpha_total)
        A, b = [], []
        for e, rk, a_i in zip(estimates, kinematics, alphas):
            acc = self._acc_bound_for(e)
            R_eff = effective_clearance(self._clearance(e), H, acc)
            sigma = los_sigma(uav.position_cov, e.position_cov, rk.los_unit, H, e.sigma_v_los)
            row, bound = hocbf_row(rk.rel_pos, rk.rel_vel, acc, R_eff + cantelli_lambda(a_i) * sigma, 1.0 / H)
            A.append(row)
            b.append(bound)
        return np.array(A), np.array(b)

    def safe_acceleration(self, uav, estimates, a_nominal, decision=None, kinematics=None, goal=None):
        check_is_fitted(self, "acc_estimators_")
        a_nom = check_vector3(a_nominal, "a_nominal")
        if kinematics is None:
            kinematics = [relative_kinematics(uav, e) for e in estimates]
        if decision is None:
            decision = TriggerDecision(False, -np.inf)
        H = float(decision.H_override) if decision.fired else float(self.H_max)
        alpha = float(decision.alpha_override) if decision.fired else float(self.alpha_total)
        A, b = self.cbf_rows(uav, estimates, kinematics, H, alpha)
        clf = None if goal is None else self._clf(uav, goal)
        try:
            sol = clf_cbf_qp_step(QpProblem(a_nom, A, b, float(self.a_max), clf))
            a, viol, infeasible = sol.u_star, 0.0, False
        except Infeasible:
            p = self.projection_
            res = gauss_southwell_arrays(a_nom, A, b, p.omega, p.base_iters, p.a_max)
            a, viol, infeasible = res.acceleration, res.max_violation, True
        self.n_infeasible_ += int(infeasible)
        cons = tuple(HalfSpace(A[i], float(b[i]), kinematics[i].obstacle_id) for i in range(len(b)))
        return FilterOutput(np.asarray(a, dtype=np.float64), H, alpha, cons, viol, infeasible, decision)
