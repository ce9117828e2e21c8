"""Acceleration-space safety filtering for UAV dynamic obstacle avoidance."""

from .acbf import (ClearanceParams, HalfSpace, HorizonConfig, barrier_residual, effective_clearance,
                   halfspace, select_horizon, tightened_halfspace)
from .drcvar import (CvarConfig, TriggerDecision, dr_cvar, dynamic_distance, evaluate_trigger,
                     propagate_samples, violation_terms)
from .filters import CBFQPFilter, DRACBFFilter, FilterOutput
from .projection import ProjectionConfig, gauss_southwell_project, max_violation
from .qp import ClfTerm, Infeasible, QpProblem, QpSolution, clf_cbf_qp_step, solve_projection_qp
from .relkin import (DegenerateRange, NonPsdCovariance, ObstacleEstimate, RelativeKinematics, UavState,
                     los_sigma, relative_kinematics)
from .risk import EmptyObstacleSet, InvalidAlpha, allocate_risk, cantelli_lambda
from .smd import SmdGains, SmdState, smd_step, update_acc_bound

__version__ = "0.1.0"
