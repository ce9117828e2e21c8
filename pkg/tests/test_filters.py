import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dracbf.filters import CBFQPFilter, DRACBFFilter
from dracbf.relkin import ObstacleEstimate, UavState

UAV = UavState([0, 0, 0], [2, 0, 0])


def _threat(d=3.0, v=8.0):
    return ObstacleEstimate([d, 0, 0], [-v, 0, 0], position_cov=0.01 * np.eye(3), sigma_v_los=0.1)


def test_params_round_trip_and_clone():
    f = DRACBFFilter(alpha_total=0.2, H_max=0.5)
    p = f.get_params()
    assert p["alpha_total"] == 0.2 and p["H_max"] == 0.5 and p["trigger"] == "cvar"
    g = clone(f)
    assert g.get_params() == p and g is not f
    assert f.set_params(beta=0.1) is f and f.beta == 0.1
    assert "clf_weight" in CBFQPFilter().get_params()


def test_fit_validates():
    for kw in ({"alpha_total": 1.5}, {"trigger": "magic"}, {"H_min": 0.5, "H_max": 0.4}, {"omega": 2.0},
               {"smd_gamma": 0.0}, {"beta": 0.0}):
        with pytest.raises(ValueError):
            DRACBFFilter(**kw).fit()


def test_unfitted_use_is_rejected():
    with pytest.raises(NotFittedError):
        DRACBFFilter().safe_acceleration(UAV, [], [0, 0, 0])


def test_fit_resets_state():
    f = DRACBFFilter().fit()
    for k in range(5):
        f.observe_velocity(0, [0, 0, k * 0.5], 0.01)
    assert f.acc_bound(0) > 0 and f.acc_estimators_
    f.fit()
    assert f.acc_estimators_ == {} and f.n_infeasible_ == 0


def test_no_obstacles_pass_nominal_through():
    out = DRACBFFilter().fit().step(UAV, [], [1, 2, 3])
    np.testing.assert_array_equal(out.acceleration, [1, 2, 3])
    assert not out.decision.fired


def test_threat_fires_and_output_respects_box():
    f = DRACBFFilter().fit()
    out = f.step(UAV, [_threat()], [6, 0, 0])
    assert out.decision.fired
    assert out.alpha_total == pytest.approx(0.05)
    assert np.all(np.abs(out.acceleration) <= 6.0)
    assert out.acceleration[0] < 6.0


def test_same_seed_same_output():
    a = DRACBFFilter(random_state=3).fit().step(UAV, [_threat(6.0)], [2, 0, 0], step=7)
    b = DRACBFFilter(random_state=3).fit().step(UAV, [_threat(6.0)], [2, 0, 0], step=7)
    np.testing.assert_array_equal(a.acceleration, b.acceleration)
    assert a.decision.worst_cvar == b.decision.worst_cvar


def test_gaussian_trigger_variant():
    out = DRACBFFilter(trigger="gaussian").fit().step(UAV, [_threat()], [0, 0, 0])
    assert out.decision.fired
    quiet = DRACBFFilter(trigger="none").fit().step(UAV, [_threat()], [0, 0, 0])
    assert not quiet.decision.fired


def test_cbf_qp_baseline_keeps_fixed_horizon():
    f = CBFQPFilter().fit()
    out = f.safe_acceleration(UAV, [_threat(10.0, 2.0)], [1, 0, 0])
    assert out.horizon == 0.4
    assert np.all(np.abs(out.acceleration) <= 6.0)
    for c in out.constraints:
        assert c.residual(out.acceleration) <= 1e-8
