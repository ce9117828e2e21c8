import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dracbf.smd import ObstacleAccelerationEstimator, SmdGains, SmdState, smd_step, update_acc_bound

from oracles import smd_euler

G = SmdGains.from_levant()


def test_gain_mapping():
    assert G.l1 == pytest.approx(math.sqrt(1.5) * 4)
    assert G.l2 == pytest.approx(4.5)
    assert G.l3 == pytest.approx(3.0)
    with pytest.raises(ValueError):
        SmdGains(0.0, 1.0, 1.0)


def test_first_call_latches():
    s = smd_step(SmdState(), [1, 2, 3], 0.01, G)
    assert s.initialized
    np.testing.assert_array_equal(s.z0, [1, 2, 3])
    np.testing.assert_array_equal(s.z1, 0)


def test_constant_input_is_fixed_point():
    s = smd_step(SmdState(), [2, -1, 0.5], 0.01, G)
    for _ in range(50):
        s = smd_step(s, [2, -1, 0.5], 0.01, G)
    np.testing.assert_array_equal(s.z1, 0)
    np.testing.assert_array_equal(s.z0, [2, -1, 0.5])


def test_rejects_bad_dt():
    with pytest.raises(ValueError):
        smd_step(SmdState(), [0, 0, 0], 0.0, G)


def test_ramp_convergence():
    dt = 0.01
    s = SmdState()
    z1 = []
    for k in range(300):
        s = smd_step(s, [2.0 * k * dt, 0, 0], dt, G)
        z1.append(s.z1[0])
    z1 = np.array(z1)
    # within 5% after at most 1 s, and within 0.1 for the next 0.5 s and beyond
    assert np.all(np.abs(z1[100:] - 2.0) < 0.05 * 2.0)
    assert np.all(np.abs(z1[100:150] - 2.0) < 0.1)
    ref = smd_euler(lambda t: 2.0 * t, dt, 300, G.l1, G.l2, G.l3)
    np.testing.assert_allclose(z1, ref, atol=1e-12)


def test_sinusoid_tracking_with_matched_gamma():
    # the differentiator needs gamma at the Lipschitz scale of the derivative, (2*pi)^2 here
    g = SmdGains.from_levant(gamma=40.0)
    dt = 0.005
    s = SmdState()
    errs = []
    for k in range(int(6 / dt)):
        t = k * dt
        s = smd_step(s, [math.sin(2 * math.pi * t), 0, 0], dt, g)
        if t > 3.0:
            errs.append(abs(s.z1[0] - 2 * math.pi * math.cos(2 * math.pi * t)))
    assert max(errs) < 0.5 * 2 * math.pi


def test_bound_examples():
    s = SmdState(z1=np.array([1.5, 0, 0]), initialized=True)
    assert update_acc_bound(2.0, s) == 2.0
    s = SmdState(z1=np.array([3.2, 0, 0]), initialized=True)
    assert update_acc_bound(2.0, s) == pytest.approx(3.2)
    bound, trace = 0.0, []
    for z in [1, 4, 2, 3]:
        bound = update_acc_bound(bound, SmdState(z1=np.array([0, z, 0.0]), initialized=True))
        trace.append(bound)
    assert trace == [1, 4, 4, 4]
    with pytest.raises(ValueError):
        update_acc_bound(-1.0, s)


@settings(max_examples=40)
@given(st.lists(st.tuples(*[st.floats(-30, 30)] * 3), min_size=2, max_size=60))
def test_envelope_monotone(vs):
    est = ObstacleAccelerationEstimator(G, a_floor=1.0)
    prev = est.acc_bound
    for v in vs:
        cur = est.update(v, 0.01)
        assert cur >= prev
        assert np.all(np.isfinite(est.acceleration)) and np.all(np.isfinite(est.jerk))
        prev = cur
