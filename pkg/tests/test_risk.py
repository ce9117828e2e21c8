import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dracbf.relkin import ObstacleEstimate, UavState, relative_kinematics
from dracbf.risk import EmptyObstacleSet, InvalidAlpha, allocate_risk, cantelli_lambda

from oracles import risk_weights


def _kin(pairs):
    uav = UavState([0, 0, 0], [0, 0, 0])
    return [relative_kinematics(uav, ObstacleEstimate([d, 0, 0], [-v, 0, 0], obstacle_id=i))
            for i, (d, v) in enumerate(pairs)]


def test_symmetric_split():
    np.testing.assert_allclose(allocate_risk(_kin([(8, 3), (8, 3)]), 0.10), [0.05, 0.05])


def test_weighted_split_matches_oracle():
    got = allocate_risk(_kin([(5, 10), (10, 5)]), 0.10, eps=1e-12)
    np.testing.assert_allclose(got, [0.0727272727, 0.0272727273], atol=1e-9)
    np.testing.assert_allclose(got, risk_weights([5, 10], [10, 5], 0.10, eps=1e-12), rtol=1e-12)


def test_single_obstacle_takes_everything():
    assert allocate_risk(_kin([(3, 1)]), 0.1)[0] == 0.1


def test_errors():
    with pytest.raises(EmptyObstacleSet):
        allocate_risk([], 0.1)
    with pytest.raises(InvalidAlpha):
        allocate_risk(_kin([(3, 1)]), 1.0)
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(InvalidAlpha):
            cantelli_lambda(bad)


def test_cantelli_examples():
    assert cantelli_lambda(0.5) == 1.0
    assert cantelli_lambda(0.1) == 3.0
    assert cantelli_lambda(0.05) == pytest.approx(math.sqrt(19), abs=1e-12)
    assert cantelli_lambda(0.05) == pytest.approx(4.3589, abs=1e-4)


def test_all_stationary_is_inverse_distance():
    got = allocate_risk(_kin([(2, 0), (4, 0)]), 0.09)
    np.testing.assert_allclose(got, [0.06, 0.03])


pair = st.tuples(st.floats(0.01, 100), st.floats(0.0, 30))


@given(st.lists(pair, min_size=1, max_size=8), st.floats(0.001, 0.999))
def test_budget_conservation(pairs, alpha):
    a = allocate_risk(_kin(pairs), alpha)
    assert a.sum() == pytest.approx(alpha, abs=1e-9)
    assert np.all(a > 0)


@settings(max_examples=60)
@given(pair, st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0.01, 0.99))
def test_priority_ordering(p, dd, dv, alpha):
    d, v = p
    close_fast, far_slow = (d, v + dv), (d + dd, v)
    a = allocate_risk(_kin([close_fast, far_slow]), alpha)
    assert a[0] > a[1]
    assert cantelli_lambda(a[0]) < cantelli_lambda(a[1])


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([0.05, 0.1, 0.5]), st.sampled_from(["gauss", "uniform", "t4"]), st.integers(0, 2 ** 31))
def test_cantelli_coverage_small(alpha, dist, seed):
    rng = np.random.default_rng(seed)
    n = 20000
    if dist == "gauss":
        e = rng.standard_normal(n)
    elif dist == "uniform":
        e = rng.uniform(-math.sqrt(3), math.sqrt(3), n)
    else:
        e = rng.standard_t(4, n) / math.sqrt(2.0)
    # unit-variance error: d_true = d_pred + e, covered when e >= -lambda
    cover = np.mean(e >= -cantelli_lambda(alpha))
    stderr = math.sqrt(alpha * (1 - alpha) / n)
    assert cover >= 1 - alpha - 3 * stderr
