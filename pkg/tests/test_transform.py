import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bbw.errors import ShapeError
from bbw.knots import KnotHierarchy
from bbw.smooth import Cosine, Power, Sine, SmoothFamily
from bbw.transform import (
    CoefficientPyramid,
    OpCounter,
    TransformPlan,
    analyze_function,
    forward,
    forward_step,
    inverse,
    inverse_step,
)

from conftest import FIG_KNOTS, cubic_family, trig_family

_PLANS = {}


def plan_for(m, seed, n=5, levels=3):
    key = (m, seed, n, levels)
    if key not in _PLANS:
        hier = KnotHierarchy.random(np.random.default_rng(seed), n, levels)
        _PLANS[key] = TransformPlan(SmoothFamily.powers(m), hier)
    return _PLANS[key]


@given(st.integers(2, 5), st.integers(0, 3), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_round_trip_property(m, seed, data_seed):
    plan = plan_for(m, seed)
    s = np.random.default_rng(data_seed).standard_normal(plan.size(plan.depth))
    assert np.max(np.abs(inverse(plan, forward(plan, s)) - s)) < 1e-9


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_single_step_matches_dense_solve(m, rng):
    plan = plan_for(m, 7, 4, 1)
    lv = plan.levels[0]
    M = np.hstack([lv.H.toarray(), lv.detail_matrix()])
    s = rng.standard_normal(lv.n_fine)
    ref = np.linalg.solve(M, s)
    sc, d = forward_step(plan, 0, s)
    np.testing.assert_allclose(np.r_[sc, d], ref, atol=1e-10)
    c, dd = rng.standard_normal(lv.n_coarse), rng.standard_normal(lv.n_detail)
    np.testing.assert_allclose(inverse_step(plan, 0, c, dd), M @ np.r_[c, dd], atol=1e-12)
    s2, d2 = forward_step(plan, 0, inverse_step(plan, 0, c, dd))
    np.testing.assert_allclose(np.r_[s2, d2], np.r_[c, dd], atol=1e-10)


def test_constant_input_has_no_details():
    plan = plan_for(4, 1)
    pyr = forward(plan, np.ones(plan.size(3)))
    np.testing.assert_allclose(pyr.coarse, 1.0, atol=1e-12)
    assert max(np.max(np.abs(d)) for d in pyr.details) < 1e-12
    assert pyr.total_size == plan.size(3)


def test_family_span_is_annihilated():
    plan = plan_for(4, 2)
    for fine_level in range(1, 4):
        basis = plan.bases[fine_level]
        c = np.random.default_rng(fine_level).standard_normal(4)
        s = basis.expansion @ c
        _, d = forward_step(plan, fine_level - 1, s)
        assert np.max(np.abs(d)) < 1e-9


def test_hat_unit_odd_input():
    plan = TransformPlan(SmoothFamily.powers(2), KnotHierarchy.from_coarse(np.linspace(0, 1, 5), 1))
    s = np.zeros(9)
    s[3] = 1.0
    sc, d = forward_step(plan, 0, s)
    np.testing.assert_allclose(d, [0, 1, 0, 0], atol=1e-14)
    np.testing.assert_allclose(sc, [0, 0.25, 0.25, 0, 0], atol=1e-14)


def test_inverse_step_examples():
    plan = plan_for(3, 3, 4, 1)
    lv = plan.levels[0]
    c = np.arange(lv.n_coarse, dtype=float)
    np.testing.assert_allclose(inverse_step(plan, 0, c, np.zeros(lv.n_detail)), lv.H @ c, atol=1e-12)
    e = np.eye(lv.n_detail)[1]
    np.testing.assert_allclose(inverse_step(plan, 0, np.zeros(lv.n_coarse), e), lv.detail_matrix()[:, 1], atol=1e-12)


@pytest.mark.parametrize("fam", [trig_family(), cubic_family()], ids=["trig", "cubic"])
def test_analyze_family_members(fam):
    plan = TransformPlan(fam, KnotHierarchy.from_coarse(FIG_KNOTS, 2))
    for member in fam.members:
        pyr = analyze_function(plan, member)
        assert max(np.max(np.abs(d)) for d in pyr.details) < 1e-8


def test_analyze_cosine_with_cubic_family_leaves_details():
    plan = TransformPlan(cubic_family(), KnotHierarchy.from_coarse(FIG_KNOTS, 2))
    pyr = analyze_function(plan, Cosine(1.0))
    assert max(np.max(np.abs(d)) for d in pyr.details) > 1e-6
    pyr = analyze_function(plan, lambda x: 3.0 - 2.0 * x)
    assert max(np.max(np.abs(d)) for d in pyr.details) < 1e-8


def test_linear_trend_annihilated_for_trig_family():
    plan = TransformPlan(trig_family(), KnotHierarchy.from_coarse(FIG_KNOTS, 2))
    pyr = analyze_function(plan, lambda x: 0.5 + 4 * x)
    assert max(np.max(np.abs(d)) for d in pyr.details) < 1e-8


def test_operation_count_is_linear():
    per = []
    for n in (17, 33, 65):
        plan = TransformPlan(cubic_family(), KnotHierarchy.from_coarse(np.linspace(0, 1, (n + 1) // 2), 1))
        counter = OpCounter()
        forward_step(plan, 0, np.ones(plan.size(1)), counter)
        per.append(counter.count / n)
    assert max(per) / min(per) < 1.15


def test_shape_errors():
    plan = plan_for(2, 0)
    with pytest.raises(ShapeError):
        forward(plan, np.ones(3))
    with pytest.raises(ShapeError):
        inverse(plan, CoefficientPyramid(np.ones(3), []))


def test_plan_requires_one_and_x():
    fam = SmoothFamily((Power(0), Sine(1.0)))
    with pytest.raises(ValueError):
        TransformPlan(fam, KnotHierarchy.from_coarse(FIG_KNOTS, 1))


def test_pyramid_serialization(rng):
    plan = plan_for(3, 0)
    pyr = forward(plan, rng.standard_normal(plan.size(3)))
    for again in (CoefficientPyramid.from_json(pyr.to_json()), CoefficientPyramid.from_csv(pyr.to_csv())):
        np.testing.assert_array_equal(again.coarse, pyr.coarse)
        for a, b in zip(again.details, pyr.details):
            np.testing.assert_array_equal(a, b)
