import math

import numpy as np
import pytest

from penaltyflow.adapt import (Tolerances, est_epsilon, alpha1, alpha2,
                               est_time_first, second_diff_combo,
                               est_time_second, shrink_eps, grow_eps,
                               guard_floor, decide_alg1, decide_first,
                               decide_second, decide_vsvo, MAX_REJECTS)


def tols(**kw):
    return Tolerances(**kw)


def test_filter_coefficients_closed_form():
    assert np.isclose(alpha1(1.0), 2.0 / 3.0, rtol=1e-15)
    assert np.isclose(alpha1(2.0), 6.0 / 5.0, rtol=1e-15)
    assert np.isclose(alpha2(1.0, 1.0), 10.0 / 9.0, rtol=1e-15)


def test_estimator_ratio_and_scale_invariance():
    assert est_epsilon(2.0, 8.0) == 0.25
    for c in (1e-6, 1.0, 1e6):
        assert abs(est_epsilon(2.0 * c, 8.0 * c) - 0.25) < 1e-15


def test_estimator_zero_flow_warns():
    with pytest.warns(UserWarning, match="identically zero"):
        assert est_epsilon(0.0, 0.0) == 0.0


def test_estimator_rejects_invalid_norms():
    with pytest.raises(ValueError):
        est_epsilon(-1.0, 2.0)
    with pytest.raises(ValueError):
        est_epsilon(1.0, 0.0)


def test_time_estimators_closed_form():
    assert est_time_first(3.0, 2.0 / 3.0) == 1.0
    combo = second_diff_combo(np.array([6.0]), np.array([3.0]),
                              1.0, 2.0, 3.0)
    assert np.allclose(combo, 7.5)  # (9/6)*6 - (3/6)*3
    assert np.isclose(est_time_second(7.5, 10.0 / 9.0), 7.5 * 10 / 54,
                      rtol=1e-14)


def test_shrink_eps_picks_gentlest_factor():
    t = tols()
    # small alpha*k: the (1 - alpha k) factor is the gentlest
    assert np.isclose(shrink_eps(1e-6, 5e-3, t), 9.9e-7, rtol=1e-15)
    # alpha*k > 1/2: halving wins
    assert np.isclose(shrink_eps(1e-6, 0.3, t), 5e-7, rtol=1e-15)
    # floor
    assert shrink_eps(1.5e-8, 0.3, t) == 1e-8
    assert shrink_eps(1e-8, 0.01, t) == 1e-8


def test_grow_eps_doubles_with_cap():
    t = tols()
    assert grow_eps(1e-7, t) == 2e-7
    assert grow_eps(8e-6, t) == 1e-5


def test_tolerances_defaults_and_validation():
    t = tols(tol=1e-4)
    assert np.isclose(t.min_tol, 1e-5, rtol=1e-15)
    assert np.isclose(t.min_ttol, 1e-6, rtol=1e-15)
    with pytest.raises(ValueError):
        Tolerances(tol=1e-6, min_tol=1e-5)
    with pytest.raises(ValueError):
        Tolerances(eps_min=1e-4, eps_max=1e-6)


def test_alg1_reject_shrinks_eps_not_k():
    t = tols()
    d = decide_alg1(5e-6, 1e-6, 0.01, t)
    assert not d.accepted
    assert np.isclose(d.eps, 0.98e-6, rtol=1e-15)
    assert d.k == 0.01


def test_alg1_boundary_comparators():
    t = tols()
    # exactly at tol rejects, exactly at min_tol grows
    assert not decide_alg1(t.tol, 1e-6, 0.01, t).accepted
    d = decide_alg1(t.min_tol, 1e-6, 0.01, t)
    assert d.accepted and d.grew and d.eps == 2e-6


def test_alg1_continues_at_eps_floor():
    t = tols()
    d = decide_alg1(5e-6, t.eps_min, 0.01, t)
    assert d.accepted and d.eps == t.eps_min


def test_alg1_plain_accept_keeps_eps():
    t = tols()
    d = decide_alg1(5e-7, 1e-6, 0.01, t)
    assert d.accepted and not d.grew and d.eps == 1e-6 and d.order == 2


def test_alg1_guard_blocks_compounding_shrinks():
    t = tols()
    eps0 = 1e-6
    # without the guard two rejections compound
    d1 = decide_alg1(5e-6, eps0, 0.01, t)
    d2 = decide_alg1(5e-6, d1.eps, 0.01, t)
    assert d2.eps < d1.eps
    # with it the second shrink is clamped to the floor and the
    # controller accepts rather than spin
    g1 = decide_alg1(5e-6, eps0, 0.01, t, guard=True, eps_accepted=eps0)
    assert not g1.accepted
    assert np.isclose(g1.eps, guard_floor(eps0, 0.01, t), rtol=1e-15)
    g2 = decide_alg1(5e-6, g1.eps, 0.01, t, guard=True, eps_accepted=eps0)
    assert g2.accepted and g2.eps == g1.eps


def test_variable_reject_step_floor():
    t = tols()
    # prediction 0.9*0.1*sqrt(1/4) = 0.045 is below half the attempt
    d = decide_first(0.0, 4e-5, 1e-6, 0.1, t)
    assert not d.accepted
    assert np.isclose(d.k, 0.05, rtol=1e-15)


def test_variable_reject_step_formula():
    t = tols()
    d = decide_first(0.0, 1.2e-5, 1e-6, 0.1, t)
    assert not d.accepted
    assert np.isclose(d.k, 0.9 * 0.1 * (1.0 / 1.2) ** 0.5, rtol=1e-14)
    # second-order controller uses the cube-root exponent
    d2 = decide_second(0.0, 1.2e-5, 1e-6, 0.1, t)
    assert np.isclose(d2.k, 0.9 * 0.1 * (1.0 / 1.2) ** (1 / 3), rtol=1e-14)


def test_variable_reject_also_shrinks_eps():
    t = tols()
    d = decide_first(0.0, 4e-5, 1e-6, 0.01, t)
    assert np.isclose(d.eps, 0.98e-6, rtol=1e-15)


def test_variable_growth_caps_at_doubling():
    t = tols()
    d = decide_first(0.0, 1e-7, 1e-6, 0.1, t)
    assert d.accepted and d.grew
    assert np.isclose(d.k, 0.2, rtol=1e-15)
    assert d.eps == 2e-6


def test_variable_zero_estimator_doubles():
    t = tols()
    d = decide_second(0.0, 0.0, 1e-6, 0.1, t)
    assert d.accepted and np.isclose(d.k, 0.2, rtol=1e-15)


def test_variable_plain_accept_keeps_step():
    t = tols()
    d = decide_first(5e-7, 5e-6, 1e-6, 0.1, t)
    assert d.accepted and not d.grew and d.k == 0.1 and d.order == 1
    d = decide_second(5e-7, 5e-6, 1e-6, 0.1, t)
    assert d.order == 2


def test_variable_est_reject_at_eps_floor_is_suppressed():
    t = tols()
    # est is bad but eps cannot move and time is fine: accept
    d = decide_first(5e-6, 5e-6, t.eps_min, 0.1, t)
    assert d.accepted and d.eps == t.eps_min
    # time being bad still rejects at the eps floor
    d = decide_first(5e-6, 4e-5, t.eps_min, 0.1, t)
    assert not d.accepted and d.eps == t.eps_min and d.k < 0.1


def test_vsvo_rejects_on_more_optimistic_estimator():
    t = tols()
    # min(test1, test2) below ttol: no time rejection
    d = decide_vsvo(5e-7, 4e-5, 5e-6, 1e-6, 0.1, t)
    assert d.accepted
    # both above: reject, retry at the larger prediction
    d = decide_vsvo(5e-7, 4e-5, 9e-5, 1e-6, 0.1, t)
    assert not d.accepted
    s1 = 0.9 * 0.1 * (1e-5 / 4e-5) ** 0.5
    s2 = 0.9 * 0.1 * (1e-5 / 9e-5) ** (1 / 3)
    assert np.isclose(d.k, max(s1, s2, 0.05), rtol=1e-14)


def test_vsvo_order_pick():
    t = tols()
    # first order predicts the larger step: take the unfiltered solution
    d = decide_vsvo(5e-7, 1e-6, 8e-6, 1e-6, 0.1, t)
    assert d.accepted and d.order == 1
    # second order predicts larger: filtered
    d = decide_vsvo(5e-7, 8e-6, 1e-6, 1e-6, 0.1, t)
    assert d.accepted and d.order == 2
    # both capped at doubling: tie goes to the filtered solution
    d = decide_vsvo(5e-7, 1e-9, 1e-9, 1e-6, 0.1, t)
    assert d.order == 2


def test_vsvo_first_step_mode():
    t = tols()
    # with no second-difference history the second estimator is inf:
    # it cannot veto, and the order pick falls to first order
    d = decide_vsvo(5e-7, 5e-6, math.inf, 1e-6, 0.1, t)
    assert d.accepted and d.order == 1
    d = decide_vsvo(5e-7, 4e-5, math.inf, 1e-6, 0.1, t)
    assert not d.accepted


def test_vsvo_growth_takes_larger_step():
    t = tols()
    d = decide_vsvo(5e-7, 1e-7, 4e-6, 1e-6, 0.1, t)
    assert d.accepted and d.grew
    s1 = min(0.9 * 0.1 * (1e-5 / 1e-7) ** 0.5, 0.2)
    s2 = min(0.9 * 0.1 * (1e-5 / 4e-6) ** (1 / 3), 0.2)
    assert np.isclose(d.k, max(s1, s2), rtol=1e-14)


def test_est_only_rejection_keeps_step():
    t = tols()
    # divergence breach with the time estimator comfortably inside
    # tolerance: eps shrinks, k stays put
    d = decide_first(5e-6, 1e-6, 1e-6, 0.002, t)
    assert not d.accepted
    assert d.k == 0.002
    assert d.eps < 1e-6
    d = decide_vsvo(5e-6, 1e-6, 2e-6, 1e-6, 0.002, t)
    assert not d.accepted and d.k == 0.002


def test_guarded_est_breach_settles_after_one_notch():
    t = tols()
    eps0, k = 1e-6, 0.002
    d1 = decide_second(5e-6, 2e-6, eps0, k, t, guard=True, eps_accepted=eps0)
    assert not d1.accepted and d1.k == k
    # the retry sees eps pinned at the guard floor and accepts
    d2 = decide_second(5e-6, 2e-6, d1.eps, d1.k, t, guard=True,
                       eps_accepted=eps0)
    assert d2.accepted and d2.eps == d1.eps and d2.k == k


def test_reject_loop_terminates_when_estimator_tracks_step():
    # A first-order time estimator scales like k^2.  Starting far too
    # large, repeated rejections must contract k until the estimator
    # clears the tolerance -- proposals are based on the step that was
    # actually measured, so the retry sequence cannot oscillate.
    t = tols()
    k = 0.05
    c = 0.2  # test1 = c * k^2 -> 5e-4 at the start, 50x over ttol
    for _ in range(MAX_REJECTS):
        d = decide_first(0.0, c * k * k, 1e-6, k, t)
        if d.accepted:
            break
        assert d.k < k
        k = d.k
    assert d.accepted
    assert c * k * k <= t.ttol


def test_max_rejects_is_sane():
    assert MAX_REJECTS >= 5
