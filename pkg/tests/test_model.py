"""Closed-form altitude models and transition heights."""

import math

import numpy as np
import pytest

from adssm import (ExpModelParams, InputError, LogisticModelParams, TransitionHeights,
                   exp_eval, exp_ode_residual, logistic_eval, transition_heights_exp,
                   transition_heights_logistic)

N71 = ExpModelParams(x_inf=-19.04, x_zero=-54.26, tau=25.0)


def bisect(f, lo, hi, tol=1e-9, iters=200):
    """Sign-change bisection, the independent check for every closed form."""
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_exp_endpoints():
    assert exp_eval(N71, 0.0) == pytest.approx(-54.26)
    assert exp_eval(N71, 1e6) == pytest.approx(-19.04)
    # monotone rise from the ground value to the asymptote
    h = np.linspace(0, 300, 500)
    x = exp_eval(N71, h)
    assert np.all(np.diff(x) > 0)
    assert np.all(x >= -54.26) and np.all(x < -19.04 + 1e-12)


def test_exp_ode_residual_is_zero():
    h = np.linspace(0.0, 500.0, 1000)
    for p in (N71, ExpModelParams(-12.80, -55.66, 18.0),
              ExpModelParams(5.0, -5.0, 0.5)):
        assert np.max(np.abs(exp_ode_residual(p, h))) <= 1e-12


def test_exp_ode_matches_finite_differences():
    p = ExpModelParams(x_inf=-20.0, x_zero=-60.0, tau=30.0)
    h = np.linspace(1.0, 200.0, 50)
    eps = 1e-6
    deriv = (exp_eval(p, h + eps) - exp_eval(p, h - eps)) / (2 * eps)
    target = (p.x_inf - exp_eval(p, h)) / p.tau
    assert np.allclose(deriv, target, atol=1e-6)


def test_exp_transitions_closed_form():
    p = ExpModelParams(x_inf=-20.0, x_zero=-60.0, tau=30.0)
    t = transition_heights_exp(p)
    assert t.h10 == pytest.approx(-30.0 * math.log(0.9))   #  3.1608 m
    assert t.h50 == pytest.approx(30.0 * math.log(2.0))    # 20.7944 m
    assert t.h90 == pytest.approx(-30.0 * math.log(0.1))   # 69.0776 m
    assert t.defined


def test_exp_transitions_do_not_depend_on_endpoints():
    rng = np.random.default_rng(41)
    for _ in range(100):
        tau = float(rng.uniform(0.5, 120.0))
        a = transition_heights_exp(ExpModelParams(rng.normal(), rng.normal() - 10, tau))
        b = transition_heights_exp(ExpModelParams(rng.normal() + 5, rng.normal(), tau))
        assert np.isclose(a.h50, b.h50, rtol=1e-12)
        assert 0 < a.h10 < a.h50 < a.h90


def test_exp_transitions_against_bisection():
    rng = np.random.default_rng(42)
    for _ in range(50):
        x_inf = float(rng.uniform(-30, 0))
        x_zero = x_inf - float(rng.uniform(5, 60))
        tau = float(rng.uniform(1, 100))
        p = ExpModelParams(x_inf, x_zero, tau)
        t = transition_heights_exp(p)
        for q, h in ((0.1, t.h10), (0.5, t.h50), (0.9, t.h90)):
            target = x_zero + q * (x_inf - x_zero)
            root = bisect(lambda hh: exp_eval(p, hh) - target, 0.0, 100 * tau)
            assert abs(h - root) < 1e-6


def test_flat_exp_has_no_transition():
    t = transition_heights_exp(ExpModelParams(-20.0, -20.0, 30.0))
    assert not t.defined
    assert math.isnan(t.h10) and math.isnan(t.h50) and math.isnan(t.h90)


def test_logistic_midpoint_and_ground_value():
    p = LogisticModelParams(k=0.2, h_s=40.0)
    assert logistic_eval(p, 40.0) == 0.5
    assert logistic_eval(p, 0.0) == pytest.approx(3.3535e-4, rel=1e-3)
    assert logistic_eval(p, 1e6) == pytest.approx(1.0)


def test_logistic_overflow_safety():
    p = LogisticModelParams(k=10.0, h_s=50.0)
    lo = logistic_eval(p, 0.0)       # exponent -500
    hi = logistic_eval(p, 1000.0)    # exponent +9500
    assert 0.0 <= lo < 1e-100
    assert hi == 1.0
    arr = logistic_eval(p, np.array([0.0, 50.0, 1000.0]))
    assert np.all(np.isfinite(arr))


def test_logistic_transitions_example():
    p = LogisticModelParams(k=0.2, h_s=40.0)
    t = transition_heights_logistic(p)
    # s(0) is 3.35e-4, so h50 sits a hair above the midpoint altitude
    assert t.h50 == pytest.approx(40.0034, abs=1e-3)
    assert 0 < t.h10 < t.h50 < t.h90


def test_logistic_transitions_against_bisection():
    rng = np.random.default_rng(43)
    for _ in range(50):
        p = LogisticModelParams(k=float(rng.uniform(0.02, 2.0)),
                                h_s=float(rng.uniform(5.0, 150.0)))
        t = transition_heights_logistic(p)
        s0 = float(logistic_eval(p, 0.0))
        for q, h in ((0.1, t.h10), (0.5, t.h50), (0.9, t.h90)):
            target = s0 + q * (1.0 - s0)
            root = bisect(lambda hh: float(logistic_eval(p, hh)) - target,
                          0.0, p.h_s + 2000.0 / p.k)
            assert abs(h - root) < 1e-6


def test_logistic_heights_when_midpoint_is_below_ground():
    # The heights track the change remaining above ground, so they stay
    # small and positive even when the midpoint altitude is negative.
    p = LogisticModelParams(k=1.0, h_s=-20.0)
    t = transition_heights_logistic(p)
    assert t.defined
    assert 0.0 <= t.h10 < t.h50 < t.h90 < 5.0
    assert t.h50 == pytest.approx(math.log(2.0), abs=1e-6)


def test_logistic_transition_saturated_is_undefined():
    # s(0) rounds to 1.0 in floats: no observable change above ground
    t = transition_heights_logistic(LogisticModelParams(k=10.0, h_s=-100.0))
    assert not t.defined


def test_fraction_list_validation():
    p = ExpModelParams(-20.0, -60.0, 30.0)
    with pytest.raises(InputError):
        transition_heights_exp(p, q_list=(0.1, 0.5))
    with pytest.raises(InputError):
        transition_heights_exp(p, q_list=(0.5, 0.1, 0.9))
    with pytest.raises(InputError):
        transition_heights_exp(p, q_list=(0.0, 0.5, 0.9))


def test_param_validation():
    with pytest.raises(InputError):
        ExpModelParams(0.0, -10.0, tau=0.0)
    with pytest.raises(InputError):
        ExpModelParams(0.0, -10.0, tau=-5.0)
    with pytest.raises(InputError):
        ExpModelParams(float("nan"), -10.0, tau=5.0)
    with pytest.raises(InputError):
        LogisticModelParams(k=0.0, h_s=10.0)
    with pytest.raises(InputError):
        LogisticModelParams(k=1.0, h_s=float("inf"))


def test_transition_heights_container():
    with pytest.raises(InputError):
        TransitionHeights(h10=5.0, h50=2.0, h90=9.0)   # out of order
    with pytest.raises(InputError):
        TransitionHeights(h10=float("nan"), h50=2.0, h90=9.0)  # mixed nan
    u = TransitionHeights.undefined()
    assert not u.defined
