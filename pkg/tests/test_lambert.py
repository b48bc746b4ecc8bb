import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from largesol import kernels
from largesol._kernels_py import wm1_scalar as wm1_py
from largesol.errors import LambertDomainError
from largesol.lambert import (KOProfile, L_lower_bounds, dL, eval_L, implicit_residual,
                              lambert_w_m1)
from oracles import L_bisect, wm1_bisect


def test_branch_point():
    w, flag = lambert_w_m1(-math.exp(-1), full_output=True)
    assert w == -1.0 and flag


def test_minus_two():
    s = -2 * math.exp(-2)
    assert lambert_w_m1(s) == pytest.approx(-2.0, rel=1e-14)


def test_small_argument_against_bisection():
    s = -1e-8
    w = lambert_w_m1(s)
    assert w == pytest.approx(wm1_bisect(s), rel=1e-13)
    assert abs(w * math.exp(w) - s) / abs(s) <= 1e-13
    ln = math.log(1e8)
    assert w == pytest.approx(-(ln + math.log(ln)), rel=0.05)


@pytest.mark.parametrize("s", [0.0, 0.1, -0.4, float("nan")])
def test_domain_errors(s):
    with pytest.raises(LambertDomainError):
        lambert_w_m1(s)


@given(st.floats(-math.exp(-1) + 1e-6, -1e-250))
def test_forward_residual(s):
    w, flag = lambert_w_m1(s, full_output=True)
    assert not flag and w <= -1
    # conditioning: one ulp of w moves the residual by ~ulp(w)
    assert abs(w * math.exp(w) - s) <= max(1e-13, 1e-15 * abs(w)) * abs(s)


@given(st.floats(-math.exp(-1) + 1e-9, -1e-30))
def test_backends_agree(s):
    assert kernels.wm1_scalar(s) == wm1_py(s)


def test_eval_L_examples():
    t = 0.3
    assert eval_L(math.e * t * t, t) == pytest.approx(1.0, abs=1e-7)
    assert eval_L(1.0, math.sqrt(2) / math.e) == pytest.approx(2.0, rel=1e-13)
    L = eval_L(1.0, 1e-6)
    lb = math.log(1 / 1e-12)
    assert L >= lb and L >= lb + math.log(lb)
    assert L == pytest.approx(L_bisect(1.0, 1e-6), rel=1e-13)


def test_eval_L_out_of_domain():
    with pytest.raises(LambertDomainError):
        eval_L(1.0, 1.0)
    with pytest.raises(LambertDomainError):
        eval_L(-1.0, 0.1)


def test_lower_bounds():
    b, trunc = L_lower_bounds(1.0, 1e-3, 1)
    assert b == [pytest.approx(13.815510557964274)] and not trunc
    b, _ = L_lower_bounds(1.0, 1e-3, 2)
    assert b[1] == pytest.approx(13.815510557964274 + math.log(13.815510557964274))
    assert b[1] <= eval_L(1.0, 1e-3)
    b, trunc = L_lower_bounds(1.0, 0.5, 3)
    assert len(b) == 3 and not trunc
    assert all(x <= eval_L(1.0, 0.5) for x in b)
    assert b == sorted(b)


def test_asymptotic_ratio_decreases_to_one():
    t = 10.0 ** -np.arange(2, 13)
    r = eval_L(1.0, t) / np.log(1 / t**2)
    assert np.all(np.diff(r) < 0)
    assert np.all(r > 1)
    assert r[-1] < 1.1


def test_derivatives_by_finite_differences():
    A, t = 3.0, 0.02
    L, d1, d2 = dL(A, t)
    h = 1e-5 * t
    fp, fm = eval_L(A, t + h), eval_L(A, t - h)
    assert d1 == pytest.approx((fp - fm) / (2 * h), rel=1e-7)
    assert d2 == pytest.approx((fp - 2 * L + fm) / h**2, rel=1e-5)


@settings(max_examples=200)
@given(st.floats(-12, 0), st.floats(-6, 12))
def test_monotone_and_residual(log_t, log_excess):
    t = 10.0**log_t
    A = math.e * t * t * (1 + 10.0**log_excess)
    L = eval_L(A, t)
    assert L >= 1
    assert implicit_residual(A, t, L) <= 1e-12
    assert eval_L(2 * A, t) > L
    assert eval_L(A, t * 0.9) > L


def test_profile_object():
    p = KOProfile(10.0)
    assert p(0.1) == eval_L(10.0, 0.1)
    assert p.t_max == pytest.approx(math.sqrt(10 / math.e))
