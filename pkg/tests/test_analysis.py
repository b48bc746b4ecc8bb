import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from largesol import analysis as A
from largesol.bounds import PotentialSpec
from largesol.errors import InapplicableError, ResolutionError
from largesol.geometry import Ball, Interval
from oracles import exact_large_interval

I = Interval(0.0, 1.0)


def exact_profile(n=4001):
    return A.sampled_profile(I, lambda d: exact_large_interval(d), n=n)


def test_exact_large_solution_ratio_one():
    rep = A.boundary_ratio(exact_profile())
    assert 0.98 <= rep.limit <= 1.02
    assert rep.verdict == "large-with-ratio-1"


def test_ratio_decreases_toward_one():
    rep = A.boundary_ratio(exact_profile())
    for row in rep.ratios:
        assert np.all(np.diff(row) < 0)
        assert row[-1] > 1


def test_ladder_shift_stability():
    prof = exact_profile()
    shifted = tuple(np.geomspace(10**-1.5, 10**-4.5, 21))
    a1 = A.boundary_ratio(prof).limit
    a2 = A.boundary_ratio(prof, ladder=shifted).limit
    assert abs(a1 - a2) <= 0.01


def test_constant_profile_vanishes():
    prof = A.sampled_profile(I, lambda d: np.full_like(d, 5.0))
    assert A.boundary_ratio(prof).verdict == "vanishing"


def test_ball_log_profile():
    prof = A.sampled_profile(Ball(3, 1.0), lambda d: np.log(3.0 / d**2) + d)
    rep = A.boundary_ratio(prof)
    assert abs(rep.limit - 1) <= 0.02 and rep.verdict == "large-with-ratio-1"


@settings(max_examples=25, deadline=None)
@given(st.floats(-50, 50))
def test_ratio_limit_ignores_additive_constant(k):
    lad = np.geomspace(1e-2, 1e-4, 21)
    base = A.ell(lad) + 0.3 * np.log(A.ell(lad))
    a = A.report_from_values(base, lad).limit
    b = A.report_from_values(base + k, lad).limit
    assert abs(a - b) <= 1e-9


def test_pl_power_profiles():
    pot = PotentialSpec(0.2)
    lo = A.sampled_profile(I, lambda d: d**pot.beta_minus)
    hi = A.sampled_profile(I, lambda d: d**pot.beta_plus)
    assert A.pl_classify(lo, pot).horn == "i"
    rep = A.pl_classify(hi, pot)
    assert rep.horn == "ii" and rep.minus_decreasing
    neg = A.sampled_profile(I, lambda d: -(d**pot.beta_plus))
    assert A.pl_classify(neg, pot).used_absolute_value


def test_pl_rejects_supercritical():
    with pytest.raises(InapplicableError):
        A.pl_classify(exact_profile(), PotentialSpec(0.3))


def test_amplitude_exact_model():
    prof = A.sampled_profile(I, lambda d: 3.0 * A.ell(d) ** 0.5 + 7.0)
    rep = A.amplitude_fit(prof, 1.0)
    assert abs(rep.M - 3.0) <= 1e-6 and abs(rep.c - 7.0) <= 1e-5
    assert not rep.mismatch


def test_amplitude_mismatch_on_log_profile():
    rep = A.amplitude_fit(exact_profile(), 1.0)
    assert rep.mismatch


def test_ko_check_detects_corruption():
    prof = exact_profile()
    assert A.ko_check(prof, 5.0, kind="log").passed
    bad = A.SampledProfile(prof.mesh, prof.values.copy())
    bad.values[prof.mesh.n // 3] += 10.0
    rep = A.ko_check(bad, 5.0, kind="log")
    assert not rep.passed and rep.max_excess > 9


def test_extrapolation_recovers_limit():
    eps = np.geomspace(1e-3, 1e-12, 6)
    vals = 2.5 + 0.7 * A.ell(eps) ** -1.5
    lim, spread = A.extrapolate_sequence(vals, eps)
    assert abs(lim - 2.5) <= 1e-6


def test_resolution_errors():
    prof = exact_profile(n=101)
    with pytest.raises(ResolutionError):
        A.ladder_values(prof, np.geomspace(1e-2, 1e-12, 5))
    with pytest.raises(ResolutionError):
        A.boundary_ratio(prof, ladder=(1e-4, 1e-3, 1e-2))


def test_non_log_reference_inapplicable():
    with pytest.raises(InapplicableError):
        A.boundary_ratio(exact_profile(), reference="power")
