import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parabolic_model import errors
from parabolic_model.geometry import (ParabolicDomain, disc_threshold, kappa0_of, mu0_of,
                                      mu1_search, pick_constants, r0_search,
                                      sample_disc_inclusion, separation_check, threshold_t0)
from parabolic_model.weights import WeightFamily

W = WeightFamily(0.5, "half_line")


def test_n3_constants_chain_frozen(n3_built):
    # independently derived by hand: k = k0 + 1/2, r' = mu / (2 sqrt(1 + mu^2 k^2)),
    # kappa0 = ell + mu1 (2 + a + phi(a)) with a = 1 + ell phi(1)
    cb = n3_built.constants
    assert cb.mu == 1.0 and cb.ell == 1.0 and cb.k == 1.5
    assert cb.r_prime == pytest.approx(0.5 / math.sqrt(1 + 2.25), abs=1e-12)
    assert cb.mu1 == pytest.approx(1.1)
    assert cb.kappa0 == pytest.approx(1 + 1.1 * 9, abs=1e-12)
    assert cb.kappa == pytest.approx(1.05 * 10.9, abs=1e-12)
    assert cb.t0 == pytest.approx(2.0, abs=1e-10)
    assert cb.R0 == pytest.approx(0.8355204819, abs=1e-9)
    assert cb.R > cb.R0 and cb.eps == pytest.approx(0.2)
    assert cb.violations() == [] and cb.verified


def test_mu0_and_condition_five():
    assert mu0_of(0.0, 1.0) == 0.0
    assert mu0_of(0.6, 1.0) == pytest.approx(0.75)
    with pytest.raises(errors.ConditionFiveError):
        mu0_of(1.0, 1.0)


def test_pick_constants_infeasible():
    with pytest.raises(errors.InfeasibleError):
        pick_constants(0.5, 0.6, 1.0, 1.0)


def test_kappa0_formula():
    assert kappa0_of(1.0, 1.1, W) == pytest.approx(10.9)


def test_threshold_t0_unit_weight():
    assert threshold_t0(1.5, W) == pytest.approx(2.0, rel=1e-12)


def test_disc_threshold_closed_form():
    assert disc_threshold(1.0, 0.5, W) == pytest.approx((1 + math.sqrt(3)) / 2, abs=1e-10)
    with pytest.raises(errors.InfeasibleError):
        disc_threshold(1.0, 1.5, W)


def test_r0_search_disc_inclusion():
    R0 = r0_search(1.0, 0.5, W)
    bad, worst, _ = sample_disc_inclusion(ParabolicDomain(1.0, R0, W), 0.5)
    assert bad == 0 and worst >= 0


def test_disc_inclusion_detects_too_small_radius():
    bad, worst, witness = sample_disc_inclusion(ParabolicDomain(1.0, 0.1, W), 0.5)
    assert bad > 0 and worst < 0 and witness is not None


def test_domain_membership():
    dom = ParabolicDomain(1.0, 1.0, W)
    assert dom.contains(0.5)
    assert dom.contains(10 + 3j)
    assert not dom.contains(10 + 12j)
    assert not dom.contains(-2.0)
    assert dom.shrunk(0.1).margin(10 + 3j) < dom.margin(10 + 3j)


def test_mu1_search_covers_domain():
    mu1 = mu1_search(1.0, 2.0, W)
    assert mu1 > 1.0
    assert math.isclose(mu1 * 10 % 1, 0.0, abs_tol=1e-9) or math.isclose(mu1 * 10 % 1, 1.0)


def test_separation_below_threshold_reports_failure():
    rep = separation_check(0.5 * 10.9, 1.1, 1.0, W, raise_on_fail=False)
    assert not rep.ok
    with pytest.raises(errors.InequalityViolation):
        separation_check(0.5 * 10.9, 1.1, 1.0, W)


def test_separation_above_threshold_holds():
    rep = separation_check(1.05 * 10.9, 1.1, 1.0, W)
    assert rep.ok and rep.min_slack > 0


@settings(max_examples=50, deadline=None)
@given(mu=st.floats(0.5, 5.0), ess=st.floats(0.0, 0.4), alpha=st.sampled_from([0.5, 0.3]))
def test_pick_constants_inequalities(mu, ess, alpha):
    k0 = WeightFamily(alpha, "half_line").k0
    if mu <= mu0_of(ess, k0) * 1.01:
        return
    cb = pick_constants(mu, ess, k0, 1.0)
    assert cb.r_prime * cb.k < 1
    assert cb.r_prime / math.sqrt(1 - (cb.r_prime * cb.k) ** 2) < mu
    assert cb.r_prime > cb.ess and cb.k > cb.k0
    assert cb.violations() == []


@settings(max_examples=30, deadline=None)
@given(x=st.floats(1e-3, 1e4), frac=st.floats(-0.999, 0.999), mu=st.floats(0.5, 3.0))
def test_points_under_parabola_are_inside(x, frac, mu):
    dom = ParabolicDomain(mu, 0.5, W)
    z = complex(x, frac * mu * float(W.phi(x)))
    assert dom.contains(z)
