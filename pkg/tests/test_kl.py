import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from arcpd.errors import UndefinedDetectabilityError, ValidationError
from arcpd.kl import (first_order_sadd, kl_correlation_only, kl_iid_prechange, kl_mean_shift_only,
                      kl_number, kl_sweep, lambda_crit_iid, lambda_lower_iid, stationary_moments,
                      worst_case_report)
from arcpd.model import Ar1Params

mus = st.floats(-3, 3)
corrs = st.floats(-0.98, 0.98)


def test_examples():
    assert kl_number(Ar1Params(0.3, 0.2), Ar1Params(0.3, 0.2)) == 0
    assert kl_mean_shift_only(0, 1) == 0.5
    assert kl_mean_shift_only(1, -1) == 2.0
    assert kl_iid_prechange(1, 0) == 0.5
    assert kl_iid_prechange(1, 0.5) == pytest.approx(13 / 6)
    assert kl_correlation_only(0, 0.5, -0.5) == pytest.approx(2 / 3)
    assert kl_correlation_only(0, 0.5, 0.9) == pytest.approx(0.421053, abs=1e-6)
    assert first_order_sadd(math.e, 1) == pytest.approx(1)
    assert first_order_sadd(100, 0.5) == pytest.approx(9.2103, abs=1e-4)
    assert first_order_sadd(1e4, 12.9211) == pytest.approx(0.7128, abs=1e-4)


def test_first_order_errors():
    with pytest.raises(UndefinedDetectabilityError):
        first_order_sadd(100, 0.0)
    with pytest.raises(ValidationError):
        first_order_sadd(1.0, 1.0)


@settings(max_examples=300)
@given(mus, mus, corrs, corrs)
def test_special_cases_agree_with_general_form(m_pre, m_post, l_pre, l_post):
    same = kl_number(Ar1Params(m_pre, l_pre), Ar1Params(m_post, l_pre))
    assert same == pytest.approx(kl_mean_shift_only(m_pre, m_post), rel=1e-12, abs=1e-14)
    iid = kl_number(Ar1Params(0, 0), Ar1Params(m_post, l_post))
    assert iid == pytest.approx(kl_iid_prechange(m_post, l_post), rel=1e-12, abs=1e-14)
    corr = kl_number(Ar1Params(m_pre, l_pre), Ar1Params(m_pre, l_post))
    assert corr == pytest.approx(kl_correlation_only(m_pre, l_pre, l_post), rel=1e-12, abs=1e-14)


@given(mus, mus, corrs, corrs)
def test_zero_law(m_pre, m_post, l_pre, l_post):
    kl = kl_number(Ar1Params(m_pre, l_pre), Ar1Params(m_post, l_post))
    assert kl >= 0
    if (m_pre, l_pre) == (m_post, l_post):
        assert kl == 0
    elif abs(m_pre - m_post) > 1e-3 or abs(l_pre - l_post) > 1e-3:
        assert kl > 0


def test_divergence_at_boundary():
    assert kl_iid_prechange(1, 1 - 1e-7) > 1e6
    assert kl_iid_prechange(1, -1 + 1e-7) > 1e6


def test_lambda_crit_closed_form():
    assert lambda_crit_iid(1.0) == -1 / 3
    assert abs(lambda_crit_iid(1e-6)) < 1e-6
    # removable singularity: the general branch approaches -1/3 continuously
    assert lambda_crit_iid(1 + 1e-4) == pytest.approx(-1 / 3, abs=1e-4)
    res = optimize.minimize_scalar(lambda l: kl_iid_prechange(10, l), bounds=(-0.999999, 0.999999),
                                   method="bounded", options={"xatol": 1e-10})
    assert lambda_crit_iid(10) == pytest.approx(res.x, abs=1e-6)


def test_lambda_lower_closed_form():
    assert lambda_lower_iid(1) == pytest.approx(0.5 * (1 - math.sqrt(5)), abs=1e-12)
    assert abs(lambda_lower_iid(1e-6)) < 1e-6
    root = optimize.bisect(lambda l: kl_iid_prechange(2, l) - 2.0, -0.999, lambda_crit_iid(2), xtol=1e-12)
    assert lambda_lower_iid(2) == pytest.approx(root, abs=1e-9)


@pytest.mark.parametrize("mu0", [0.5, 1.0, 2.0, 10.0])
def test_worst_case_report_matches_iid_closed_forms(mu0):
    rep = worst_case_report(Ar1Params(0, 0), mu0)
    assert rep.lambda_crit == pytest.approx(lambda_crit_iid(mu0), abs=1e-6)
    assert rep.lambda_lower == pytest.approx(lambda_lower_iid(mu0), abs=1e-6)
    assert rep.lambda_upper == 0.0
    assert rep.reference_kl == pytest.approx(mu0 * mu0 / 2)


def test_worst_case_correlation_only_change():
    rep = worst_case_report(Ar1Params(0, 0.3), 0.0)
    assert rep.lambda_crit == pytest.approx(0.3, abs=1e-6)
    assert rep.kl_at_crit == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("pre,mu0", [((0, 0), 1), ((0, 0.5), 1), ((0, -0.5), 1), ((1, 0.2), 0.3),
                                     ((-1, 0.6), 2), ((0.5, -0.3), -1)])
def test_minimizer_and_cutoff_properties(pre, mu0):
    pre = Ar1Params(*pre)
    rep = worst_case_report(pre, mu0)
    assert rep.lambda_lower <= rep.lambda_crit <= rep.lambda_upper
    grid = np.linspace(-0.999, 0.999, 1000)
    kls = kl_sweep(pre, mu0, grid)
    assert np.all(rep.kl_at_crit <= kls + 1e-12)
    ref = rep.reference_kl
    inside = (grid > rep.lambda_lower + 1e-6) & (grid < rep.lambda_upper - 1e-6)
    outside = (grid < rep.lambda_lower - 1e-6) | (grid > rep.lambda_upper + 1e-6)
    assert np.all(kls[inside] < ref)
    assert np.all(kls[outside] >= ref)


def test_sign_rule_one_cutoff_is_lambda_pre():
    for mu_pre in np.linspace(-2, 2, 7):
        for mu0 in np.linspace(-2, 2, 7):
            for lam in (-0.6, -0.2, 0.0, 0.3, 0.7):
                if mu0 == mu_pre:
                    continue
                rep = worst_case_report(Ar1Params(mu_pre, lam), mu0)
                assert lam in (rep.lambda_lower, rep.lambda_upper)


def test_stationary_moments():
    assert stationary_moments(Ar1Params(0, 0)) == {"mean": 0, "second_moment": 1, "lag1_cross": 0}
    m = stationary_moments(Ar1Params(1, 0.5))
    assert m["mean"] == pytest.approx(2)
    assert m["second_moment"] == pytest.approx(4 + 4 / 3)
    assert m["lag1_cross"] == pytest.approx(4 + 2 / 3)
