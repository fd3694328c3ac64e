import math
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from arcpd.detectors import CUSUM, SR, DetectorSpec
from arcpd.errors import (CensoringError, ConvergenceError, InfeasibleConditioningError,
                          UnsupportedConfigurationError, ValidationError)
from arcpd.mc import (McConfig, McEstimate, estimate_add_inf, estimate_add_k, estimate_arl,
                      first_step_variance_reduction, required_sample_size, run_times, sadd,
                      summarize, variance_bound_check)
from arcpd.model import INF, Ar1Params, ChangeSpec

IID = Ar1Params(0.0, 0.0)
P09 = Ar1Params(1.0, 0.9)


def test_required_sample_size():
    # z_{0.025} = 1.959964 gives 38414.6 -> 38415; the rounded z = 1.96 gives 38416
    assert required_sample_size(0.05, 0.01) == 38415
    assert math.ceil((1.96 / 0.01) ** 2) == 38416
    assert required_sample_size(0.05, 0.10) == 385
    assert required_sample_size(0.3174, 0.999) == 2
    with pytest.raises(ValidationError):
        required_sample_size(0.0, 0.1)


def test_config_validation():
    with pytest.raises(ValidationError):
        McConfig(replications=1)
    with pytest.raises(ValidationError):
        McConfig(master_seed=2**64)
    assert McConfig.sized(0.05, 0.1).replications == 385


def test_degenerate_sr_arl_exact():
    est = estimate_arl(DetectorSpec(SR, 10.5), ChangeSpec(IID, IID), McConfig(replications=500))
    assert est.mean == 11 and est.std_dev == 0 and est.censored == 0
    assert variance_bound_check(est).passed


def test_arl_requires_no_change():
    with pytest.raises(ValidationError):
        estimate_arl(DetectorSpec(SR, 10.0), ChangeSpec(IID, P09, 0), McConfig())


def test_censoring_fails_closed_unless_lower_bound():
    det = DetectorSpec(CUSUM, 2.0)
    mc = McConfig(replications=20, max_steps=50)
    with pytest.raises(CensoringError):
        estimate_arl(det, ChangeSpec(IID, IID), mc)
    est = estimate_arl(det, ChangeSpec(IID, IID), replace(mc, lower_bound=True))
    assert est.censored == 20 and est.mean == 50


def test_add0_equals_unconditional_mean():
    det = DetectorSpec(CUSUM, 20.0)
    mc = McConfig(replications=3000, master_seed=4)
    add0 = estimate_add_k(det, IID, P09, 0, mc)
    times, _ = run_times(det, ChangeSpec(IID, P09, 0), mc)
    assert add0.rejected == 0
    assert add0.mean == float(np.mean(times)) and add0.std_err == summarize(times).std_err


def test_add_k_is_batch_invariant_and_indexed():
    det = DetectorSpec(SR, 30.0)
    mc = McConfig(replications=700, master_seed=12)
    est = estimate_add_k(det, IID, P09, 15, mc)
    times, _ = run_times(det, ChangeSpec(IID, P09, 15), mc, count=20_000)
    kept = times[times > 15][:700] - 15
    assert est.mean == float(np.mean(kept))
    assert est.rejected == int(np.flatnonzero(times > 15)[699] + 1 - 700)


def test_add_k_infeasible_conditioning():
    with pytest.raises(InfeasibleConditioningError):
        estimate_add_k(DetectorSpec(SR, 10.5), IID, IID, 11, McConfig(replications=10))


def test_add_inf_degenerate_is_infeasible():
    with pytest.raises(InfeasibleConditioningError):
        estimate_add_inf(DetectorSpec(SR, 10.5), IID, IID, McConfig(replications=10))


def test_add_inf_nonconvergence():
    with pytest.raises(ConvergenceError):
        estimate_add_inf(DetectorSpec(CUSUM, 50.0), IID, P09, McConfig(replications=2000, master_seed=1),
                         schedule=(8,))


def test_sadd_rejects_headstart():
    with pytest.raises(UnsupportedConfigurationError):
        sadd(DetectorSpec(SR, 10.0, headstart=1.0), IID, P09, McConfig())


def test_sadd_sweep_no_violation():
    est = sadd(DetectorSpec(CUSUM, 20.0), IID, Ar1Params(1.0, 0.5),
               McConfig(replications=20_000, master_seed=2), verify_sweep=[1, 5, 20])
    assert [p.k for p in est.sweep] == [1, 5, 20]
    assert not est.violations


def test_variance_bound_negative_control():
    fake = McEstimate(mean=10.0, std_dev=20.0, std_err=0.2, n=10_000, censored=0, ci_half_width=0.4)
    check = variance_bound_check(fake)
    assert not check.passed and check.margin < 0
    ok = McEstimate(mean=10.0, std_dev=0.0, std_err=0.0, n=10, censored=0, ci_half_width=0.0)
    assert variance_bound_check(ok).passed


@pytest.mark.filterwarnings("ignore::arcpd.errors.DegenerateDirectionWarning")
def test_variance_reduction_degenerate_exact():
    est = first_step_variance_reduction(DetectorSpec(SR, 2.0), IID, IID, "pre", McConfig(replications=100))
    assert est.mean == 2.0 and est.std_err == 0.0
    assert est.baseline.mean == 2.0


def test_variance_reduction_matches_plain_arl():
    det = DetectorSpec(CUSUM, 5.65)
    mc = McConfig(replications=40_000, master_seed=17)
    vr = first_step_variance_reduction(det, IID, P09, "pre", mc)
    plain = estimate_arl(det, ChangeSpec(IID, P09), replace(mc, master_seed=18))
    assert abs(vr.mean - plain.mean) < 3 * math.hypot(vr.std_err, plain.std_err)
    assert vr.variance_ratio <= 1.05


@pytest.mark.parametrize("psi", [SR, CUSUM])
@pytest.mark.parametrize("lam0,A,regime", [(0.0, 10.0, "pre"), (0.5, 20.0, "post"), (0.9, 5.0, "pre"),
                                          (0.01, 30.0, "post"), (-0.5, 8.0, "post")])
def test_variance_ratio_never_materially_worse(psi, lam0, A, regime):
    est = first_step_variance_reduction(DetectorSpec(psi, A), IID, Ar1Params(1.0, lam0), regime,
                                        McConfig(replications=20_000, master_seed=5))
    assert est.variance_ratio <= 1.05
    assert abs(est.mean - est.baseline.mean) < 3 * math.hypot(est.std_err, est.baseline.std_err)


def test_arl_monotone_in_threshold():
    mc = McConfig(replications=5000, master_seed=3)
    means = [estimate_arl(DetectorSpec(SR, A), ChangeSpec(IID, P09), mc).mean for A in (5, 10, 20, 40)]
    assert all(b > a for a, b in zip(means, means[1:]))


_THREAD_SCRIPT = """
import sys
from arcpd.detectors import CUSUM, DetectorSpec
from arcpd.mc import McConfig, estimate_add_k
from arcpd.model import Ar1Params
e = estimate_add_k(DetectorSpec(CUSUM, 30.0), Ar1Params(0, 0), Ar1Params(1, 0.5), 10,
                   McConfig(replications=5000, master_seed=99))
print(repr(e.mean), repr(e.std_dev), e.rejected)
"""


def test_estimates_bit_identical_across_thread_counts():
    outs = set()
    for n in ("1", "3"):
        env = {"NUMBA_NUM_THREADS": n, "PATH": "/usr/bin:/bin"}
        res = subprocess.run([sys.executable, "-c", _THREAD_SCRIPT], capture_output=True, text=True,
                             env=env, check=True)
        outs.add(res.stdout)
    assert len(outs) == 1


def _page_cusum_run_length(log_a, drift, nodes=300):
    """Mean run length of Page's CUSUM from 0 via the Fredholm equation (Gauss-Legendre)."""
    from scipy.stats import norm

    g, w = np.polynomial.legendre.leggauss(nodes)
    y, wy = (g + 1) * log_a / 2, w * log_a / 2
    pts = np.r_[0.0, y]
    K = np.empty((nodes + 1, nodes + 1))
    K[:, 0] = norm.cdf(-pts - drift)
    K[:, 1:] = wy * norm.pdf(y[None, :] - pts[:, None] - drift)
    return np.linalg.solve(np.eye(nodes + 1) - K, np.ones(nodes + 1))[0]


@pytest.mark.parametrize("A", [9.2412, 17.25])
def test_iid_cusum_matches_integral_equation(A):
    pre, post = Ar1Params(0.0, 0.0), Ar1Params(1.0, 0.0)
    det = DetectorSpec(CUSUM, A)
    mc = McConfig(replications=100_000, master_seed=11)
    add0 = estimate_add_k(det, pre, post, 0, mc)
    arl = estimate_arl(det, ChangeSpec(pre, post, INF), mc)
    assert abs(add0.mean - _page_cusum_run_length(math.log(A), 0.5)) <= 4 * add0.std_err
    assert abs(arl.mean - _page_cusum_run_length(math.log(A), -0.5)) <= 4 * arl.std_err
