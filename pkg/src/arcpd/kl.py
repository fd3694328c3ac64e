"""Kullback-Leibler detectability of an AR(1) change.

The KL number between the post- and pre-change AR(1) laws governs the
first-order detection delay ``log(ARL) / KL``. Besides the closed form and its
special cases, this module locates the worst-case post-change correlation
(the minimiser of KL over ``lambda_post``) and the cutoffs where the
correlated problem becomes harder than the i.i.d. mean-shift problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import UndefinedDetectabilityError, ValidationError
from .model import Ar1Params

# numeric searches stay this far inside (-1, 1)
EDGE = 1e-9
GRID_POINTS = 512
LAMBDA_TOL = 1e-8


def kl_number(pre: Ar1Params, post: Ar1Params) -> float:
    lam_inf, lam0 = pre.lam, post.lam
    corr = 0.5 * (lam0 - lam_inf) ** 2 / (1.0 - lam0 * lam0)
    drift = post.mu / (1.0 - lam0) - pre.mu / (1.0 - lam_inf)
    return corr + 0.5 * (1.0 - lam_inf) ** 2 * drift * drift


def kl_mean_shift_only(mu_pre: float, mu_post: float) -> float:
    """KL when only the drift changes; independent of the shared correlation."""
    return 0.5 * (mu_post - mu_pre) ** 2


def kl_iid_prechange(mu0: float, lambda0: float) -> float:
    """KL for an i.i.d. N(0, 1) pre-change regime and post-change AR(1)(mu0, lambda0)."""
    _check_corr(lambda0)
    return (lambda0 * lambda0 / (1.0 + lambda0) + mu0 * mu0 / (1.0 - lambda0)) / (2.0 * (1.0 - lambda0))


def kl_correlation_only(mu: float, lambda_pre: float, lambda_post: float) -> float:
    """KL when both regimes share the drift ``mu`` and only the correlation changes."""
    _check_corr(lambda_pre)
    _check_corr(lambda_post)
    lam0 = lambda_post
    return (0.5 * (lam0 - lambda_pre) ** 2 / (1.0 - lam0 * lam0)
            * (1.0 + mu * mu * (1.0 + lam0) / (1.0 - lam0)))


def lambda_crit_iid(mu0: float) -> float:
    """Worst-case post-change correlation for i.i.d. N(0, 1) pre-change data.

    The closed form has a removable singularity at ``mu0**2 == 1`` where the
    limit is -1/3.
    """
    m2 = mu0 * mu0
    if abs(m2 - 1.0) < 1e-8:
        return -1.0 / 3.0
    return (math.sqrt(8.0 * m2 + 1.0) - (2.0 * m2 + 1.0)) / (2.0 * (m2 - 1.0))


def lambda_lower_iid(mu0: float) -> float:
    """Lower cutoff below which correlation makes the change easier to detect (upper cutoff is 0)."""
    m2 = mu0 * mu0
    return max(-1.0, 0.5 * (1.0 - math.sqrt((9.0 * m2 + 1.0) / (m2 + 1.0))))


def stationary_moments(params: Ar1Params) -> dict:
    """Stationary mean, second moment and lag-one cross moment E[X_n X_{n-1}]."""
    mu, lam = params.mu, params.lam
    m = mu / (1.0 - lam)
    return {
        "mean": m,
        "second_moment": m * m + 1.0 / (1.0 - lam * lam),
        "lag1_cross": m * m + lam / (1.0 - lam * lam),
    }


def first_order_sadd(arl: float, kl: float) -> float:
    """First-order delay approximation ``log(arl) / kl``."""
    if not kl > 0:
        raise UndefinedDetectabilityError(f"KL number must be positive, got {kl}")
    if not arl > 1:
        raise ValidationError(f"ARL must exceed 1, got {arl}")
    return math.log(arl) / kl


@dataclass(frozen=True)
class KlReport:
    kl: float
    lambda_crit: float
    lambda_lower: float
    lambda_upper: float
    reference_kl: float
    kl_at_crit: float
    cutoff_clamped: bool = False


def worst_case_report(pre: Ar1Params, mu0: float, lambda0: float | None = None) -> KlReport:
    """Worst-case post-change correlation and detectability cutoffs for drift ``mu0``.

    ``kl`` is evaluated at ``lambda0`` when given, otherwise at the worst case.
    The cutoffs solve ``KL(lambda) == (mu0 - mu_pre)**2 / 2``; one of them is
    ``pre.lam`` itself, the other is found by bracketing and Brent root finding.
    """
    lo, hi = -1.0 + EDGE, 1.0 - EDGE

    def f(lam):
        return kl_number(pre, Ar1Params(mu0, lam))

    grid = np.linspace(lo, hi, GRID_POINTS)
    values = np.array([f(g) for g in grid])
    i = int(np.argmin(values))
    a, c = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    # bounded Brent: golden-section steps with parabolic acceleration, kept inside the grid bracket
    res = optimize.minimize_scalar(f, bounds=(a, c), method="bounded", options={"xatol": LAMBDA_TOL})
    crit = float(res.x) if f(res.x) <= values[i] else float(grid[i])
    kl_crit = f(crit)

    ref = kl_mean_shift_only(pre.mu, mu0)
    clamped = False
    if abs(crit - pre.lam) <= 10 * LAMBDA_TOL or ref <= kl_crit:
        # minimum sits at lambda_pre: the cutoff interval collapses
        other = pre.lam
    elif crit < pre.lam:
        other, clamped = _cutoff(f, ref, lo, crit)
    else:
        other, clamped = _cutoff(f, ref, crit, hi)
    lower, upper = sorted((pre.lam, other))
    if clamped and other < pre.lam:
        lower = -1.0
    kl_value = f(lambda0) if lambda0 is not None else kl_crit
    return KlReport(kl_value, crit, lower, upper, ref, kl_crit, clamped)


def _cutoff(f, ref, a, b):
    g = lambda lam: f(lam) - ref  # noqa: E731
    if g(a) * g(b) > 0:
        return (a if abs(a) > abs(b) else b), True
    return float(optimize.brentq(g, a, b, xtol=LAMBDA_TOL)), False


def kl_sweep(pre: Ar1Params, mu0: float, lambdas) -> np.ndarray:
    return np.array([kl_number(pre, Ar1Params(mu0, float(lam))) for lam in lambdas])


def _check_corr(lam):
    if not abs(lam) < 1.0:
        raise ValidationError(f"|lambda| must be < 1, got {lam}")
