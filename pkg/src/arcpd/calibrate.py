"""Threshold selection for a target ARL.

ARL is close to linear in the threshold, ``ARL ~ alpha * A + beta``, so a
coarse line fit gives a good first guess and secant steps on common random
numbers converge in a handful of iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import stats

from .detectors import DetectorSpec, PsiKind
from .errors import ConvergenceError, ValidationError
from .mc import McConfig, McEstimate, estimate_arl, required_sample_size
from .model import Ar1Params, ChangeSpec
from .rng import derive_seed

COARSE_W = 0.05
MAX_ITER = 25

# sub-stream labels for derive_seed
_COARSE = 10
_SEARCH = 11
_CONFIRM = 12


@dataclass(frozen=True)
class ArlLine:
    alpha: float
    beta: float
    r_squared: float
    grid: tuple  # ((A, McEstimate), ...)

    def predict(self, threshold):
        return self.alpha * np.asarray(threshold) + self.beta

    def threshold_for(self, gamma: float) -> float:
        return (gamma - self.beta) / self.alpha


@dataclass(frozen=True)
class CalibrationResult:
    threshold: float
    achieved_arl: McEstimate
    target_gamma: float
    iterations: int
    history: tuple = field(default=())  # ((A, ARL estimate mean), ...) on the search seed


def _arl(psi, threshold, pre, post, mc, x0):
    change = ChangeSpec(pre, post, math.inf, x0)
    return estimate_arl(DetectorSpec(psi, float(threshold)), change, mc)


def fit_arl_line(psi: PsiKind, pre: Ar1Params, post: Ar1Params, thresholds: Sequence[float],
                 mc: McConfig, x0: float = 0.0) -> ArlLine:
    """Least-squares line through ARL estimates on a threshold grid.

    All grid points share ``mc.master_seed`` (common random numbers), which
    keeps the fitted slope much less noisy than independent estimates would.
    """
    grid = np.unique(np.asarray(thresholds, dtype=np.float64))
    if grid.size < 3:
        raise ValidationError(f"need at least 3 distinct thresholds, got {grid.size}")
    if not grid[0] > 0:
        raise ValidationError("thresholds must be positive")
    if grid[-1] / grid[0] < 4.0:
        raise ValidationError(
            f"threshold grid spans a factor {grid[-1] / grid[0]:.3g}; at least 4 is required")
    ests = [_arl(psi, A, pre, post, mc, x0) for A in grid]
    arls = np.array([e.mean for e in ests])
    fit = stats.linregress(grid, arls)
    if not fit.slope > 0:
        raise ValidationError(f"ARL does not increase with the threshold (slope {fit.slope:.4g})")
    r2 = float(fit.rvalue ** 2) if np.ptp(arls) > 0 else 0.0
    return ArlLine(float(fit.slope), float(fit.intercept), r2, tuple(zip(grid.tolist(), ests)))


def _in_band(est: McEstimate, gamma: float, rel_tol: float, with_ci: bool) -> bool:
    slack = est.ci_half_width if with_ci else 0.0
    return abs(est.mean - gamma) + slack <= rel_tol * gamma


def find_threshold(psi: PsiKind, pre: Ar1Params, post: Ar1Params, gamma: float, rel_tol: float,
                   mc: McConfig, x0: float = 0.0, max_iter: int = MAX_ITER) -> CalibrationResult:
    """Threshold A with ``|ARL(A) - gamma| / gamma <= rel_tol``.

    A coarse line fit on {gamma/16, gamma/4, gamma} gives the starting point.
    Secant steps follow, each evaluated at the fine precision
    ``closeness_w = rel_tol / 2`` on one search seed, with bisection whenever
    a step leaves the current bracket. A candidate is accepted once its
    confidence interval sits inside the band and a rerun on a fresh seed
    confirms the point estimate is in the band.
    """
    if not gamma > 1:
        raise ValidationError(f"gamma must exceed 1, got {gamma}")
    if not 0 < rel_tol <= 0.1:
        raise ValidationError(f"rel_tol must be in (0, 0.1], got {rel_tol}")
    seed = mc.master_seed
    coarse = replace(mc, replications=required_sample_size(mc.epsilon, COARSE_W),
                     master_seed=derive_seed(seed, _COARSE))
    line = fit_arl_line(psi, pre, post, [gamma / 16, gamma / 4, gamma], coarse, x0)
    fine = replace(mc, replications=required_sample_size(mc.epsilon, rel_tol / 2),
                   closeness_w=rel_tol / 2, master_seed=derive_seed(seed, _SEARCH))

    lo = hi = None  # (A, ARL) with ARL below / above gamma
    history = []
    A = max(line.threshold_for(gamma), 1e-6)
    prev = None
    for it in range(1, max_iter + 1):
        est = _arl(psi, A, pre, post, fine, x0)
        history.append((A, est.mean))
        if _in_band(est, gamma, rel_tol, with_ci=True):
            check = _arl(psi, A, pre, post,
                         replace(fine, master_seed=derive_seed(seed, _CONFIRM, it)), x0)
            if _in_band(check, gamma, rel_tol, with_ci=False):
                return CalibrationResult(A, check, gamma, it, tuple(history))
        if est.mean < gamma:
            if lo is None or A > lo[0]:
                lo = (A, est.mean)
        elif hi is None or A < hi[0]:
            hi = (A, est.mean)
        if lo is not None and hi is not None and lo[0] > hi[0]:
            # stopping times are path-wise monotone in A, so on one seed this is never noise
            raise ConvergenceError(
                f"ARL is not monotone in the threshold: ARL({hi[0]:.6g}) = {hi[1]:.6g} >= gamma "
                f"but ARL({lo[0]:.6g}) = {lo[1]:.6g} < gamma")
        A = _next_threshold(A, est.mean, prev, gamma, lo, hi)
        prev = (history[-1][0], est.mean)
    raise ConvergenceError(f"threshold search for gamma={gamma} did not converge in {max_iter} steps")


def _next_threshold(A, arl, prev, gamma, lo, hi):
    cand = None
    if prev is not None and prev[1] != arl and prev[0] != A:
        slope = (arl - prev[1]) / (A - prev[0])
        if slope > 0:
            cand = A + (gamma - arl) / slope
    if cand is None:
        # proportional step, ARL is roughly proportional to A
        cand = A * gamma / arl if arl > 0 else 2.0 * A
    if lo is not None and hi is not None:
        if not lo[0] < cand < hi[0]:
            cand = 0.5 * (lo[0] + hi[0])
    elif lo is not None and cand <= lo[0]:
        cand = 2.0 * lo[0]
    elif hi is not None and cand >= hi[0]:
        cand = 0.5 * hi[0]
    return max(cand, 1e-6)
