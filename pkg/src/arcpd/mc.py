"""Monte Carlo estimation of ARL, ADD_k, ADD_inf and SADD.

Replication ``i`` always uses stream ``(seed, i)``, and every estimate is a
deterministic function of the ordered vector of per-replication results, so
estimates are bit-identical for any thread count or batch size.

Sample sizing follows the prescribed-proportional-closeness argument: with
zero headstart the run length satisfies ``sd(T) <= E[T]``, so
``N >= (z_{eps/2} / w)**2`` replications bound the relative error of the
sample mean by ``w`` with confidence ``1 - eps`` (asymptotically).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import special

from . import engine
from .detectors import DetectorSpec
from .errors import (ConvergenceError, InfeasibleConditioningError,
                     UnsupportedConfigurationError, ValidationError)
from .kernel import Regime, continue_probability, first_step_batch
from .model import INF, Ar1Params, ChangeSpec
from .rng import derive_seed

MIN_PROBE = 10_000
MIN_ACCEPT_RATE = 1e-4
MAX_BATCH = 1 << 21
MAX_STEPS_CAP = 10**12
ADD_INF_SCHEDULE = tuple(2**j for j in range(3, 13))  # 8 .. 4096

# sub-stream labels for derive_seed
_ADD_INF = 1
_SWEEP = 2


@dataclass(frozen=True)
class McConfig:
    replications: int = 10_000
    master_seed: int = 0
    epsilon: float = 0.05
    closeness_w: float = 0.01
    max_steps: Optional[int] = None
    lower_bound: bool = False

    def __post_init__(self):
        if self.replications < 2:
            raise ValidationError(f"replications must be >= 2, got {self.replications}")
        if not 0 < self.epsilon < 1:
            raise ValidationError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0 < self.closeness_w < 1:
            raise ValidationError(f"closeness_w must be in (0, 1), got {self.closeness_w}")
        if not 0 <= self.master_seed < 2**64:
            raise ValidationError(f"master_seed must fit in 64 bits, got {self.master_seed}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValidationError(f"max_steps must be >= 1, got {self.max_steps}")

    @classmethod
    def sized(cls, epsilon: float, closeness_w: float, **kw) -> "McConfig":
        """Config whose replication count meets the proportional-closeness rule."""
        return cls(replications=required_sample_size(epsilon, closeness_w),
                   epsilon=epsilon, closeness_w=closeness_w, **kw)

    def steps_cap(self, threshold: float) -> int:
        if self.max_steps is not None:
            return self.max_steps
        return default_max_steps(threshold)


@dataclass(frozen=True)
class SweepPoint:
    k: int
    mean: float
    std_err: float
    violated: bool


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_dev: float
    std_err: float
    n: int
    censored: int
    ci_half_width: float
    rejected: int = 0
    k: Optional[int] = None
    variance_ratio: Optional[float] = None
    baseline: Optional["McEstimate"] = None
    sweep: tuple = field(default=())

    @property
    def violations(self) -> list:
        return [p for p in self.sweep if p.violated]

    @property
    def rejection_fraction(self) -> float:
        total = self.n + self.rejected
        return self.rejected / total if total else 0.0


@dataclass(frozen=True)
class BoundCheck:
    passed: bool
    margin: float
    limit: float


def z_quantile(epsilon: float) -> float:
    """Upper ``epsilon / 2`` standard normal quantile."""
    return float(-special.ndtri(epsilon / 2.0))


def required_sample_size(epsilon: float, closeness_w: float) -> int:
    if not 0 < epsilon < 1:
        raise ValidationError(f"epsilon must be in (0, 1), got {epsilon}")
    if not 0 < closeness_w < 1:
        raise ValidationError(f"closeness_w must be in (0, 1), got {closeness_w}")
    z = z_quantile(epsilon)
    return max(2, math.ceil((z / closeness_w) ** 2))


def default_max_steps(threshold: float) -> int:
    # E_inf[R_n] = n and V_n <= R_n, so A itself lower-bounds the ARL of either rule
    return int(min(MAX_STEPS_CAP, max(10_000, math.ceil(1000.0 * threshold))))


def summarize(values, censored: int = 0, epsilon: float = 0.05, **extra) -> McEstimate:
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    se = sd / math.sqrt(n)
    return McEstimate(mean, sd, se, n, censored, z_quantile(epsilon) * se, **extra)


def combined_se(*estimates) -> float:
    return math.sqrt(sum(e.std_err ** 2 for e in estimates))


def run_times(detector: DetectorSpec, change: ChangeSpec, mc: McConfig, start: int = 0,
              count: Optional[int] = None, seed: Optional[int] = None):
    """Stopping times of replications ``start .. start + count - 1`` (censored runs at the cap)."""
    count = mc.replications if count is None else count
    seed = mc.master_seed if seed is None else seed
    reps = np.arange(start, start + count, dtype=np.uint64)
    times, status = engine.run_batch(detector, change, seed, reps, mc.steps_cap(detector.threshold))
    censored = engine.check_status(status, times, mc.lower_bound)
    return times, censored


def estimate_arl(detector: DetectorSpec, change: ChangeSpec, mc: McConfig) -> McEstimate:
    """Average run length to false alarm, E_inf[T]."""
    if change.change_point != INF:
        raise ValidationError("ARL is defined under the no-change measure; set change_point = inf")
    times, censored = run_times(detector, change, mc)
    return summarize(times, censored, mc.epsilon)


def estimate_add_k(detector: DetectorSpec, pre: Ar1Params, post: Ar1Params, k: int,
                   mc: McConfig, x0: float = 0.0, seed: Optional[int] = None) -> McEstimate:
    """Conditional delay E_k[T - k | T > k] by rejection of runs that alarm by time ``k``.

    Replications are scanned in index order until ``mc.replications`` of them
    survive past ``k``; the first ones in index order are kept, so the result
    does not depend on how the scan is batched.
    """
    if k < 0 or int(k) != k:
        raise ValidationError(f"k must be a non-negative integer, got {k}")
    k = int(k)
    change = ChangeSpec(pre, post, k, x0)
    seed = mc.master_seed if seed is None else seed
    target = mc.replications
    kept = []
    n_kept = 0
    scanned = 0
    censored = 0
    batch = max(target, MIN_PROBE) if k > 0 else target
    while n_kept < target:
        times, cens = run_times(detector, change, mc, start=scanned, count=batch, seed=seed)
        ok = times > k
        hits = np.flatnonzero(ok)
        need = target - n_kept
        if hits.size > need:
            cut = int(hits[need - 1]) + 1
            times, ok, hits = times[:cut], ok[:cut], hits[:need]
            batch = cut
        if cens:
            censored += _censored_among(detector, mc, times[hits])
        kept.append(times[hits] - k)
        n_kept += hits.size
        scanned += batch
        rate = n_kept / scanned
        if rate < MIN_ACCEPT_RATE:
            raise InfeasibleConditioningError(
                f"only {n_kept} of {scanned} runs survive past k={k}; "
                "conditioning on T > k is infeasible at this threshold")
        batch = min(MAX_BATCH, math.ceil(1.1 * (target - n_kept) / rate) + 64)
    values = np.concatenate(kept)
    return summarize(values, censored, mc.epsilon, rejected=scanned - n_kept, k=k)


def _censored_among(detector, mc, times):
    return int(np.count_nonzero(times >= mc.steps_cap(detector.threshold)))


def estimate_add_inf(detector: DetectorSpec, pre: Ar1Params, post: Ar1Params, mc: McConfig,
                     x0: float = 0.0, schedule: Sequence[int] = ADD_INF_SCHEDULE) -> McEstimate:
    """Steady-state delay: ADD_k on a doubling schedule until it plateaus.

    Each k gets an independent stream family so consecutive estimates are
    independent. The plateau test is ``|ADD_2k - ADD_k| < max(2 * combined se,
    0.5 % relative)``; the later estimate is returned, tagged with its k.
    """
    prev = None
    for k in schedule:
        cur = estimate_add_k(detector, pre, post, k, mc, x0,
                             seed=derive_seed(mc.master_seed, _ADD_INF, k))
        if prev is not None:
            gap = abs(cur.mean - prev.mean)
            if gap < max(2.0 * combined_se(cur, prev), 0.005 * abs(cur.mean)):
                return cur
        prev = cur
    raise ConvergenceError(f"ADD_k did not plateau by k={schedule[-1]}")


def sadd(detector: DetectorSpec, pre: Ar1Params, post: Ar1Params, mc: McConfig,
         verify_sweep: Optional[Sequence[int]] = None, x0: float = 0.0,
         sweep_replications: Optional[int] = None) -> McEstimate:
    """Worst-case delay, which equals ADD_0 for a zero-headstart procedure.

    With ``verify_sweep`` the claim is checked: each ADD_k must not exceed
    ADD_0 by more than three combined standard errors. Offending points are
    flagged in ``sweep``; nothing is raised.
    """
    if detector.headstart != 0:
        raise UnsupportedConfigurationError(
            "SADD = ADD_0 only holds for zero headstart; use estimate_add_k over k instead")
    add0 = estimate_add_k(detector, pre, post, 0, mc, x0)
    if not verify_sweep:
        return add0
    sweep_mc = mc if sweep_replications is None else replace(mc, replications=sweep_replications)
    points = []
    for k in verify_sweep:
        est = estimate_add_k(detector, pre, post, k, sweep_mc, x0,
                             seed=derive_seed(mc.master_seed, _SWEEP, k))
        violated = est.mean > add0.mean + 3.0 * combined_se(add0, est)
        points.append(SweepPoint(int(k), est.mean, est.std_err, violated))
    return replace(add0, sweep=tuple(points))


def variance_bound_check(sample: McEstimate) -> BoundCheck:
    """Check ``sd(T) <= E[T]`` with slack ``5 / sqrt(n)`` for sampling error in the sd."""
    limit = sample.mean * (1.0 + 5.0 / math.sqrt(sample.n))
    return BoundCheck(sample.std_dev <= limit, limit - sample.std_dev, limit)


def first_step_variance_reduction(detector: DetectorSpec, pre: Ar1Params, post: Ar1Params,
                                  regime, mc: McConfig, x0: float = 0.0) -> McEstimate:
    """E[T] = 1 + p * E[T - 1 | Y_1 < A] with the continuation probability p exact.

    ``p`` comes from the transition CDF, so only the part of the run after a
    first step that lands inside [0, A) is simulated. ``mc.replications``
    continuing runs are collected. The plain sample mean over the same scanned
    replications is returned as ``baseline`` together with the ratio of the two
    estimators' variances.
    """
    regime = Regime(regime)
    change = ChangeSpec(pre, post, INF if regime is Regime.PRE else 0, x0)
    psi, A = detector.psi, detector.threshold
    p = continue_probability(x0, detector.headstart, A, regime, psi, pre, post)
    if p == 0.0:
        one = summarize(np.ones(2), 0, mc.epsilon)
        return replace(one, n=mc.replications, variance_ratio=0.0, baseline=one)

    cap = mc.steps_cap(A)
    target = mc.replications
    rest, plain = [], []
    n_in = scanned = censored = 0
    batch = max(target, 1024)
    while n_in < target:
        reps = np.arange(scanned, scanned + batch, dtype=np.uint64)
        y1, x1, logy1, inside = first_step_batch(x0, detector.headstart, A, regime, psi,
                                                 pre, post, mc.master_seed, reps)
        idx = np.flatnonzero(inside)
        need = target - n_in
        if idx.size > need:
            cut = int(idx[need - 1]) + 1
            idx, inside, batch = idx[:need], inside[:cut], cut
        times, status = engine.run_batch_from(detector, change, x1[idx], y1[idx], logy1[idx], 1,
                                              mc.master_seed, reps[idx], cap)
        censored += engine.check_status(status, times, mc.lower_bound)
        t_all = np.ones(batch, dtype=np.int64)
        t_all[idx] = times
        rest.append(times - 1)
        plain.append(t_all)
        n_in += idx.size
        scanned += batch
        batch = min(MAX_BATCH, math.ceil(1.1 * (target - n_in) / max(p, 1e-12)) + 64)

    r = np.concatenate(rest).astype(np.float64)
    baseline = summarize(np.concatenate(plain), censored, mc.epsilon)
    r_sd = float(np.std(r, ddof=1)) if r.size > 1 else 0.0
    se = p * r_sd / math.sqrt(r.size)
    mean = 1.0 + p * float(np.mean(r))
    ratio = (se / baseline.std_err) ** 2 if baseline.std_err > 0 else (0.0 if se == 0 else math.inf)
    return McEstimate(mean, se * math.sqrt(r.size), se, int(r.size), censored,
                      z_quantile(mc.epsilon) * se, rejected=scanned - n_in,
                      variance_ratio=ratio, baseline=baseline)
