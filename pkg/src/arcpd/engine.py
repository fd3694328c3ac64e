"""Compiled replication engine.

Each replication is an independent run of the Psi-recursion driven by its own
counter-based stream. The arithmetic mirrors :mod:`arcpd.detectors` operation
for operation, so the Python reference path and this engine agree exactly on
stopping times given the same stream.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

from .detectors import SR_OVERFLOW_GUARD, DetectorSpec
from .errors import CensoringError, NumericRangeError
from .model import ChangeSpec
from .rng import normal_block

# the bundled TBB is too old for numba; probing it only emits a warning
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

STOPPED = 0
CENSORED = 1
OVERFLOW = 2

# stands in for nu = inf inside the kernels
NEVER = np.int64(2**62)


@nb.njit(cache=True)
def _run_one(psi, log_domain_y, A, log_A, mu_pre, lam_pre, mu_post, lam_post,
             nu, x_init, y_init, n_start, seed, rep, tag, max_steps):
    """Run from state (x_init, y_init) after ``n_start`` observations.

    Returns (status, n) with n the absolute index of the stopping (or last) step.
    """
    x_prev = x_init
    y = y_init
    log_y = log_domain_y
    z0 = 0.0
    z1 = 0.0
    z2 = 0.0
    z3 = 0.0
    n = n_start
    while n < max_steps:
        n += 1
        j = n - 1
        lane = j % 4
        if lane == 0 or n == n_start + 1:
            z0, z1, z2, z3 = normal_block(seed, rep, tag, j // 4)
        if lane == 0:
            eps = z0
        elif lane == 1:
            eps = z1
        elif lane == 2:
            eps = z2
        else:
            eps = z3
        if n <= nu:
            x = mu_pre + lam_pre * x_prev + eps
        else:
            x = mu_post + lam_post * x_prev + eps
        centre = 0.5 * (x_prev * (lam_post + lam_pre) + (mu_post + mu_pre))
        slope = x_prev * (lam_post - lam_pre) + (mu_post - mu_pre)
        llr = (x - centre) * slope
        x_prev = x
        if psi == 1:
            log_y = max(0.0, log_y) + llr
            if not math.isfinite(log_y):
                return OVERFLOW, n
            if log_y >= log_A:
                return STOPPED, n
        else:
            y = (1.0 + y) * math.exp(llr)
            if not math.isfinite(y) or y > SR_OVERFLOW_GUARD:
                return OVERFLOW, n
            if y >= A:
                return STOPPED, n
    return CENSORED, n


@nb.njit(parallel=True, cache=True)
def _batch(psi, log_y0, A, log_A, mu_pre, lam_pre, mu_post, lam_post, nu,
           x0, y0, seed, reps, tag, max_steps, out_t, out_status):
    for i in nb.prange(reps.shape[0]):
        s, n = _run_one(psi, log_y0, A, log_A, mu_pre, lam_pre, mu_post, lam_post,
                        nu, x0, y0, 0, seed, reps[i], tag, max_steps)
        out_t[i] = n
        out_status[i] = s


@nb.njit(parallel=True, cache=True)
def _batch_from(psi, A, log_A, mu_pre, lam_pre, mu_post, lam_post, nu,
                x_start, y_start, logy_start, n_start, seed, reps, tag, max_steps, out_t, out_status):
    for i in nb.prange(reps.shape[0]):
        s, n = _run_one(psi, logy_start[i], A, log_A, mu_pre, lam_pre, mu_post, lam_post,
                        nu, x_start[i], y_start[i], n_start, seed, reps[i], tag, max_steps)
        out_t[i] = n
        out_status[i] = s


@nb.njit(parallel=True, cache=True)
def _first_step(psi, y1, log_y1, x1, mu_d, lam_d, mu_pre, lam_pre, mu_post, lam_post,
                seed, reps, tag, out_x, out_y, out_logy):
    centre = 0.5 * (x1 * (lam_post + lam_pre) + (mu_post + mu_pre))
    slope = x1 * (lam_post - lam_pre) + (mu_post - mu_pre)
    for i in nb.prange(reps.shape[0]):
        z0, z1, z2, z3 = normal_block(seed, reps[i], tag, 0)
        x = mu_d + lam_d * x1 + z0
        llr = (x - centre) * slope
        out_x[i] = x
        if psi == 1:
            out_logy[i] = max(0.0, log_y1) + llr
            out_y[i] = math.exp(out_logy[i])
        else:
            out_y[i] = (1.0 + y1) * math.exp(llr)
            out_logy[i] = math.log(out_y[i]) if out_y[i] > 0.0 else -math.inf


def _nu(change_point) -> np.int64:
    return NEVER if change_point == math.inf else np.int64(int(change_point))


def run_batch(spec: DetectorSpec, change: ChangeSpec, seed: int, reps, max_steps: int, tag: int = 0):
    """Stopping times and status codes for the given replication indices."""
    reps = np.ascontiguousarray(reps, dtype=np.uint64)
    out_t = np.empty(reps.shape[0], dtype=np.int64)
    out_s = np.empty(reps.shape[0], dtype=np.int8)
    y0 = float(spec.headstart)
    log_y0 = math.log(y0) if y0 > 0 else -math.inf
    pre, post = change.pre, change.post
    _batch(spec.psi.code, log_y0, float(spec.threshold), math.log(spec.threshold),
           pre.mu, pre.lam, post.mu, post.lam, _nu(change.change_point),
           float(change.x0), y0, np.uint64(seed), reps, np.uint64(tag), np.int64(max_steps),
           out_t, out_s)
    return out_t, out_s


def run_batch_from(spec: DetectorSpec, change: ChangeSpec, x_start, y_start, logy_start,
                   n_start: int, seed: int, reps, max_steps: int, tag: int = 0):
    """Like :func:`run_batch` but each replication resumes from its own state.

    ``logy_start`` is the log statistic; CUSUM continues from it directly.
    """
    reps = np.ascontiguousarray(reps, dtype=np.uint64)
    out_t = np.empty(reps.shape[0], dtype=np.int64)
    out_s = np.empty(reps.shape[0], dtype=np.int8)
    pre, post = change.pre, change.post
    _batch_from(spec.psi.code, float(spec.threshold), math.log(spec.threshold),
                pre.mu, pre.lam, post.mu, post.lam, _nu(change.change_point),
                np.ascontiguousarray(x_start, dtype=np.float64),
                np.ascontiguousarray(y_start, dtype=np.float64),
                np.ascontiguousarray(logy_start, dtype=np.float64),
                np.int64(n_start), np.uint64(seed), reps, np.uint64(tag), np.int64(max_steps),
                out_t, out_s)
    return out_t, out_s


def first_step(psi_code, y1, x1, regime_params, pre, post, seed, reps, tag=0):
    """Observation-1 transitions from ``(y1, x1)`` using draw 0 of each stream.

    Returns ``(x2, y2, log_y2)`` arrays, computed exactly as the engine would.
    """
    reps = np.ascontiguousarray(reps, dtype=np.uint64)
    out_x = np.empty(reps.shape[0])
    out_y = np.empty(reps.shape[0])
    out_logy = np.empty(reps.shape[0])
    log_y1 = math.log(y1) if y1 > 0 else -math.inf
    _first_step(psi_code, float(y1), log_y1, float(x1), regime_params.mu, regime_params.lam,
                pre.mu, pre.lam, post.mu, post.lam, np.uint64(seed), reps, np.uint64(tag),
                out_x, out_y, out_logy)
    return out_x, out_y, out_logy


def check_status(status, times, allow_censored: bool):
    """Raise on overflow, and on censoring unless ``allow_censored``. Returns censored count."""
    bad = np.flatnonzero(status == OVERFLOW)
    if bad.size:
        i = int(bad[0])
        raise NumericRangeError(
            f"detection statistic overflowed at step {int(times[i])} "
            f"(replication slot {i}, {bad.size} overflowing runs)",
            step=int(times[i]))
    censored = int(np.count_nonzero(status == CENSORED))
    if censored and not allow_censored:
        raise CensoringError(
            f"{censored} of {status.size} replications hit the step cap without an alarm; "
            "raise max_steps or enable lower-bound mode")
    return censored
