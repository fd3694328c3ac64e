"""Piecewise AR(1) observation model and its one-step likelihood ratio.

Observations follow

    X_n = mu_pre  + lambda_pre  * X_{n-1} + eps_n   for 1 <= n <= nu
    X_n = mu_post + lambda_post * X_{n-1} + eps_n   for n >= nu + 1

with unit-variance Gaussian innovations and a deterministic ``X_0 = x0``.
``nu = 0`` means the post-change regime holds from the first observation,
``nu = math.inf`` means no change ever happens.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

INF = math.inf


@dataclass(frozen=True)
class Ar1Params:
    """Drift ``mu`` and correlation coefficient ``lam`` of one regime."""

    mu: float
    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.lam)):
            raise ValidationError(f"AR(1) parameters must be finite, got mu={self.mu}, lambda={self.lam}")
        if not abs(self.lam) < 1.0:
            raise ValidationError(f"|lambda| must be < 1 for a stationary AR(1) regime, got {self.lam}")


@dataclass(frozen=True)
class ChangeSpec:
    pre: Ar1Params
    post: Ar1Params
    change_point: float = INF
    x0: float = 0.0

    def __post_init__(self):
        nu = self.change_point
        if nu != INF and (nu < 0 or int(nu) != nu):
            raise ValidationError(f"change_point must be a non-negative integer or inf, got {nu}")
        if not math.isfinite(self.x0):
            raise ValidationError(f"x0 must be finite, got {self.x0}")

    def params_at(self, n: int) -> Ar1Params:
        """Regime that generates observation ``n`` (1-based)."""
        return self.pre if n <= self.change_point else self.post


def step(params: Ar1Params, x_prev: float, noise: float) -> float:
    return params.mu + params.lam * x_prev + noise


def generate_path(spec: ChangeSpec, n: int, rng) -> np.ndarray:
    """Draw ``X_1..X_n``.

    ``rng`` needs a ``standard_normal()`` method; a :class:`numpy.random.Generator`
    or an :class:`arcpd.rng.CounterStream` both work. One draw is consumed per
    observation, in order.
    """
    if n < 1:
        raise ValidationError(f"path length must be >= 1, got {n}")
    out = np.empty(n)
    x = spec.x0
    for i in range(1, n + 1):
        x = step(spec.params_at(i), x, float(rng.standard_normal()))
        out[i - 1] = x
    return out


def log_likelihood_ratio(pre: Ar1Params, post: Ar1Params, x_prev: float, x_curr: float) -> float:
    """Log of the post/pre conditional density ratio of ``x_curr`` given ``x_prev``."""
    centre = 0.5 * (x_prev * (post.lam + pre.lam) + (post.mu + pre.mu))
    slope = x_prev * (post.lam - pre.lam) + (post.mu - pre.mu)
    return (x_curr - centre) * slope


def iid_mean_shift_llr(mu_pre: float, mu_post: float, residual: float) -> float:
    """Log-LR of a unit-variance Gaussian mean shift evaluated at ``residual``."""
    return (mu_post - mu_pre) * (residual - 0.5 * (mu_post + mu_pre))
