"""One-step transition law of the bivariate Markov chain (Y_n, X_n).

Given ``(Y_{n-1}, X_{n-1}) = (y1, x1)``, the new statistic is
``Y_n = Psi(y1) * exp(c * (X_n - m))`` with

    c = mu_post - mu_pre + x1 * (lam_post - lam_pre)
    m = (mu_post + mu_pre + x1 * (lam_post + lam_pre)) / 2

so all mass sits on the curve ``X_n = xi(x1, y1, Y_n)``. The density kernel is
singular with respect to Lebesgue measure in the plane, which is why only the
transition CDF (probabilities of quadrants) is exposed here.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import engine
from .detectors import PsiKind
from .errors import DegenerateDirectionError, DegenerateDirectionWarning, ValidationError
from .model import Ar1Params, log_likelihood_ratio

_SQRT1_2 = math.sqrt(0.5)


class Regime(str, enum.Enum):
    PRE = "pre"    # nu = inf
    POST = "post"  # nu = 0

    def params(self, pre: Ar1Params, post: Ar1Params) -> Ar1Params:
        return pre if self is Regime.PRE else post


@dataclass(frozen=True)
class KernelQuery:
    regime: Regime
    y1: float
    x1: float
    y2: float
    x2: float
    psi: PsiKind
    pre: Ar1Params
    post: Ar1Params

    def __post_init__(self):
        if self.y1 < 0 or self.y2 < 0:
            raise ValidationError(f"statistic values must be non-negative, got y1={self.y1}, y2={self.y2}")
        object.__setattr__(self, "regime", Regime(self.regime))


class FirstStep(enum.Enum):
    INSIDE = "inside"
    ABOVE = "above"
    BELOW = "below"


@dataclass(frozen=True)
class FirstStepDraw:
    outcome: FirstStep
    y2: float
    x2: float


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x * _SQRT1_2)


def direction(x1: float, pre: Ar1Params, post: Ar1Params) -> float:
    """Coefficient of the new observation in the one-step log-LR at ``x1``."""
    return post.mu - pre.mu + x1 * (post.lam - pre.lam)


def xi(x1: float, y1: float, y2: float, psi: PsiKind, pre: Ar1Params, post: Ar1Params) -> float:
    """The observation value that moves the statistic from ``y1`` to ``y2``."""
    c = direction(x1, pre, post)
    if c == 0.0:
        raise DegenerateDirectionError(
            f"log-LR does not depend on the new observation at x1={x1}")
    base = psi(y1)
    if not base > 0:
        raise ValidationError(f"psi(y1) must be positive, got {base}")
    mid = 0.5 * (post.mu + pre.mu + x1 * (post.lam + pre.lam))
    if y2 == 0.0:
        return -math.inf if c > 0 else math.inf
    if math.isinf(y2):
        return math.inf if c > 0 else -math.inf
    return math.log(y2 / base) / c + mid


def transition_cdf(q: KernelQuery) -> float:
    """P_d(Y_n <= y2, X_n <= x2 | Y_{n-1} = y1, X_{n-1} = x1)."""
    d = q.regime.params(q.pre, q.post)
    loc = d.mu + d.lam * q.x1
    c = direction(q.x1, q.pre, q.post)
    if c == 0.0:
        atom = q.psi(q.y1)
        if q.y2 == atom:
            raise DegenerateDirectionError(
                f"y2={q.y2} sits on the atom of a degenerate transition at x1={q.x1}")
        warnings.warn(f"degenerate transition at x1={q.x1}: Y_n is the constant {atom}",
                      DegenerateDirectionWarning, stacklevel=2)
        return normal_cdf(q.x2 - loc) if q.y2 > atom else 0.0
    b = xi(q.x1, q.y1, q.y2, q.psi, q.pre, q.post)
    if c > 0:
        return normal_cdf(min(q.x2, b) - loc)
    return max(0.0, normal_cdf(q.x2 - loc) - normal_cdf(b - loc))


def continue_probability(x1, y1, A, regime, psi, pre, post) -> float:
    """P(Y_n < A) after one step from ``(y1, x1)``: the run goes on."""
    q = KernelQuery(Regime(regime), y1, x1, A, math.inf, psi, pre, post)
    return transition_cdf(q)


def _one_step(x1, y1, eps, regime, psi, pre, post):
    d = Regime(regime).params(pre, post)
    x2 = d.mu + d.lam * x1 + eps
    y2 = psi(y1) * math.exp(log_likelihood_ratio(pre, post, x1, x2))
    return y2, x2


def sample_first_step_restricted(x1, y1, A, regime, psi, pre, post, rng) -> FirstStepDraw:
    """Draw one transition and classify it against the band [0, A).

    ``BELOW`` is part of the contract but cannot happen: the statistic is
    non-negative by construction.
    """
    if not A > 0:
        raise ValidationError(f"A must be positive, got {A}")
    y2, x2 = _one_step(x1, y1, float(rng.standard_normal()), regime, psi, pre, post)
    if y2 < 0:
        return FirstStepDraw(FirstStep.BELOW, y2, x2)
    if y2 >= A:
        return FirstStepDraw(FirstStep.ABOVE, y2, x2)
    return FirstStepDraw(FirstStep.INSIDE, y2, x2)


def first_step_batch(x1, y1, A, regime, psi, pre, post, seed, reps, tag=0):
    """Vectorised first transitions for replications ``reps``.

    Uses draw 0 of each replication's stream, i.e. exactly the innovation the
    batch engine consumes for observation 1. Returns ``(y2, x2, log_y2, inside)``
    where ``inside`` marks ``y2 < A`` (the run continues).
    """
    if not A > 0:
        raise ValidationError(f"A must be positive, got {A}")
    d = Regime(regime).params(pre, post)
    x2, y2, log_y2 = engine.first_step(psi.code, y1, x1, d, pre, post, seed, reps, tag)
    inside = log_y2 < math.log(A) if psi.name == "cusum" else y2 < A
    return y2, x2, log_y2, inside


def empirical_cdf_grid(samples_y, samples_x, y_grid, x_grid) -> np.ndarray:
    """Fraction of sample pairs with ``Y <= y`` and ``X <= x`` for each grid cell."""
    order = np.argsort(samples_y, kind="stable")
    ys = samples_y[order]
    xs = samples_x[order]
    out = np.empty((len(y_grid), len(x_grid)))
    n = len(ys)
    for i, y in enumerate(y_grid):
        k = np.searchsorted(ys, y, side="right")
        xk = np.sort(xs[:k])
        out[i] = np.searchsorted(xk, x_grid, side="right") / n
    return out


def ndtr(x):
    """Vectorised standard normal CDF."""
    return special.ndtr(x)
