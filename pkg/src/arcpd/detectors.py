"""Generic Psi-recursion detectors: Y_n = Psi(Y_{n-1}) * LR_n, stop at Y_n >= A.

``SR`` (Psi(z) = 1 + z) gives the Shiryaev-Roberts statistic and ``CUSUM``
(Psi(z) = max(1, z)) gives the CUSUM chart. CUSUM is propagated in the log
domain, SR in the linear domain with an overflow guard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

from .errors import NumericRangeError, ValidationError
from .model import Ar1Params, ChangeSpec, log_likelihood_ratio, step

SR_OVERFLOW_GUARD = 1e300


@dataclass(frozen=True)
class PsiKind:
    """Map applied to the previous statistic before multiplying by the LR."""

    name: str
    fn: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.name not in ("sr", "cusum", "custom"):
            raise ValidationError(f"unknown psi kind {self.name!r}")
        if self.name == "custom" and self.fn is None:
            raise ValidationError("custom psi needs a callable")

    def __call__(self, z: float) -> float:
        if self.name == "sr":
            return 1.0 + z
        if self.name == "cusum":
            return max(1.0, z)
        v = float(self.fn(z))
        if not v >= 0.0:
            raise ValidationError(f"custom psi must be non-negative on [0, inf), got psi({z}) = {v}")
        return v

    @property
    def code(self) -> int:
        """Integer tag understood by the compiled engine (SR=0, CUSUM=1)."""
        if self.name == "custom":
            raise ValidationError("custom psi is not supported by the batch engine")
        return 0 if self.name == "sr" else 1


SR = PsiKind("sr")
CUSUM = PsiKind("cusum")


def custom_psi(fn: Callable[[float], float]) -> PsiKind:
    return PsiKind("custom", fn)


def psi_from_name(name: str) -> PsiKind:
    key = name.strip().lower()
    if key == "sr":
        return SR
    if key == "cusum":
        return CUSUM
    raise ValidationError(f"detector must be 'sr' or 'cusum', got {name!r}")


@dataclass(frozen=True)
class DetectorSpec:
    psi: PsiKind
    threshold: float
    headstart: float = 0.0

    def __post_init__(self):
        if not (self.threshold > 0 and math.isfinite(self.threshold)):
            raise ValidationError(f"threshold must be positive and finite, got {self.threshold}")
        if not (self.headstart >= 0 and math.isfinite(self.headstart)):
            raise ValidationError(f"headstart must be non-negative and finite, got {self.headstart}")


@dataclass(frozen=True)
class DetectorState:
    """Statistic ``y``, last observation ``x_prev`` and step count ``n``.

    ``log_y`` is the canonical value for CUSUM; ``y`` is kept alongside it
    and may read ``inf`` once the CUSUM statistic leaves the double range.
    """

    psi: PsiKind
    y: float
    x_prev: float
    n: int
    log_y: float


@dataclass(frozen=True)
class StopResult:
    """Outcome of one run: either ``stopped_at`` or ``censored_at`` is set."""

    stopped_at: Optional[int] = None
    censored_at: Optional[int] = None

    @property
    def censored(self) -> bool:
        return self.censored_at is not None


def _log(y: float) -> float:
    return math.log(y) if y > 0 else -math.inf


def init(spec: DetectorSpec, x0: float) -> DetectorState:
    return DetectorState(spec.psi, spec.headstart, x0, 0, _log(spec.headstart))


def update(state: DetectorState, x_new: float, pre: Ar1Params, post: Ar1Params) -> DetectorState:
    n = state.n + 1
    llr = log_likelihood_ratio(pre, post, state.x_prev, x_new)
    if state.psi.name == "cusum":
        log_y = max(0.0, state.log_y) + llr
        if not math.isfinite(log_y):
            raise NumericRangeError(f"CUSUM log-statistic is not finite at step {n}", step=n)
        y = math.exp(log_y) if log_y < 709.0 else math.inf
        return DetectorState(state.psi, y, x_new, n, log_y)
    y = state.psi(state.y) * (math.exp(llr) if llr < 709.0 else math.inf)
    if not math.isfinite(y) or (state.psi.name == "sr" and y > SR_OVERFLOW_GUARD):
        raise NumericRangeError(f"{state.psi.name} statistic overflowed at step {n}", step=n)
    return DetectorState(state.psi, y, x_new, n, _log(y))


def crossed(state: DetectorState, threshold: float) -> bool:
    if state.psi.name == "cusum":
        return state.log_y >= math.log(threshold)
    return state.y >= threshold


def run_until_stop(spec: DetectorSpec, change: ChangeSpec, rng, max_steps: int) -> StopResult:
    """Simulate observations and run the detector until ``Y_n >= A`` or ``max_steps``.

    One ``rng.standard_normal()`` draw per observation, in order, matching the
    batch engine's stream layout.
    """
    if max_steps < 1:
        raise ValidationError(f"max_steps must be >= 1, got {max_steps}")
    state = init(spec, change.x0)
    for n in range(1, max_steps + 1):
        x = step(change.params_at(n), state.x_prev, float(rng.standard_normal()))
        state = update(state, x, change.pre, change.post)
        if crossed(state, spec.threshold):
            return StopResult(stopped_at=n)
    return StopResult(censored_at=max_steps)


def run_on_path(spec: DetectorSpec, path, pre: Ar1Params, post: Ar1Params, x0: float = 0.0):
    """Statistic trajectory over a fixed path. Returns ``(states, stop_index or None)``."""
    state = init(spec, x0)
    states = []
    stop = None
    for x in path:
        state = update(state, float(x), pre, post)
        states.append(state)
        if stop is None and crossed(state, spec.threshold):
            stop = state.n
    return states, stop


def with_threshold(spec: DetectorSpec, threshold: float) -> DetectorSpec:
    return replace(spec, threshold=threshold)
