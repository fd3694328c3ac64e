"""Experiment configuration files: flat UTF-8 ``key = value`` lines, ``#`` comments.

Keys are exactly the :class:`ExperimentConfig` field names. Lists are written
comma-separated. ``dumps(loads(text))`` is a fixed point after one round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional

from .errors import ValidationError

DETECTORS = ("sr", "cusum")
TABLES = ("operating-characteristics", "add0-addinf")
MODES = ("replication", "calibration")


@dataclass(frozen=True)
class ExperimentConfig:
    # model
    mu_pre: float = 0.0
    lambda_pre: float = 0.0
    mu_post: float = 1.0
    lambda_post: float = 0.0
    x0: float = 0.0
    change_point: Optional[int] = None  # None means no change
    # detector
    detector: str = "cusum"
    threshold: Optional[float] = None
    target_gamma: Optional[float] = None
    headstart: float = 0.0
    # Monte Carlo
    replications: int = 10_000
    master_seed: Optional[int] = None
    epsilon: float = 0.05
    closeness_w: float = 0.01
    max_steps: Optional[int] = None
    lower_bound: bool = False
    # per-subcommand knobs
    rel_tol: float = 0.01
    k: int = 0
    k_sweep: Optional[tuple] = None
    add_inf: bool = False
    gamma_grid: Optional[tuple] = None
    lambda_grid: Optional[tuple] = None
    threshold_grid: Optional[tuple] = None
    table: str = "operating-characteristics"
    mode: str = "replication"
    regime: str = "pre"
    n: int = 100
    y1: float = 0.0
    x1: float = 0.0
    samples: int = 100_000
    grid_points: int = 20
    output_path: Optional[str] = None

    def __post_init__(self):
        if self.threshold is not None and self.target_gamma is not None:
            raise ValidationError("set at most one of threshold and target_gamma")
        if self.detector not in DETECTORS:
            raise ValidationError(f"detector must be one of {DETECTORS}, got {self.detector!r}")
        if self.table not in TABLES:
            raise ValidationError(f"table must be one of {TABLES}, got {self.table!r}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.regime not in ("pre", "post"):
            raise ValidationError(f"regime must be 'pre' or 'post', got {self.regime!r}")
        for name in ("lambda_pre", "lambda_post"):
            v = getattr(self, name)
            if not abs(v) < 1:
                raise ValidationError(f"|{name}| must be < 1, got {v}")
        if self.master_seed is not None and not 0 <= self.master_seed < 2**64:
            raise ValidationError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        for name in ("replications", "n", "samples", "grid_points"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.k < 0:
            raise ValidationError(f"k must be >= 0, got {self.k}")
        if self.change_point is not None and self.change_point < 0:
            raise ValidationError(f"change_point must be >= 0, got {self.change_point}")


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_INTS = {"change_point", "replications", "master_seed", "max_steps", "k", "n", "samples",
         "grid_points"}
_BOOLS = {"lower_bound", "add_inf"}
_STRS = {"detector", "table", "mode", "regime", "output_path"}
_INT_LISTS = {"k_sweep"}
_FLOAT_LISTS = {"gamma_grid", "lambda_grid", "threshold_grid"}


def _parse_int(key, text):
    try:
        return int(text, 10)
    except ValueError:
        raise ValidationError(f"{key}: expected an integer, got {text!r}") from None


def _parse_float(key, text):
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"{key}: expected a number, got {text!r}") from None
    if math.isnan(v):
        raise ValidationError(f"{key}: NaN is not allowed")
    return v


def _parse_value(key, text):
    if text.lower() in ("", "none"):
        if _FIELDS[key].default is None:
            return None
        raise ValidationError(f"{key} cannot be empty")
    if key in _INTS:
        return _parse_int(key, text)
    if key in _BOOLS:
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValidationError(f"{key}: expected true/false, got {text!r}")
    if key in _STRS:
        return text
    if key in _INT_LISTS:
        return tuple(_parse_int(key, t.strip()) for t in text.split(",") if t.strip())
    if key in _FLOAT_LISTS:
        return tuple(_parse_float(key, t.strip()) for t in text.split(",") if t.strip())
    return _parse_float(key, text)


def loads(text: str, **overrides) -> ExperimentConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ValidationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValidationError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, val)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load(path, **overrides) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), **overrides)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps(cfg: ExperimentConfig) -> str:
    """Serialise every field that is set, in declaration order."""
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if value is not None:
            lines.append(f"{name} = {_format(value)}")
    return "\n".join(lines) + "\n"
