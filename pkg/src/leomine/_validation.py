"""Small argument checks shared by the estimators and functional API."""
from __future__ import annotations

import math
from typing import Iterable, Sequence


def check_threshold(tau: float, name: str = "threshold") -> float:
    """Strong-sentiment thresholds must lie in (0.5, 1] so labels stay exclusive."""
    from .sentiment import InvalidThreshold

    try:
        tau = float(tau)
    except (TypeError, ValueError):
        raise InvalidThreshold(f"{name} must be a real number, got {tau!r}") from None
    if not (0.5 < tau <= 1.0):
        raise InvalidThreshold(f"{name} must be in (0.5, 1], got {tau}")
    return tau


def check_positive(value, name: str, *, allow_zero: bool = False):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"{name} must be {bound}, got {value}")
    return value


def check_int(value, name: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_finite_values(values: Iterable[float], name: str = "values") -> list[float]:
    out = [float(v) for v in values]
    for v in out:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v}")
    return out


def check_fractions(fractions: Sequence[float]) -> tuple[float, ...]:
    out = tuple(float(f) for f in fractions)
    for f in out:
        if not (0.0 < f <= 1.0):
            raise ValueError(f"subsample fraction must be in (0, 1], got {f}")
    return out
