"""Prediction intervals and the order-statistic helpers they are built from."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

METHODS = ("QPI", "PPI", "PI-KL", "PI-WA")


class InsufficientSamples(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    center: Optional[float]
    alpha: float
    method: str

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.method not in METHODS:
            raise ValueError(f"unknown interval method {self.method!r}")

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, y) -> np.ndarray:
        y = np.asarray(y)
        return (y >= self.lower) & (y <= self.upper)


def min_draws(alpha: float) -> int:
    """Smallest sample size for which both tail quantiles are distinct order statistics."""
    return math.ceil(2.0 / alpha)


def _rank(q: float, size: int) -> int:
    # 1-based rank ceil(q * size); the tiny slack keeps e.g. 0.025 * 200 at 5
    # instead of 6 when the product lands a hair above an integer
    r = math.ceil(q * size - 1e-9 * size)
    return min(max(r, 1), size)


def empirical_quantile(v, q: float) -> float:
    """Type-1 quantile: the ceil(q * len)-th smallest element of ``v``."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("empty sample")
    k = _rank(q, v.size) - 1
    return float(np.partition(v, k)[k])


def tail_quantiles(samples: np.ndarray, alpha: float):
    """Lower and upper type-1 quantiles along the last axis of ``samples``."""
    samples = np.asarray(samples, dtype=np.float64)
    size = samples.shape[-1]
    lo = _rank(alpha / 2, size) - 1
    hi = _rank(1 - alpha / 2, size) - 1
    part = np.partition(samples, (lo, hi), axis=-1)
    return part[..., lo], part[..., hi]


def lower_median(v) -> float:
    """Median; for even length the lower of the two middle order statistics."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("empty sample")
    k = (v.size - 1) // 2
    return float(np.partition(v, k)[k])


def interval_from_samples(samples, alpha: float, method: str = "QPI") -> Interval:
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if samples.size < min_draws(alpha):
        raise InsufficientSamples(
            f"{samples.size} draws cannot resolve alpha={alpha}; need >= {min_draws(alpha)}"
        )
    lo, hi = tail_quantiles(samples, alpha)
    return Interval(float(lo), float(hi), float(samples.mean()), alpha, method)


def empirical_coverage(intervals: Sequence[Interval], y) -> float:
    y = np.asarray(y, dtype=np.float64)
    if len(intervals) != y.shape[0]:
        raise ValueError("one interval per response is required")
    hits = sum(bool(iv.lower <= yv <= iv.upper) for iv, yv in zip(intervals, y))
    return hits / len(intervals)


def early_stop_check(intervals: Sequence[Interval], validation, alpha: float) -> bool:
    """True once the validation coverage reaches the nominal level (inclusive)."""
    return empirical_coverage(intervals, validation.y) >= 1 - alpha
