"""Kernel estimates of the conditional law of Y given X.

Gaussian kernels are used both for weighting training rows by predictor
distance and for smoothing the response.  One predictor bandwidth ``h`` is
shared by all (z-scored) predictor columns; ``h0`` smooths the response.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from .data import Dataset, validate_dataset

SQRT_2PI = np.sqrt(2 * np.pi)
# exp() underflows to zero below this
_UNDERFLOW = 745.0


class UndefinedPoint(ValueError):
    """Every kernel weight vanishes at the query point."""


def _weights(xtrain: np.ndarray, x: np.ndarray, h: float) -> np.ndarray:
    """Unnormalised Gaussian product weights, rescaled so the largest is 1.

    The common factor cancels in every ratio the estimators form.  A query
    whose unscaled weights would all underflow is rejected.
    """
    q = ((xtrain - x) ** 2).sum(axis=1) / (2 * h * h)
    qmin = q.min()
    if qmin > _UNDERFLOW:
        raise UndefinedPoint(f"no training row has non-zero weight at x={x}")
    return np.exp(-(q - qmin))


def kernel_cond_cdf(ds: Dataset, x, y: float, h: float, h0: float) -> float:
    """Smoothed estimate of P(Y <= y | X = x)."""
    if h <= 0 or h0 <= 0:
        raise ValueError("bandwidths must be positive")
    x = np.asarray(x, dtype=np.float64).ravel()
    w = _weights(ds.x, x, h)
    # a weighted mean of values in [0, 1] can round one ulp outside it
    return float(np.clip(w @ ndtr((y - ds.y) / h0) / w.sum(), 0.0, 1.0))


@dataclass
class CKDEModel:
    x: np.ndarray          # z-scored predictors
    y: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    h: float
    h0: float
    score: float = float("nan")

    def __post_init__(self):
        if self.h <= 0 or self.h0 <= 0:
            raise ValueError("bandwidths must be positive")

    @classmethod
    def from_dataset(cls, ds: Dataset, h: float, h0: float, score=float("nan")) -> "CKDEModel":
        mean = ds.x.mean(axis=0)
        scale = ds.x.std(axis=0)
        scale[scale == 0] = 1.0
        return cls((ds.x - mean) / scale, ds.y.copy(), mean, scale, h, h0, score)

    def scaled(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64).ravel() - self.x_mean) / self.x_scale


def default_grid(points: int = 20, lo: float = 0.05, hi: float = 2.0):
    axis = np.geomspace(lo, hi, points)
    return [(float(h), float(h0)) for h, h0 in itertools.product(axis, axis)]


def loo_scores(model_x: np.ndarray, y: np.ndarray, grid: Sequence, chunk: int = 256) -> np.ndarray:
    """Leave-one-out conditional log-likelihood for every ``(h, h0)`` in ``grid``.

    Rows identical to row i (predictors and response) are left out together
    with it; for continuous data that is ordinary leave-one-out.
    """
    n = y.shape[0]
    grid = [(float(h), float(h0)) for h, h0 in grid]
    hs = sorted({h for h, _ in grid})
    h0s = sorted({h0 for _, h0 in grid})
    totals = {g: 0.0 for g in grid}
    sq = (model_x**2).sum(axis=1)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        d2x = sq[start:stop, None] + sq[None, :] - 2 * model_x[start:stop] @ model_x.T
        np.maximum(d2x, 0.0, out=d2x)
        dy = y[start:stop, None] - y[None, :]
        same = (d2x == 0) & (dy == 0)
        same[np.arange(stop - start), np.arange(start, stop)] = True
        d2x[same] = np.inf
        row_min = d2x.min(axis=1, keepdims=True)
        row_min[~np.isfinite(row_min)] = 0.0
        shifted = d2x - row_min
        resp = {h0: np.exp(-0.5 * (dy / h0) ** 2) / (h0 * SQRT_2PI) for h0 in h0s}
        for h in hs:
            w = np.exp(-shifted / (2 * h * h))
            den = w.sum(axis=1)
            for h0 in h0s:
                if (h, h0) not in totals:
                    continue
                num = np.einsum("ij,ij->i", w, resp[h0])
                with np.errstate(divide="ignore", invalid="ignore"):
                    totals[(h, h0)] += float(np.log(num / den).sum())
    return np.array([totals[g] for g in grid])


def ckde_fit(ds: Dataset, bandwidth_grid: Optional[Sequence] = None) -> CKDEModel:
    """Pick ``(h, h0)`` by leave-one-out maximum likelihood.

    Ties go to the larger response bandwidth, then the larger predictor bandwidth.
    """
    validate_dataset(ds)
    grid = default_grid() if bandwidth_grid is None else list(bandwidth_grid)
    if not grid:
        raise ValueError("bandwidth grid is empty")
    if len(grid) == 1:
        h, h0 = grid[0]
        return CKDEModel.from_dataset(ds, float(h), float(h0))
    # likelihood cross-validation has nothing to compare on constant data
    if np.all(ds.x.std(axis=0) == 0) and ds.y.std() == 0:
        raise ValueError("degenerate data: every column is constant")
    base = CKDEModel.from_dataset(ds, 1.0, 1.0)
    scores = loo_scores(base.x, base.y, grid)
    scores = np.where(np.isnan(scores), -np.inf, scores)
    best = max(range(len(grid)), key=lambda k: (scores[k], grid[k][1], grid[k][0]))
    h, h0 = grid[best]
    return CKDEModel.from_dataset(ds, float(h), float(h0), float(scores[best]))


def conditional_density(model: CKDEModel, x, ys) -> np.ndarray:
    w = _weights(model.x, model.scaled(x), model.h)
    ys = np.asarray(ys, dtype=np.float64)
    u = (ys[:, None] - model.y[None, :]) / model.h0
    return (np.exp(-0.5 * u * u) @ w) / (w.sum() * model.h0 * SQRT_2PI)


INTEGRATION_STEPS = 1000
WINDOW_WIDTHS = 3


def integration_grid(model: CKDEModel):
    pad = 3 * model.h0 * WINDOW_WIDTHS
    lo, hi = model.y.min() - pad, model.y.max() + pad
    step = (hi - lo) / INTEGRATION_STEPS
    return lo + step * (np.arange(INTEGRATION_STEPS) + 0.5), step


def density_mass(model: CKDEModel, x) -> float:
    """Midpoint-rule integral of the conditional density over the window."""
    ys, step = integration_grid(model)
    return float(conditional_density(model, x, ys).sum() * step)


def ckde_mean(model: CKDEModel, x) -> float:
    """E(Y | x) by the midpoint rule with 1000 cells, normalised by the density mass."""
    ys, _ = integration_grid(model)
    f = conditional_density(model, x, ys)
    return float((ys * f).sum() / f.sum())


def kolmogorov_distance(a, b) -> float:
    """sup_t |F_a(t) - F_b(t)| between two empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.abs(fa - fb).max())
