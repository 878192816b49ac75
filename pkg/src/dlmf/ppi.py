"""Pertinent prediction intervals from bootstrap predictive roots.

Each bootstrap replicate regenerates the responses from the fitted transform
(fixed design: the predictors never move), refits a fresh network with the same
recipe, and records the root ``Y*_f - mean H*(x_f, Z)``.  The interval is the
base L2 prediction shifted by the lower and upper type-1 quantiles of the roots.

A retrained network does not depend on the test point, so when intervals are
wanted at many test points the ``B`` refits are shared across all of them; the
single-point functions are the one-row case of the batched ones.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .data import Dataset, validate_dataset
from .intervals import Interval, InsufficientSamples, min_draws, tail_quantiles
from .nn import TrainSpec, forward_batch
from .reference import ReferenceDist, RngStream, sample_reference
from .transform import TrainedTransform, predict_samples_many, train_transform


@dataclass
class PPIConfig:
    B: int
    S: int
    retrain_spec: TrainSpec
    alpha: float = 0.05

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.B < min_draws(self.alpha):
            raise InsufficientSamples(
                f"B={self.B} roots cannot resolve alpha={self.alpha}; need >= {min_draws(self.alpha)}"
            )
        if self.S < 1:
            raise ValueError("S must be >= 1")


def retrain_budget(base: TrainedTransform, spec: TrainSpec) -> int:
    # an early-stopped base fit fixes the budget for every replicate
    if base.meta.stopped_early:
        return base.meta.epochs_run
    return spec.epochs


def bootstrap_transform(base: TrainedTransform, ds: Dataset, spec: TrainSpec,
                        rng: RngStream) -> TrainedTransform:
    """One bootstrap refit: Y*_j = H(X_j, Z*_j), then retrain from a fresh init."""
    z_star = sample_reference(base.ref, ds.n, rng.child("zstar"))
    y_star = forward_batch(base.net, np.hstack([ds.x, z_star]))
    boot = Dataset(ds.x, y_star, ds.feature_names)
    boot_spec = replace(
        spec,
        seed=rng.seed_for("init"),
        epochs=retrain_budget(base, spec),
        early_stop=None,
    )
    return train_transform(boot, base.ref, boot_spec, rng.child("fit"))


def _roots_at(base, boot, xs, S, rng):
    """Roots at every row of ``xs`` for one refitted network ``boot``."""
    centers = predict_samples_many(boot, xs, S, rng.child("center")).mean(axis=1)
    z_f = np.vstack([sample_reference(base.ref, 1, rng.child("zf", j)) for j in range(len(xs))])
    y_f = forward_batch(base.net, np.hstack([xs, z_f]))
    return y_f - centers


def bootstrap_root(base: TrainedTransform, ds: Dataset, x_f, spec: TrainSpec, S: int,
                   rng: RngStream) -> float:
    xs = np.atleast_2d(np.asarray(x_f, dtype=np.float64))
    boot = bootstrap_transform(base, ds, spec, rng)
    return float(_roots_at(base, boot, xs, S, rng)[0])


def _replicate(args):
    base, ds, xs, spec, S, seed, label = args
    rng = RngStream(seed, label)
    boot = bootstrap_transform(base, ds, spec, rng)
    return _roots_at(base, boot, xs, S, rng)


def bootstrap_roots(base: TrainedTransform, ds: Dataset, xs, spec: TrainSpec, B: int,
                    S: int, rng: RngStream, n_jobs: int = 1) -> np.ndarray:
    """(B, T) matrix of roots; replicate ``b`` uses the stream ``rng/boot/b``.

    The result is the same for any ``n_jobs``: every replicate owns its stream
    and rows are assembled by replicate index.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    jobs = [
        (base, ds, xs, spec, S, rng.master_seed, rng.child("boot", b).label)
        for b in range(B)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_replicate, jobs))
    else:
        rows = [_replicate(job) for job in jobs]
    return np.vstack(rows)


def intervals_from_roots(centers, roots: np.ndarray, alpha: float):
    """PPIs from base centers (T,) and a (B, T) root matrix."""
    roots = np.sort(np.asarray(roots, dtype=np.float64), axis=0)
    q_lo, q_hi = tail_quantiles(roots.T, alpha)
    return [
        Interval(float(c + a), float(c + b), float(c), alpha, "PPI")
        for c, a, b in zip(np.asarray(centers), q_lo, q_hi)
    ]


def pertinent_pi_many(ds: Dataset, xs, ref: ReferenceDist, spec: TrainSpec, cfg: PPIConfig,
                      rng: RngStream, prefit: Optional[TrainedTransform] = None,
                      n_jobs: int = 1, return_roots: bool = False):
    validate_dataset(ds)
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    base = prefit if prefit is not None else train_transform(ds, ref, spec, rng.child("base"))
    centers = predict_samples_many(base, xs, cfg.S, rng.child("center")).mean(axis=1)
    roots = bootstrap_roots(base, ds, xs, cfg.retrain_spec, cfg.B, cfg.S, rng, n_jobs)
    ivs = intervals_from_roots(centers, roots, cfg.alpha)
    return (ivs, roots) if return_roots else ivs


def pertinent_pi(ds: Dataset, x_f, ref: ReferenceDist, spec: TrainSpec, cfg: PPIConfig,
                 rng: RngStream, prefit: Optional[TrainedTransform] = None,
                 n_jobs: int = 1) -> Interval:
    return pertinent_pi_many(ds, np.atleast_2d(x_f), ref, spec, cfg, rng, prefit, n_jobs)[0]


def write_roots_csv(path, roots) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for r in np.asarray(roots, dtype=np.float64).ravel():
            writer.writerow([repr(float(r))])
