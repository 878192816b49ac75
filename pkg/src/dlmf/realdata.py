"""Real-data protocol: seeded split, predictor scaling, and the wine-quality tables.

A small training set is drawn at random; of the rows left over, 20% form the
validation set used for early stopping and the other 80% the test set on which
prediction error and interval coverage are measured.
"""

from __future__ import annotations

import csv
import dataclasses
import os
from dataclasses import dataclass

import numpy as np

from .data import Dataset, ExperimentConfig, validate_dataset
from .evaluation import adversarial_spec, train_spec
from .generators import train_dg
from .intervals import tail_quantiles
from .io import load_csv
from .nn import EarlyStop
from .ppi import bootstrap_roots, intervals_from_roots
from .reference import ReferenceDist, RngStream
from .transform import predict_samples_many, train_transform

VALIDATION_SHARE = 0.2


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray


def split_indices(n: int, n_train: int, seed: int) -> Split:
    if not 1 <= n_train < n:
        raise ValueError(f"n_train must be in [1, {n}), got {n_train}")
    perm = RngStream(seed, "split").gen.permutation(n)
    rest = perm[n_train:]
    n_val = int(round(VALIDATION_SHARE * rest.size))
    return Split(perm[:n_train], rest[:n_val], rest[n_val:])


def split_real_data(ds: Dataset, n_train: int, seed: int):
    """(train, validation, test) subsets after a seeded shuffle."""
    s = split_indices(ds.n, n_train, seed)
    return ds.subset(s.train), ds.subset(s.validation), ds.subset(s.test)


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    def apply(self, ds: Dataset) -> Dataset:
        return Dataset((ds.x - self.mean) / self.scale, ds.y, ds.feature_names)


def standardize_fit_apply(train: Dataset, *others: Dataset):
    """Fit per-predictor z-scores on ``train`` and apply them to every split.

    Constant columns keep scale 1 so they are only centred.
    """
    mean = train.x.mean(axis=0)
    scale = train.x.std(axis=0)
    scale[scale == 0] = 1.0
    scaler = Scaler(mean, scale)
    return scaler, tuple(scaler.apply(ds) for ds in (train, *others))


@dataclass
class WineRow:
    dataset: str
    method: str
    p: int
    mspe: float = float("nan")
    coverage: float = float("nan")
    length: float = float("nan")


def _bounds_rows(name, tag, p, lo, hi, y):
    return WineRow(name, tag, p, coverage=float(np.mean((y >= lo) & (y <= hi))),
                   length=float(np.mean(hi - lo)))


def evaluate_real(name: str, train: Dataset, val: Dataset, test: Dataset, cfg: ExperimentConfig,
                  p: int, methods=("dlmf", "dgkl", "dgwa"), intervals=("qpi", "ppi", "pikl", "piwa")):
    """Rows of (method, p, MSPE) and (interval, p, coverage, length) on the test split."""
    ref = ReferenceDist.parse(cfg.ref)
    ref = dataclasses.replace(ref, p=p)
    local = dataclasses.replace(cfg, ref=str(ref))
    rng = RngStream(cfg.master_seed, f"{name}/p{p}")
    es = EarlyStop(cfg.O, cfg.alpha, val, draws=cfg.S) if cfg.early_stop else None
    rows = []
    need_dlmf = "dlmf" in methods or {"qpi", "ppi"} & set(intervals)
    if need_dlmf:
        r = rng.child("dlmf")
        base = train_transform(train, ref, train_spec(local, r, early_stop=es), r)
        samples = predict_samples_many(base, test.x, cfg.S, r.child("center"))
        centers = samples.mean(axis=1)
        if "dlmf" in methods:
            rows.append(WineRow(name, "DLMF", p, mspe=float(np.mean((test.y - centers) ** 2))))
        if "qpi" in intervals:
            rows.append(_bounds_rows(name, "QPI", p, *tail_quantiles(samples, cfg.alpha), test.y))
        if "ppi" in intervals:
            roots = bootstrap_roots(base, train, test.x, train_spec(local, r), cfg.B, cfg.S, r,
                                    cfg.n_jobs)
            ivs = intervals_from_roots(centers, roots, cfg.alpha)
            lo = np.array([iv.lower for iv in ivs])
            hi = np.array([iv.upper for iv in ivs])
            rows.append(_bounds_rows(name, "PPI", p, lo, hi, test.y))
    for fit, tag, pi_key, pi_tag in (("dgkl", "DG-KL", "pikl", "PI-KL"), ("dgwa", "DG-WA", "piwa", "PI-WA")):
        if fit not in methods and pi_key not in intervals:
            continue
        r = rng.child(fit)
        t = train_dg(train, ref, adversarial_spec(local, fit[2:].upper(), r, es), r)
        samples = predict_samples_many(t, test.x, cfg.S, r.child("predict"))
        if fit in methods:
            rows.append(WineRow(name, tag, p, mspe=float(np.mean((test.y - samples.mean(axis=1)) ** 2))))
        if pi_key in intervals:
            rows.append(_bounds_rows(name, pi_tag, p, *tail_quantiles(samples, cfg.alpha), test.y))
    return rows


def run_wine_pipeline(cfg: ExperimentConfig, paths, ps=(5, 10, 15, 20, 25),
                      methods=("dlmf", "dgkl", "dgwa"), intervals=("qpi", "ppi", "pikl", "piwa"),
                      n_train=None):
    """Tables of test MSPE and interval coverage/length for each CSV and each p.

    ``paths`` maps a dataset name to its CSV; ``n_train`` maps the same names
    to training sizes (default ``cfg.n`` for all).  Returns ``(rows, splits)``.
    """
    rows, splits = [], {}
    for name, path in paths.items():
        ds = load_csv(path, cfg.delimiter, cfg.target)
        validate_dataset(ds)
        size = cfg.n if n_train is None else n_train[name]
        split = split_indices(ds.n, size, cfg.master_seed)
        splits[name] = split
        parts = ds.subset(split.train), ds.subset(split.validation), ds.subset(split.test)
        if cfg.standardize:
            _, parts = standardize_fit_apply(*parts)
        for p in ps:
            rows.extend(evaluate_real(name, *parts, cfg, p, methods, intervals))
    return rows, splits


def write_wine_report(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "method", "p", "MSPE", "coverage", "length"])
        for r in rows:
            w.writerow([r.dataset, r.method, r.p, repr(r.mspe), repr(r.coverage), repr(r.length)])


def write_split_manifest(outdir, splits: dict) -> str:
    """Row indices of every split, so a run's partition can be audited."""
    path = os.path.join(outdir, "split_manifest.csv")
    with open(path, "w") as fh:
        fh.write("dataset,part,row\n")
        for name, s in splits.items():
            for part in ("train", "validation", "test"):
                for i in getattr(s, part):
                    fh.write(f"{name},{part},{int(i)}\n")
    return path
