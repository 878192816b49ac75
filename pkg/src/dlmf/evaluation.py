"""Simulation protocol: point-prediction error and coverage at three conditioning levels.

Test points are drawn once per experiment from the stream labelled ``test`` and
shared by every method and replicate.  Replicate ``r`` draws its training and
validation data from ``replicate/r/...`` streams, so replicates can run in any
order (or in parallel) without changing the numbers.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ckde import ckde_fit, ckde_mean
from .data import CoverageReport, Dataset, ExperimentConfig
from .generators import AdversarialSpec, train_dg
from .intervals import Interval, early_stop_check, tail_quantiles  # noqa: F401  (re-export)
from .nn import EarlyStop, TrainSpec
from .ppi import bootstrap_roots, intervals_from_roots
from .reference import ReferenceDist, RngStream
from .simgen import (
    check_model,
    generate_model_data,
    sample_conditional,
    sample_predictors,
    true_conditional_mean,
)
from .transform import TrainedTransform, predict_samples_many, train_transform

POINT_METHODS = ("dlmf", "dgkl", "dgwa", "ckde", "oracle")
PI_METHODS = {"qpi": "QPI", "ppi": "PPI", "pikl": "PI-KL", "piwa": "PI-WA", "inf": "INF"}
# oracle draws evaluated per vectorised block in coverage estimation
_ORACLE_BLOCK = 1 << 20


@dataclass
class PointErrorReport:
    per_point: np.ndarray
    aggregate: float

    def __post_init__(self):
        if np.any(self.per_point < 0):
            raise ValueError("squared errors cannot be negative")


def point_error(truth, preds) -> PointErrorReport:
    """Per-test-point mean squared error over replicates, and its average."""
    truth = np.asarray(truth, dtype=np.float64).ravel()
    preds = np.atleast_2d(np.asarray(preds, dtype=np.float64))
    if preds.shape[1] != truth.shape[0]:
        raise ValueError(f"preds have {preds.shape[1]} columns for {truth.shape[0]} test points")
    per_point = ((preds - truth[None, :]) ** 2).mean(axis=0)
    return PointErrorReport(per_point, float(per_point.mean()))


def estimate_cv3(interval: Interval, model_id: str, x, S_prime: int, rng: RngStream) -> float:
    """Share of ``S_prime`` exact conditional draws at ``x`` that land in the interval."""
    draws = sample_conditional(model_id, x, S_prime, rng)
    return float(np.count_nonzero((draws >= interval.lower) & (draws <= interval.upper)) / S_prime)


def aggregate_coverage(cv3, lengths, method: str = "") -> CoverageReport:
    """Collapse (R, T) coverage and length matrices into the summary statistics.

    CV2 averages over replicates at each test point, CV1 averages CV2 over test
    points; both spreads are sample standard deviations over the T test points.
    """
    cv3 = np.atleast_2d(np.asarray(cv3, dtype=np.float64))
    lengths = np.atleast_2d(np.asarray(lengths, dtype=np.float64))
    if cv3.shape != lengths.shape:
        raise ValueError("coverage and length matrices must have the same shape")
    cv2 = cv3.mean(axis=0)
    mean_len = lengths.mean(axis=0)
    ddof = 1 if cv2.size > 1 else 0
    # an unbounded stub interval has infinite lengths and an undefined spread
    with np.errstate(invalid="ignore"):
        sigma_len = float(mean_len.std(ddof=ddof))
    return CoverageReport(
        method=method,
        cv1=float(cv2.mean()),
        sigma_pi=float(cv2.std(ddof=ddof)),
        al=float(mean_len.mean()),
        sigma_len=sigma_len,
        cv2=cv2,
        mean_len=mean_len,
        cv3=cv3,
        lengths=lengths,
    )


def draw_test_points(cfg: ExperimentConfig) -> np.ndarray:
    return sample_predictors(cfg.T, RngStream(cfg.master_seed, "test"))


def _replicate_stream(cfg, r) -> RngStream:
    return RngStream(cfg.master_seed, f"replicate/{r}")


def train_spec(cfg: ExperimentConfig, rng: RngStream, hidden=None, early_stop=None) -> TrainSpec:
    return TrainSpec(
        epochs=cfg.epochs,
        lr=cfg.lr,
        clip_m=cfg.clip_m,
        optimizer=cfg.optimizer,
        seed=rng.seed_for("init"),
        hidden=cfg.hidden if hidden is None else hidden,
        early_stop=early_stop,
    )


def adversarial_spec(cfg: ExperimentConfig, loss: str, rng: RngStream, early_stop=None) -> AdversarialSpec:
    gen = train_spec(cfg, rng, hidden=cfg.gen_hidden, early_stop=early_stop)
    return AdversarialSpec(gen_spec=gen, disc_hidden=cfg.disc_hidden, loss=loss,
                           b1=cfg.clip_m, b2=cfg.clip_m, b3=cfg.clip_m)


def fit_method(method: str, ds: Dataset, cfg: ExperimentConfig, rng: RngStream,
               early_stop=None) -> TrainedTransform:
    ref = ReferenceDist.parse(cfg.ref)
    if method == "dlmf":
        return train_transform(ds, ref, train_spec(cfg, rng, early_stop=early_stop), rng)
    if method in ("dgkl", "dgwa"):
        spec = adversarial_spec(cfg, method[2:].upper(), rng, early_stop)
        return train_dg(ds, ref, spec, rng)
    raise ValueError(f"not a trainable method: {method!r}")


def _point_replicate(args):
    cfg, method, r, xs = args
    rng = _replicate_stream(cfg, r)
    ds = generate_model_data(cfg.model, cfg.n, rng.child("data"))
    if method == "oracle":
        return true_conditional_mean(cfg.model, xs)
    if method == "ckde":
        model = ckde_fit(ds)
        return np.array([ckde_mean(model, x) for x in xs])
    t = fit_method(method, ds, cfg, rng.child(method))
    return predict_samples_many(t, xs, cfg.S, rng.child(method, "predict")).mean(axis=1)


def _map(fn, jobs, n_jobs):
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def point_predictions(cfg: ExperimentConfig, method: str):
    """(truth (T,), predictions (R, T)) for one method."""
    method = method.lower()
    if method not in POINT_METHODS:
        raise ValueError(f"unknown point method {method!r}")
    check_model(cfg.model)
    xs = draw_test_points(cfg)
    preds = _map(_point_replicate, [(cfg, method, r, xs) for r in range(cfg.R)], cfg.n_jobs)
    return true_conditional_mean(cfg.model, xs), np.vstack(preds)


def run_point_experiment(cfg: ExperimentConfig, method: str) -> PointErrorReport:
    truth, preds = point_predictions(cfg, method)
    return point_error(truth, preds)


def _validation_stop(cfg, rng):
    if not cfg.early_stop:
        return None
    val = generate_model_data(cfg.model, cfg.V, rng.child("validation"))
    return EarlyStop(period=cfg.O, alpha=cfg.alpha, validation=val, draws=cfg.S)


def replicate_intervals(cfg: ExperimentConfig, r: int, methods, xs, n_jobs: int = 1):
    """Intervals of every requested method at every test point, for replicate ``r``.

    Returns ``{method: (lower (T,), upper (T,))}`` plus ``meta`` with the
    epochs each fit ran.
    """
    rng = _replicate_stream(cfg, r)
    ds = generate_model_data(cfg.model, cfg.n, rng.child("data"))
    es = _validation_stop(cfg, rng)
    out, meta = {}, {}
    if "inf" in methods:
        # the whole real line; a sanity stub that always covers
        out["inf"] = (np.full(len(xs), -np.inf), np.full(len(xs), np.inf))
    if {"qpi", "ppi"} & set(methods):
        base = fit_method("dlmf", ds, cfg, rng.child("dlmf"), es)
        meta["dlmf"] = base.meta
        samples = predict_samples_many(base, xs, cfg.S, rng.child("dlmf", "center"))
        if "qpi" in methods:
            out["qpi"] = tail_quantiles(samples, cfg.alpha)
        if "ppi" in methods:
            spec = train_spec(cfg, rng.child("dlmf"))
            roots = bootstrap_roots(base, ds, xs, spec, cfg.B, cfg.S, rng.child("dlmf"), n_jobs)
            ivs = intervals_from_roots(samples.mean(axis=1), roots, cfg.alpha)
            out["ppi"] = (np.array([iv.lower for iv in ivs]), np.array([iv.upper for iv in ivs]))
    for method in ("pikl", "piwa"):
        if method in methods:
            fit = "dg" + method[2:]
            t = fit_method(fit, ds, cfg, rng.child(fit), es)
            meta[fit] = t.meta
            samples = predict_samples_many(t, xs, cfg.S, rng.child(fit, "predict"))
            out[method] = tail_quantiles(samples, cfg.alpha)
    return out, meta


def coverage_rows(cfg: ExperimentConfig, r: int, bounds: dict, xs) -> dict:
    """CV3 and length rows for replicate ``r`` from interval bounds."""
    rng = _replicate_stream(cfg, r).child("oracle")
    rows = {m: (np.empty(len(xs)), hi - lo) for m, (lo, hi) in bounds.items()}
    for j, x in enumerate(xs):
        draws = sample_conditional(cfg.model, x, cfg.S_prime, rng.child(j))
        for m, (lo, hi) in bounds.items():
            rows[m][0][j] = np.count_nonzero((draws >= lo[j]) & (draws <= hi[j])) / cfg.S_prime
    return rows


def _coverage_replicate(args):
    cfg, r, methods, xs, inner_jobs = args
    bounds, meta = replicate_intervals(cfg, r, methods, xs, inner_jobs)
    return coverage_rows(cfg, r, bounds, xs), meta


def run_coverage_methods(cfg: ExperimentConfig, methods) -> dict:
    """Coverage reports for several interval methods sharing fits and test points."""
    methods = [m.lower() for m in methods]
    for m in methods:
        if m not in PI_METHODS:
            raise ValueError(f"unknown interval method {m!r}")
    check_model(cfg.model)
    if "ppi" in methods and cfg.B < math.ceil(2 / cfg.alpha):
        raise ValueError(f"B={cfg.B} too small for alpha={cfg.alpha}")
    xs = draw_test_points(cfg)
    # parallelise over replicates when there are several, else over bootstrap refits
    outer = cfg.n_jobs if cfg.R > 1 else 1
    inner = 1 if outer > 1 else cfg.n_jobs
    jobs = [(cfg, r, methods, xs, inner) for r in range(cfg.R)]
    results = _map(_coverage_replicate, jobs, outer)
    reports = {}
    for m in methods:
        cv3 = np.vstack([res[0][m][0] for res in results])
        lengths = np.vstack([res[0][m][1] for res in results])
        reports[m] = aggregate_coverage(cv3, lengths, PI_METHODS[m])
    return reports


def run_coverage_experiment(cfg: ExperimentConfig, method: str) -> CoverageReport:
    return run_coverage_methods(cfg, [method])[method.lower()]


def write_point_report(path, rows) -> None:
    """``rows``: iterables of (method, p, optimizer, L_tilde)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "p", "optimizer", "L_tilde"])
        for method, p, opt, value in rows:
            w.writerow([method, p, opt, repr(float(value))])


def write_coverage_report(path, rows) -> None:
    """``rows``: (p, n, CoverageReport) triples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "p", "n", "CV1", "sigma_PI", "AL", "sigma_Len"])
        for p, n, rep in rows:
            w.writerow([rep.method, p, n, repr(rep.cv1), repr(rep.sigma_pi),
                        repr(rep.al), repr(rep.sigma_len)])


def write_cv2_histograms(outdir, report: CoverageReport, alpha: float):
    """All CV2 values, and the ones below the nominal level, one per line."""
    tag = report.method.lower().replace("-", "")
    paths = (os.path.join(outdir, f"cv2_hist_{tag}.csv"),
             os.path.join(outdir, f"cv2_hist_{tag}_under.csv"))
    cv2 = np.asarray(report.cv2)
    for path, values in zip(paths, (cv2, cv2[cv2 < 1 - alpha])):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cv2"])
            for v in values:
                w.writerow([repr(float(v))])
    return paths
