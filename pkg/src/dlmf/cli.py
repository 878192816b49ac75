"""Command-line entry point.

Every subcommand starts from the defaults of :class:`ExperimentConfig`, applies
``--config`` (a ``key = value`` file), then ``--set key=value`` overrides, then
the dedicated flags.  The effective config is written to ``manifest.txt`` in the
output directory next to the results.

    dlmf simulate --n 500 --out runs/sim
    dlmf point-experiment --config configs/desk_point.cfg --method dlmf --p 5 --out runs/pt
    dlmf coverage-experiment --config configs/desk_coverage.cfg --pi qpi ppi --p 5 --out runs/cov
    dlmf wine --red winequality-red.csv --p 25 --out runs/wine
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from .ckde import ckde_fit
from .data import ExperimentConfig
from .evaluation import (
    PI_METHODS,
    fit_method,
    train_spec,
    run_coverage_methods,
    run_point_experiment,
    write_coverage_report,
    write_cv2_histograms,
    write_point_report,
)
from .intervals import tail_quantiles
from .io import load_config, load_csv, parse_config, write_csv, write_manifest
from .nn import EarlyStop
from .ppi import bootstrap_roots, intervals_from_roots
from .realdata import run_wine_pipeline, write_split_manifest, write_wine_report
from .reference import ReferenceDist, RngStream
from .simgen import generate_model_data
from .transform import predict_samples_many, transform_from_text, transform_to_text

SUBCOMMANDS = ("simulate", "train", "predict", "interval", "point-experiment",
               "coverage-experiment", "wine")
FIT_METHODS = ("dlmf", "dgkl", "dgwa", "ckde")


def _with_p(cfg: ExperimentConfig, p: int) -> ExperimentConfig:
    ref = dataclasses.replace(ReferenceDist.parse(cfg.ref), p=p)
    return dataclasses.replace(cfg, ref=str(ref))


def effective_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.set:
        cfg = parse_config("\n".join(args.set), cfg)
    overrides = {}
    for flag, key in (("seed", "master_seed"), ("n", "n"), ("alpha", "alpha"),
                      ("model", "model"), ("n_jobs", "n_jobs")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    ps = getattr(args, "p", None)
    if ps:
        cfg = _with_p(cfg, ps[0])
    return cfg


def _training_data(cfg: ExperimentConfig, rng: RngStream):
    if cfg.csv:
        return load_csv(cfg.csv, cfg.delimiter, cfg.target)
    return generate_model_data(cfg.model, cfg.n, rng.child("data"))


def _points(path):
    """Query predictors from a headed CSV; a trailing ``y`` column is ignored."""
    if path is None:
        raise SystemExit("--points is required")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    xs = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return xs[:, :-1] if header[-1] == "y" else xs


def cmd_simulate(args, cfg):
    ds = generate_model_data(cfg.model, cfg.n, RngStream(cfg.master_seed, "simulate"))
    path = os.path.join(args.out, "data.csv")
    write_csv(ds, path)
    return {"data": path}


def cmd_train(args, cfg):
    rng = RngStream(cfg.master_seed, "train")
    ds = _training_data(cfg, rng)
    method = args.method or "dlmf"
    if method == "ckde":
        model = ckde_fit(ds)
        path = os.path.join(args.out, "ckde.txt")
        with open(path, "w") as fh:
            fh.write(f"h = {model.h!r}\nh0 = {model.h0!r}\nloo_loglik = {model.score!r}\n")
        return {"model": path}
    es = None
    if cfg.early_stop and args.validation:
        es = EarlyStop(cfg.O, cfg.alpha, load_csv(args.validation, ",", None), draws=cfg.S)
    t = fit_method(method, ds, cfg, rng.child(method), es)
    path = os.path.join(args.out, "model.txt")
    with open(path, "w") as fh:
        fh.write(transform_to_text(t))
    return {"model": path, "epochs_run": t.meta.epochs_run, "final_train_loss": t.meta.final_train_loss}


def cmd_predict(args, cfg):
    if not args.model_file:
        raise SystemExit("--model-file is required")
    with open(args.model_file) as fh:
        t = transform_from_text(fh.read())
    xs = _points(args.points)
    samples = predict_samples_many(t, xs, cfg.S, RngStream(cfg.master_seed, "predict"))
    path = os.path.join(args.out, "predictions.csv")
    with open(path, "w") as fh:
        fh.write("row,l2,l1\n")
        for j, row in enumerate(samples):
            l1 = np.sort(row)[(row.size - 1) // 2]
            fh.write(f"{j},{float(row.mean())!r},{float(l1)!r}\n")
    return {"predictions": path}


def cmd_interval(args, cfg):
    rng = RngStream(cfg.master_seed, "interval")
    ds = _training_data(cfg, rng)
    xs = _points(args.points)
    pi = args.pi[0] if args.pi else "qpi"
    fit = {"qpi": "dlmf", "ppi": "dlmf", "pikl": "dgkl", "piwa": "dgwa"}[pi]
    t = fit_method(fit, ds, cfg, rng.child(fit))
    samples = predict_samples_many(t, xs, cfg.S, rng.child(fit, "center"))
    if pi == "ppi":
        roots = bootstrap_roots(t, ds, xs, train_spec(cfg, rng.child(fit)), cfg.B, cfg.S,
                                rng.child(fit), cfg.n_jobs)
        ivs = intervals_from_roots(samples.mean(axis=1), roots, cfg.alpha)
        lo, hi = np.array([i.lower for i in ivs]), np.array([i.upper for i in ivs])
    else:
        lo, hi = tail_quantiles(samples, cfg.alpha)
    path = os.path.join(args.out, "intervals.csv")
    with open(path, "w") as fh:
        fh.write("row,method,lower,upper\n")
        for j in range(len(xs)):
            fh.write(f"{j},{PI_METHODS[pi]},{float(lo[j])!r},{float(hi[j])!r}\n")
    return {"intervals": path}


def cmd_point_experiment(args, cfg):
    methods = [args.method] if args.method else ["dlmf"]
    rows = []
    for p in args.p or [ReferenceDist.parse(cfg.ref).p]:
        local = _with_p(cfg, p)
        for m in methods:
            rep = run_point_experiment(local, m)
            rows.append((m.upper(), p, cfg.optimizer if m != "ckde" else "-", rep.aggregate))
            print(f"{m} p={p}: L_tilde={rep.aggregate:.4f}")
    path = os.path.join(args.out, "point_report.csv")
    write_point_report(path, rows)
    return {"point_report": path}


def cmd_coverage_experiment(args, cfg):
    pis = args.pi or ["qpi", "ppi"]
    rows = []
    for p in args.p or [ReferenceDist.parse(cfg.ref).p]:
        local = _with_p(cfg, p)
        for pi, rep in run_coverage_methods(local, pis).items():
            rows.append((p, cfg.n, rep))
            sub = os.path.join(args.out, f"p{p}_n{cfg.n}")
            os.makedirs(sub, exist_ok=True)
            write_cv2_histograms(sub, rep, cfg.alpha)
            print(f"{rep.method} p={p} n={cfg.n}: CV1={rep.cv1:.3f}({rep.sigma_pi:.3f}) "
                  f"AL={rep.al:.3f}({rep.sigma_len:.3f})")
    path = os.path.join(args.out, "coverage_report.csv")
    write_coverage_report(path, rows)
    return {"coverage_report": path}


def cmd_wine(args, cfg):
    paths, sizes = {}, {}
    if args.red:
        paths["red"], sizes["red"] = args.red, args.n or 199
    if args.white:
        paths["white"], sizes["white"] = args.white, args.n or 195
    if not paths:
        raise SystemExit("give --red and/or --white CSV paths")
    methods = [args.method] if args.method else ["dlmf", "dgkl", "dgwa"]
    rows, splits = run_wine_pipeline(cfg, paths, ps=args.p or [5, 10, 15, 20, 25],
                                     methods=methods, intervals=args.pi or list(PI_METHODS)[:4],
                                     n_train=sizes)
    path = os.path.join(args.out, "wine_report.csv")
    write_wine_report(path, rows)
    for r in rows:
        print(f"{r.dataset} {r.method} p={r.p}: MSPE={r.mspe:.3f} coverage={r.coverage:.3f} "
              f"length={r.length:.3f}")
    return {"wine_report": path, "split_manifest": write_split_manifest(args.out, splits)}


COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "predict": cmd_predict,
    "interval": cmd_interval,
    "point-experiment": cmd_point_experiment,
    "coverage-experiment": cmd_coverage_experiment,
    "wine": cmd_wine,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlmf", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--method", choices=FIT_METHODS)
        sp.add_argument("--pi", nargs="+", choices=list(PI_METHODS)[:4])
        sp.add_argument("--p", type=int, nargs="+", help="reference dimension(s)")
        sp.add_argument("--n", type=int, help="training size")
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--model", help="simulation model (model1, model2, model3)")
        sp.add_argument("--n-jobs", type=int, dest="n_jobs")
        sp.add_argument("--points", help="CSV of query predictors")
        sp.add_argument("--validation", help="CSV used for early stopping when training")
        sp.add_argument("--model-file", dest="model_file")
        sp.add_argument("--red", help="red-wine CSV (semicolon separated)")
        sp.add_argument("--white", help="white-wine CSV (semicolon separated)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = effective_config(args)
    os.makedirs(args.out, exist_ok=True)
    outputs = COMMANDS[args.command](args, cfg)
    write_manifest(args.out, cfg, args.command, outputs)
    return 0


if __name__ == "__main__":
    sys.exit(main())
