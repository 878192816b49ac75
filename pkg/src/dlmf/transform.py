"""Fitting the inverse transformation H(x, z) and sampling from it.

The network is trained on ``(X_i, Z_i) -> Y_i`` with the reference draws ``Z_i``
simulated once and held fixed.  At a new ``x_f`` the frozen network is pushed
through fresh reference draws; the resulting sample stands in for the
conditional law of Y given ``x_f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .data import Dataset, validate_dataset
from .intervals import (
    Interval,
    InsufficientSamples,
    early_stop_check,
    interval_from_samples,
    lower_median,
    min_draws,
    tail_quantiles,
)
from .nn import (
    EarlyStop,
    Network,
    TrainSpec,
    clip_params,
    forward_batch,
    loss_and_grads,
    make_optimizer,
    mlp_init,
    network_from_text,
    network_to_text,
    optimizer_step,
)
from .reference import ReferenceDist, RngStream, sample_reference

# rows per forward call when evaluating many (x, z) pairs
CHUNK_ROWS = 1 << 18


@dataclass
class TrainMeta:
    epochs_run: int = 0
    final_train_loss: float = float("nan")
    stopped_early: bool = False
    seed: int = 0
    initial_loss: float = float("nan")


@dataclass
class TrainedTransform:
    net: Network
    ref: ReferenceDist
    d: int
    meta: TrainMeta = field(default_factory=TrainMeta)
    method: str = "DLMF"
    disc: Optional[Network] = field(default=None, repr=False)

    def __post_init__(self):
        if self.net.in_dim != self.d + self.ref.p:
            raise ValueError(
                f"network input dim {self.net.in_dim} != d + p = {self.d + self.ref.p}"
            )


def _stack_inputs(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.hstack([x, z])


def validation_intervals(net, ref, d, es: EarlyStop, rng: RngStream, method="QPI"):
    """Quantile intervals at every validation row, one labelled stream per row."""
    t = TrainedTransform(net, ref, d)
    xs = es.validation.x
    samples = predict_samples_many(t, xs, es.draws, rng)
    lo, hi = tail_quantiles(samples, es.alpha)
    centers = samples.mean(axis=1)
    return [
        Interval(float(a), float(b), float(c), es.alpha, method)
        for a, b, c in zip(lo, hi, centers)
    ]


def train_transform(ds: Dataset, ref: ReferenceDist, spec: TrainSpec, rng: RngStream) -> TrainedTransform:
    """Minimise (1/n) sum (Y_i - H(X_i, Z_i))^2 by full-batch steps with clipping.

    One epoch is one gradient step on the whole sample followed by clipping every
    parameter into [-m, m].  With ``spec.early_stop`` set, every ``period``
    epochs the validation coverage of the quantile interval is checked and
    training ends as soon as it reaches the nominal level.
    """
    validate_dataset(ds)
    es = spec.early_stop
    if es is not None:
        validate_dataset(es.validation)
        if es.draws < min_draws(es.alpha):
            raise InsufficientSamples("early-stopping draws too few for alpha")
    z = sample_reference(ref, ds.n, rng.child("z"))
    inputs = _stack_inputs(ds.x, z)
    net = mlp_init(spec.layer_sizes(ds.d + ref.p), spec.seed)
    opt = make_optimizer(spec.optimizer, net, spec.lr)
    meta = TrainMeta(seed=spec.seed)

    loss = None
    for epoch in range(1, spec.epochs + 1):
        loss, grads = loss_and_grads(net, inputs, ds.y)
        if epoch == 1:
            meta.initial_loss = loss
        optimizer_step(opt, net, grads)
        clip_params(net, spec.clip_m)
        meta.epochs_run = epoch
        if es is not None and epoch % es.period == 0:
            ivs = validation_intervals(net, ref, ds.d, es, rng.child("earlystop", epoch))
            if early_stop_check(ivs, es.validation, es.alpha):
                meta.stopped_early = True
                break

    residual = ds.y - forward_batch(net, inputs)
    meta.final_train_loss = float(residual @ residual) / ds.n
    if spec.epochs == 0:
        meta.initial_loss = meta.final_train_loss
    if not np.isfinite(meta.final_train_loss):
        raise FloatingPointError("training produced a non-finite loss")
    return TrainedTransform(net, ref, ds.d, meta)


def predict_samples(t: TrainedTransform, x_f, S: int, rng: RngStream) -> np.ndarray:
    """``S`` draws of H(x_f, Z) with fresh reference draws Z."""
    x_f = np.asarray(x_f, dtype=np.float64).ravel()
    if x_f.shape[0] != t.d:
        raise ValueError(f"x_f has length {x_f.shape[0]}, transform expects {t.d}")
    if S < 1:
        raise ValueError("S must be >= 1")
    z = sample_reference(t.ref, S, rng)
    return forward_batch(t.net, _stack_inputs(np.broadcast_to(x_f, (S, t.d)), z))


def predict_samples_many(t: TrainedTransform, xs, S: int, rng: RngStream) -> np.ndarray:
    """(T, S) matrix; row j equals ``predict_samples(t, xs[j], S, rng.child(j))``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if xs.shape[1] != t.d:
        raise ValueError(f"test points have {xs.shape[1]} columns, transform expects {t.d}")
    T = xs.shape[0]
    out = np.empty((T, S))
    per_chunk = max(1, CHUNK_ROWS // S)
    for start in range(0, T, per_chunk):
        stop = min(T, start + per_chunk)
        z = np.vstack([sample_reference(t.ref, S, rng.child(j)) for j in range(start, stop)])
        x = np.repeat(xs[start:stop], S, axis=0)
        out[start:stop] = forward_batch(t.net, _stack_inputs(x, z)).reshape(stop - start, S)
    return out


def point_predict_l2(t: TrainedTransform, x_f, S: int, rng: RngStream) -> float:
    return float(predict_samples(t, x_f, S, rng).mean())


def point_predict_l1(t: TrainedTransform, x_f, S: int, rng: RngStream) -> float:
    return lower_median(predict_samples(t, x_f, S, rng))


def quantile_pi(t: TrainedTransform, x_f, S: int, alpha: float, rng: RngStream,
                method: str = "QPI") -> Interval:
    if S < min_draws(alpha):
        raise InsufficientSamples(f"S={S} too small for alpha={alpha}")
    return interval_from_samples(predict_samples(t, x_f, S, rng), alpha, method)


_METHOD_TAGS = {"DLMF", "DG-KL", "DG-WA"}


def transform_to_text(t: TrainedTransform) -> str:
    head = f"ref={t.ref};d={t.d}"
    if t.method != "DLMF":
        head += f";method={t.method}"
    return head + "\n" + network_to_text(t.net)


def transform_from_text(text: str) -> TrainedTransform:
    head, _, body = text.partition("\n")
    fields = dict(item.split("=", 1) for item in head.strip().split(";"))
    method = fields.get("method", "DLMF")
    if method not in _METHOD_TAGS:
        raise ValueError(f"unknown transform method {method!r}")
    net = network_from_text(body)
    return TrainedTransform(net, ReferenceDist.parse(fields["ref"]), int(fields["d"]), method=method)

