"""Adversarially trained conditional generators (KL and Wasserstein-1 objectives).

Both trainers solve

    min_G max_D  mean D(G(X, Z), X) - mean phi(D(Y, X))

with ``phi = exp`` for the KL variant and the identity for the Wasserstein
variant.  Each epoch takes one full-batch ascent step on the discriminator and
then one full-batch descent step on the generator; after each step the updated
network's parameters are clipped to its bound.  Clipping the Wasserstein critic
is how its Lipschitz constraint is enforced (no gradient penalty).

The fitted generator is returned as a :class:`TrainedTransform`, so the same
sampling, point-prediction and quantile-interval functions apply to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .data import Dataset, validate_dataset
from .intervals import early_stop_check, min_draws, InsufficientSamples
from .nn import (
    Network,
    TrainSpec,
    backward,
    clip_params,
    forward_cache,
    make_optimizer,
    mlp_init,
    optimizer_step,
)
from .reference import ReferenceDist, RngStream, sample_reference
from .transform import TrainMeta, TrainedTransform, validation_intervals

LOSSES = {"KL": ("DG-KL", "PI-KL"), "WA": ("DG-WA", "PI-WA")}


class AdversarialDivergence(FloatingPointError):
    """Adversarial training produced a non-finite objective."""


@dataclass
class AdversarialSpec:
    gen_spec: TrainSpec = field(default_factory=TrainSpec)
    disc_hidden: tuple = (50, 25)
    loss: str = "KL"
    b1: float = 20.0  # KL generator
    b2: float = 20.0  # KL discriminator
    b3: float = 20.0  # WA generator
    b4: float = 1.0   # WA critic

    def __post_init__(self):
        self.loss = self.loss.upper()
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be KL or WA, got {self.loss!r}")
        if min(self.b1, self.b2, self.b3, self.b4) <= 0:
            raise ValueError("clip bounds must be positive")
        self.disc_hidden = tuple(int(h) for h in self.disc_hidden)
        if not self.disc_hidden or min(self.disc_hidden) < 1:
            raise ValueError("discriminator needs at least one hidden layer")

    @property
    def gen_clip(self) -> float:
        return self.b1 if self.loss == "KL" else self.b3

    @property
    def disc_clip(self) -> float:
        return self.b2 if self.loss == "KL" else self.b4


def _objective(d_fake, d_real, loss):
    """Discriminator objective and its derivatives w.r.t. the two output batches."""
    n_f, n_r = d_fake.shape[0], d_real.shape[0]
    if loss == "KL":
        e = np.exp(d_real)
        value = d_fake.mean() - e.mean()
        return value, np.full(n_f, 1.0 / n_f), -e / n_r
    value = d_fake.mean() - d_real.mean()
    return value, np.full(n_f, 1.0 / n_f), np.full(n_r, -1.0 / n_r)


def discriminator_objective(disc: Network, y_fake, y_real, x, loss: str = "KL") -> float:
    fake = forward_cache(disc, np.column_stack([y_fake, x]))[-1][:, 0]
    real = forward_cache(disc, np.column_stack([y_real, x]))[-1][:, 0]
    return float(_objective(fake, real, loss.upper())[0])


def train_dg(ds: Dataset, ref: ReferenceDist, spec: AdversarialSpec, rng: RngStream,
             callback: Optional[Callable] = None, init: Optional[Network] = None) -> TrainedTransform:
    """Fit a conditional generator G(x, z) against a discriminator D(y, x).

    Fresh reference draws are taken every epoch.  ``callback(epoch, gen, disc)``
    runs after both updates of each epoch.  ``init`` replaces the seeded
    generator initialisation (it is copied, not modified).  Raises :class:`AdversarialDivergence`
    as soon as either objective stops being finite.
    """
    validate_dataset(ds)
    gs = spec.gen_spec
    es = gs.early_stop
    if es is not None:
        validate_dataset(es.validation)
        if es.draws < min_draws(es.alpha):
            raise InsufficientSamples("early-stopping draws too few for alpha")
    method, interval_tag = LOSSES[spec.loss]
    n = ds.n
    if init is None:
        gen = mlp_init(gs.layer_sizes(ds.d + ref.p), gs.seed)
    else:
        if init.in_dim != ds.d + ref.p:
            raise ValueError("initial generator has the wrong input dimension")
        gen = init.copy()
    disc = mlp_init([1 + ds.d, *spec.disc_hidden, 1], rng.seed_for("disc-init"))
    g_opt = make_optimizer(gs.optimizer, gen, gs.lr)
    d_opt = make_optimizer(gs.optimizer, disc, gs.lr)
    real_in = np.column_stack([ds.y, ds.x])
    fake_in = np.empty_like(real_in)
    fake_in[:, 1:] = ds.x
    meta = TrainMeta(seed=gs.seed)

    for epoch in range(1, gs.epochs + 1):
        z = sample_reference(ref, n, rng.child("z", epoch))
        g_acts = forward_cache(gen, np.hstack([ds.x, z]))
        fake_in[:, 0] = g_acts[-1][:, 0]

        # discriminator ascent: descend on the negated objective
        f_acts = forward_cache(disc, fake_in)
        r_acts = forward_cache(disc, real_in)
        value, d_fake, d_real = _objective(f_acts[-1][:, 0], r_acts[-1][:, 0], spec.loss)
        if not np.isfinite(value):
            raise AdversarialDivergence(f"{method}: discriminator objective {value} at epoch {epoch}")
        if epoch == 1:
            meta.initial_loss = float(value)
        gf, _ = backward(disc, f_acts, -d_fake)
        gr, _ = backward(disc, r_acts, -d_real)
        optimizer_step(d_opt, disc, [a + b for a, b in zip(gf, gr)])
        clip_params(disc, spec.disc_clip)

        # generator descent on mean D(G(x, z), x)
        f_acts = forward_cache(disc, fake_in)
        gen_loss = f_acts[-1][:, 0].mean()
        if not np.isfinite(gen_loss):
            raise AdversarialDivergence(f"{method}: generator objective {gen_loss} at epoch {epoch}")
        _, d_in = backward(disc, f_acts, np.full(n, 1.0 / n), need_input_grad=True)
        gg, _ = backward(gen, g_acts, d_in[:, 0])
        optimizer_step(g_opt, gen, gg)
        clip_params(gen, spec.gen_clip)

        meta.epochs_run = epoch
        meta.final_train_loss = float(value)
        if callback is not None:
            callback(epoch, gen, disc)
        if es is not None and epoch % es.period == 0:
            ivs = validation_intervals(gen, ref, ds.d, es, rng.child("earlystop", epoch), interval_tag)
            if early_stop_check(ivs, es.validation, es.alpha):
                meta.stopped_early = True
                break

    if gs.epochs == 0:
        meta.final_train_loss = meta.initial_loss = 0.0
    return TrainedTransform(gen, ref, ds.d, meta, method=method, disc=disc)


def pi_tag(method: str) -> str:
    """Interval tag for quantile intervals drawn from a generator."""
    return {"DG-KL": "PI-KL", "DG-WA": "PI-WA"}.get(method, "QPI")
