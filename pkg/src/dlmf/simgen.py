"""The three simulation models and their exact conditional quantities.

Predictors are five independent standard normals truncated to [-5, 5], and so
is the noise.  ``model1`` is homoscedastic, ``model2`` has noise scale
0.5 + x2^2/2 + x5^2/2, and ``model3`` is an equal mixture of N(-x1, 0.25^2) and
N(x1, 0.25^2).
"""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .reference import RngStream, sample_truncated_normal

MODELS = ("model1", "model2", "model3")
D = 5
BOUND = 5.0
MIX_SD = 0.25


def check_model(model_id: str) -> str:
    key = model_id.lower().replace("-", "").replace("_", "")
    if key not in MODELS:
        raise ValueError(f"unknown simulation model {model_id!r}; expected one of {MODELS}")
    return key


def _signal(model_id, x):
    x = np.atleast_2d(x)
    base = x[:, 0] ** 2 + np.exp(x[:, 1] + x[:, 2] / 3)
    if model_id == "model1":
        return base + np.sin(x[:, 3] + x[:, 4])
    return base + x[:, 3] - x[:, 4]


def model_response(model_id: str, x, eps, u=None) -> np.ndarray:
    """Responses for given predictors, standardized noise and (model3) coin flips.

    For model3 the branch is the negative-mean component when ``u < 0.5``.
    """
    model_id = check_model(model_id)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    eps = np.asarray(eps, dtype=np.float64)
    if model_id == "model1":
        return _signal(model_id, x) + eps
    if model_id == "model2":
        scale = 0.5 + x[:, 1] ** 2 / 2 + x[:, 4] ** 2 / 2
        return _signal(model_id, x) + scale * eps
    if u is None:
        raise ValueError("model3 needs the mixture coin u")
    sign = np.where(np.asarray(u) < 0.5, -1.0, 1.0)
    return sign * x[:, 0] + MIX_SD * eps


def sample_predictors(count: int, rng: RngStream) -> np.ndarray:
    return sample_truncated_normal(-BOUND, BOUND, count * D, rng).reshape(count, D)


def generate_model_data(model_id: str, n: int, rng: RngStream) -> Dataset:
    if n < 1:
        raise ValueError("n must be >= 1")
    model_id = check_model(model_id)
    x = sample_predictors(n, rng.child("x"))
    eps = sample_truncated_normal(-BOUND, BOUND, n, rng.child("eps"))
    u = rng.child("coin").gen.random(n) if model_id == "model3" else None
    names = tuple(f"x{k + 1}" for k in range(D))
    return Dataset(x, model_response(model_id, x, eps, u), names)


def true_conditional_mean(model_id: str, x) -> np.ndarray | float:
    """E(Y | X = x); the truncated noise and the mixture are both mean-zero."""
    model_id = check_model(model_id)
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xm = np.atleast_2d(x)
    mean = np.zeros(xm.shape[0]) if model_id == "model3" else _signal(model_id, xm)
    return float(mean[0]) if single else mean


def sample_conditional(model_id: str, x, count: int, rng: RngStream) -> np.ndarray:
    """``count`` draws of Y given X = x."""
    model_id = check_model(model_id)
    x = np.asarray(x, dtype=np.float64).ravel()
    xs = np.broadcast_to(x, (count, D))
    eps = sample_truncated_normal(-BOUND, BOUND, count, rng.child("eps"))
    u = rng.child("coin").gen.random(count) if model_id == "model3" else None
    return model_response(model_id, xs, eps, u)
