"""Shared value types: regression samples, experiment configuration, coverage reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class DatasetError(ValueError):
    """Raised when a sample violates the Dataset invariants."""


class DimensionMismatch(DatasetError):
    pass


class NonFiniteValue(DatasetError):
    def __init__(self, row: int, what: str):
        super().__init__(f"non-finite value in {what} at row {row}")
        self.row = row


@dataclass(frozen=True, eq=False)
class Dataset:
    """n rows of predictors ``x`` (n x d) and scalar responses ``y`` (n,)."""

    x: np.ndarray
    y: np.ndarray
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.array(self.y, dtype=np.float64)
        if y.ndim == 2 and y.shape[1] == 1:
            y = y[:, 0]
        if y.ndim != 1:
            raise DimensionMismatch(f"response must be univariate, got shape {y.shape}")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.x[idx], self.y[idx], self.feature_names)


def validate_dataset(ds: Dataset) -> None:
    if ds.x.shape[0] != ds.y.shape[0]:
        raise DimensionMismatch(
            f"x has {ds.x.shape[0]} rows but y has length {ds.y.shape[0]}"
        )
    if ds.y.shape[0] < 1:
        raise DimensionMismatch("dataset is empty")
    if ds.feature_names is not None and len(ds.feature_names) != ds.x.shape[1]:
        raise DimensionMismatch(
            f"{len(ds.feature_names)} feature names for {ds.x.shape[1]} predictors"
        )
    bad_x = ~np.isfinite(ds.x).all(axis=1)
    bad_y = ~np.isfinite(ds.y)
    if bad_x.any() or bad_y.any():
        row_x = int(np.argmax(bad_x)) if bad_x.any() else ds.n
        row_y = int(np.argmax(bad_y)) if bad_y.any() else ds.n
        if row_y <= row_x:
            raise NonFiniteValue(row_y, "y")
        raise NonFiniteValue(row_x, "x")


@dataclass
class ExperimentConfig:
    """Every knob of a simulation or real-data experiment.

    Counts follow the usual names: ``T`` test points, ``R`` training replicates,
    ``S`` Monte Carlo draws per prediction, ``S_prime`` oracle draws per coverage
    estimate, ``B`` bootstrap roots, ``V`` validation rows, ``O`` epochs between
    early-stopping checks.
    """

    model: str = "model1"
    csv: str = ""
    target: str = "quality"
    delimiter: str = ";"
    standardize: bool = True
    n: int = 2000
    T: int = 2000
    R: int = 200
    S: int = 10000
    S_prime: int = 10000
    B: int = 200
    V: int = 200
    O: int = 500
    alpha: float = 0.05
    ref: str = "normal:5"
    hidden: tuple = (50,)
    gen_hidden: tuple = (50,)
    disc_hidden: tuple = (50, 25)
    optimizer: str = "rmsprop"
    lr: float = 0.001
    epochs: int = 5000
    clip_m: float = 20.0
    early_stop: bool = True
    master_seed: int = 1000
    n_jobs: int = 1

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        self.gen_hidden = tuple(int(h) for h in self.gen_hidden)
        self.disc_hidden = tuple(int(h) for h in self.disc_hidden)
        self.check()

    def check(self) -> None:
        for name in ("n", "T", "R", "S", "S_prime", "B", "V", "O", "n_jobs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.early_stop and self.O > self.epochs:
            raise ValueError(f"check period O={self.O} exceeds epochs={self.epochs}")
        if self.lr <= 0 or self.clip_m <= 0:
            raise ValueError("lr and clip_m must be positive")
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("need at least one hidden layer of positive width")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")


@dataclass
class CoverageReport:
    method: str
    cv1: float
    sigma_pi: float
    al: float
    sigma_len: float
    cv2: np.ndarray = field(repr=False)
    mean_len: np.ndarray = field(repr=False, default=None)
    cv3: np.ndarray = field(repr=False, default=None)
    lengths: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not 0.0 <= self.cv1 <= 1.0:
            raise ValueError(f"cv1 out of [0, 1]: {self.cv1}")
        if self.sigma_pi < 0 or self.al < 0 or self.sigma_len < 0:
            raise ValueError("spread and length statistics must be non-negative")
        cv2 = np.asarray(self.cv2, dtype=np.float64)
        if cv2.size and (cv2.min() < 0 or cv2.max() > 1):
            raise ValueError("cv2 entries must lie in [0, 1]")
