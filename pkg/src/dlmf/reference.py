"""Reference-variable sampling and labelled, counter-based random streams.

Every random draw in the package comes from an :class:`RngStream` whose key is a
hash of ``(master_seed, label)``.  Work units (replicate ``r``, bootstrap ``b``,
test point ``j``) get their own labels, so results do not depend on the order in
which the units are scheduled.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


def _key(master_seed: int, label: str) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update(int(master_seed).to_bytes(8, "little", signed=False))
    h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def derive_seed(master_seed: int, label: str) -> int:
    """64-bit integer seed for ``label`` under ``master_seed``."""
    return _key(master_seed, label) & (2**64 - 1)


class RngStream:
    """Philox generator keyed by ``(master_seed, label)``.

    ``child("x")`` derives an independent stream labelled ``label/x``.
    """

    def __init__(self, master_seed: int, label: str = ""):
        if not 0 <= int(master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 bits")
        self.master_seed = int(master_seed)
        self.label = label
        self.gen = np.random.Generator(np.random.Philox(key=_key(self.master_seed, label)))

    def child(self, *parts) -> "RngStream":
        suffix = "/".join(str(p) for p in parts)
        label = f"{self.label}/{suffix}" if self.label else suffix
        return RngStream(self.master_seed, label)

    def seed_for(self, *parts) -> int:
        return derive_seed(self.master_seed, self.child(*parts).label)

    def __repr__(self):
        return f"RngStream({self.master_seed}, {self.label!r})"


KINDS = ("uniform", "normal", "truncnormal")


@dataclass(frozen=True)
class ReferenceDist:
    """Distribution of the reference variable Z in R^p."""

    kind: str = "normal"
    p: int = 1
    lo: float = -5.0
    hi: float = 5.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.p < 1:
            raise ValueError("reference dimension p must be >= 1")
        if not self.lo < self.hi:
            raise ValueError("truncation bounds need lo < hi")

    @classmethod
    def parse(cls, text: str) -> "ReferenceDist":
        """Parse ``uniform:p``, ``normal:p`` or ``truncnormal:p:lo:hi``."""
        parts = text.strip().split(":")
        kind = parts[0].lower()
        try:
            if kind in ("uniform", "normal") and len(parts) == 2:
                return cls(kind, int(parts[1]))
            if kind == "truncnormal" and len(parts) == 4:
                return cls(kind, int(parts[1]), float(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise ValueError(f"bad reference spec {text!r}: {exc}") from None
        raise ValueError(f"bad reference spec {text!r}")

    def __str__(self):
        if self.kind == "truncnormal":
            return f"truncnormal:{self.p}:{self.lo!r}:{self.hi!r}"
        return f"{self.kind}:{self.p}"


def sample_truncated_normal(lo: float, hi: float, count: int, rng: RngStream) -> np.ndarray:
    """Standard normal draws conditioned on [lo, hi], by rejection."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        batch = rng.gen.standard_normal(need + need // 8 + 16)
        keep = batch[(batch >= lo) & (batch <= hi)][:need]
        out[filled:filled + keep.size] = keep
        filled += keep.size
    return out


def sample_reference(dist: ReferenceDist, count: int, rng: RngStream) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be >= 1")
    if dist.kind == "uniform":
        return rng.gen.random((count, dist.p))
    if dist.kind == "normal":
        return rng.gen.standard_normal((count, dist.p))
    flat = sample_truncated_normal(dist.lo, dist.hi, count * dist.p, rng)
    return flat.reshape(count, dist.p)
