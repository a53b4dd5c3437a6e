"""Deterministic, splittable random streams built on counter-based Philox.

Every consumer of randomness addresses a stream by a ``StreamKey``; equal
keys reproduce the same output, distinct keys give statistically
independent streams.  Gaussian variates come from the inverse normal CDF
applied to the stream's uniforms, so a stream's n-th normal depends only
on (key, n) and coupled re-runs (e.g. sweeps over the truncation order)
consume identical increments.

Multilevel coupling is the exact linear map ``coarsen``: each coarse
Brownian increment is the bit-exact sum of its two fine children.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = ["StreamKey", "NormalStream", "coarsen", "normal_increments"]

_INV_2_53 = 2.0 ** -53


@dataclass(frozen=True)
class StreamKey:
    """Address of an independent random stream."""

    seed: int
    purpose: str = "increment"
    picard_step: int = 0
    level: int = 0
    particle_index: int = 0

    def philox_key(self):
        """128-bit Philox key derived by hashing the key fields."""
        text = f"{self.seed}|{self.purpose}|{self.picard_step}|{self.level}|{self.particle_index}"
        digest = hashlib.sha256(text.encode()).digest()[:16]
        return np.frombuffer(digest, dtype=np.uint64)


class NormalStream:
    """Sequential standard-normal draws from one keyed Philox stream."""

    def __init__(self, key: StreamKey):
        self.key = key
        self._gen = np.random.Generator(np.random.Philox(key=key.philox_key()))

    def normals(self, count):
        """Next ``count`` i.i.d. N(0, 1) draws (inverse-CDF transform)."""
        if count < 0:
            raise ValueError(f"count must be >= 0, got {count}")
        if count == 0:
            return np.empty(0)
        u = (self._gen.integers(0, 1 << 53, size=count, dtype=np.uint64) + 0.5) * _INV_2_53
        return ndtri(u)


def normal_increments(key, count, variance=1.0):
    """``count`` i.i.d. N(0, variance) draws for ``key``, reproducibly."""
    if variance <= 0.0:
        raise ValueError(f"variance must be positive, got {variance}")
    return NormalStream(key).normals(count) * np.sqrt(variance)


def coarsen(fine_increments):
    """Pairwise sums: out[j] = fine[2j] + fine[2j+1], bit-exactly."""
    fine = np.asarray(fine_increments)
    if fine.shape[0] % 2 != 0:
        raise ValueError(f"need an even number of increments, got {fine.shape[0]}")
    return fine[0::2] + fine[1::2]
