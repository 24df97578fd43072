"""Synchronous CDMA over AWGN: ``y = C x + sigma * g``.

Randomness comes from :class:`RngStream`, whose output depends only on
``(master_seed, point_index, frame_index)``.  Each coordinate triple is
hashed through ``numpy.random.SeedSequence`` into a Philox generator, so
frames can be produced in any order or on any worker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import CodeMatrix

_BITS, _NOISE = 0, 1


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    point_index: int = 0
    frame_index: int = 0

    def generator(self, purpose: int = 0) -> np.random.Generator:
        # purpose separates the data and noise substreams of one frame
        ss = np.random.SeedSequence(
            [self.master_seed & 0xFFFFFFFFFFFFFFFF, self.point_index, self.frame_index, purpose]
        )
        return np.random.Generator(np.random.Philox(ss))


def ebn0_to_sigma(ebn0_db: float) -> float:
    """Noise std per real dimension for unit-energy bits: ``sigma^2 = 1 / (2 Eb/N0)``."""
    if math.isnan(ebn0_db):
        raise ValueError("Eb/N0 must not be NaN")
    if ebn0_db == math.inf:
        return 0.0
    return math.sqrt(1.0 / (2.0 * 10.0 ** (ebn0_db / 10.0)))


def random_bits(k: int, rng: RngStream) -> np.ndarray:
    if k < 1:
        raise ValueError("k must be >= 1")
    g = rng.generator(_BITS)
    return 2.0 * g.integers(0, 2, size=k) - 1.0


def noise(n: int, rng: RngStream) -> np.ndarray:
    return rng.generator(_NOISE).standard_normal(n)


def transmit(c, x, sigma: float, rng: RngStream) -> np.ndarray:
    """Received vector for one frame; ``c`` may be a code or anything with ``.mat``."""
    mat = c.mat if isinstance(c, CodeMatrix) else np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape != (mat.shape[1],):
        raise ValueError(f"data length {x.shape} does not match K={mat.shape[1]}")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    y = mat @ x
    if sigma > 0:
        y = y + sigma * noise(mat.shape[0], rng)
    return y


def draw_frames(mat: np.ndarray, sigma: float, master_seed: int, point_index: int, frames: range):
    """Stack ``(X, Y)`` for a contiguous range of frame indices."""
    L, K = mat.shape
    xs = np.empty((len(frames), K))
    ys = np.empty((len(frames), L))
    for row, f in enumerate(frames):
        rng = RngStream(master_seed, point_index, f)
        xs[row] = random_bits(K, rng)
        ys[row] = transmit(mat, xs[row], sigma, rng)
    return xs, ys
