"""Seeded random streams and distribution functions shared by all modules.

Streams are built on the Philox counter-based generator, so any
(seed, stream id) pair names an independent, platform-stable sequence.
Purpose-specific sub-streams let one component consume randomness without
shifting the draws seen by another, which is what makes the filter
reduction properties bit-exact.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammainc

__all__ = [
    "RngStream",
    "draw_uniform",
    "draw_normal",
    "chi_square_cdf",
]

_UINT64_MAX = 2**64 - 1


class RngStream:
    """A single-owner random stream identified by (seed, stream id).

    Equal (seed, stream) pairs produce bit-identical draw sequences across
    runs; distinct stream ids under the same seed never overlap (they key
    separate Philox counters), so sub-streams can be handed to concurrent
    runs or to separate stages of one pipeline.
    """

    def __init__(self, seed: int, stream: int = 0):
        if not (0 <= int(seed) <= _UINT64_MAX):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if not (0 <= int(stream) <= _UINT64_MAX):
            raise ValueError(f"stream id must be a 64-bit unsigned integer, got {stream}")
        self.seed = int(seed)
        self.stream = int(stream)
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, stream: int) -> "RngStream":
        """Derive the independent stream (seed, stream) of the same seed."""
        return RngStream(self.seed, stream)

    def random(self, size=None):
        """Raw uniforms on [0, 1)."""
        return self._gen.random(size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def uniform(self, a: float, b: float, size=None):
        """Uniform draws on [a, b); raises on an empty range."""
        if not (a < b):
            raise ValueError(f"uniform range requires a < b, got a={a}, b={b}")
        out = a + (b - a) * self._gen.random(size)
        # a + (b-a)*u can round up to b for u close to 1; keep the half-open range.
        if size is None:
            return out if out < b else np.nextafter(b, a)
        np.copyto(out, np.nextafter(b, a), where=(out >= b))
        return out

    def normal(self, mean: float, variance: float, size=None):
        """Gaussian draws with the given mean and *variance* (not std).

        variance == 0 returns the mean exactly.
        """
        if not (variance >= 0.0):
            raise ValueError(f"variance must be >= 0, got {variance}")
        return mean + np.sqrt(variance) * self._gen.standard_normal(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def draw_uniform(rng: RngStream, a: float, b: float) -> float:
    """One uniform draw on [a, b)."""
    return float(rng.uniform(a, b))


def draw_normal(rng: RngStream, mean: float, variance: float) -> float:
    """One Gaussian draw with the given mean and variance."""
    return float(rng.normal(mean, variance))


def chi_square_cdf(x, k: int):
    """Chi-square CDF with k degrees of freedom.

    Evaluates the regularized lower incomplete gamma P(k/2, x/2); exact 0
    for x <= 0. Accepts scalar or array x.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {k}")
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0.0, gammainc(k / 2.0, np.maximum(x, 0.0) / 2.0), 0.0)
    if out.ndim == 0:
        return float(out)
    return out
