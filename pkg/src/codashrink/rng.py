"""Named counter-based random streams.

Every random component of a simulation draws from its own Philox stream whose
128-bit key is a hash of ``(seed, *names)``. Streams are independent of the
order in which they are created, so adding a component or a repeat never
shifts the draws of another.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _digest(parts, size: int) -> int:
    h = hashlib.blake2b(repr(tuple(parts)).encode("utf-8"), digest_size=size)
    return int.from_bytes(h.digest(), "little")


def stream(seed: int, *names) -> np.random.Generator:
    """Generator for the component ``names`` of the experiment seeded ``seed``."""
    return np.random.Generator(np.random.Philox(key=_digest((int(seed),) + names, 16)))


def derive_seed(base_seed: int, *labels) -> int:
    """``base_seed`` XOR a 63-bit hash of ``labels`` (e.g. scenario, G, repeat)."""
    return (int(base_seed) ^ _digest(labels, 8)) & (2**63 - 1)


def beta_variates(rng: np.random.Generator, a: float, b: float, size=None):
    """Beta(a, b) as the ratio of two gamma variates."""
    x = rng.standard_gamma(a, size)
    y = rng.standard_gamma(b, size)
    return x / (x + y)


def student_t3(rng: np.random.Generator, size=None):
    """t with 3 degrees of freedom: normal over sqrt(chi2_3 / 3)."""
    z = rng.standard_normal(size)
    chi2 = 2.0 * rng.standard_gamma(1.5, size)
    return z / np.sqrt(chi2 / 3.0)


def binomial2(rng: np.random.Generator, prob, size):
    """Binomial(2, prob) as the sum of two Bernoulli draws; ``prob`` broadcasts."""
    u = rng.random((2,) + tuple(size))
    return (u[0] < prob).astype(float) + (u[1] < prob).astype(float)
