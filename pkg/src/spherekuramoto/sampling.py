"""Seeded randomness helpers.

Streams are keyed explicitly by (seed, stream indices), never by call order,
so concurrent or re-ordered callers always draw the same numbers.
"""
from __future__ import annotations

import numpy as np


def rng_from(seed, *stream):
    """Generator for the stream identified by (seed, *stream)."""
    key = tuple(int(s) for s in stream)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=key))


def uniform_sphere(n, d, rng):
    """n independent uniform points on S^(d-1): normalized Gaussian vectors."""
    v = rng.standard_normal((n, d))
    norms = np.linalg.norm(v, axis=1)
    while np.any(norms < 1e-12):  # essentially impossible; keeps the map total
        bad = norms < 1e-12
        v[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(v, axis=1)
    return v / norms[:, None]


def uniform_ball(d, rng, radius=1.0):
    """One point drawn uniformly from the ball of the given radius."""
    u = uniform_sphere(1, d, rng)[0]
    return radius * float(rng.random()) ** (1.0 / d) * u
