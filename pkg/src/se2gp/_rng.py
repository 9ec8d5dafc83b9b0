"""Deterministic random-stream derivation.

Every stochastic quantity in the package draws from a Philox counter-based
generator whose key is derived from a user seed plus an integer path naming
the consumer (stream kind, draw index, layer, ...).  Distinct paths give
statistically independent streams, and a stream's output never depends on
what other streams were consumed, so parallel Monte Carlo is reproducible
regardless of scheduling.
"""

from __future__ import annotations

import numpy as np

# Stream kinds: first element of every derivation path.
FILTER_STREAM = 0
MOMENT_STREAM = 1
GP_STREAM = 2
SUITE_STREAM = 3
CONSTRAINT_STREAM = 4
FIELD_STREAM = 5


def derived_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *path)``."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0,
                   out: np.ndarray | None = None) -> np.ndarray:
    """Circularly symmetric complex normals with ``E|z|^2 = variance``.

    Real and imaginary parts are independent N(0, variance/2).  When ``out``
    is given it must be a float64 array of shape ``shape + (2,)``; it is
    filled in place and the returned complex array is a view into it.
    """
    if out is None:
        raw = rng.standard_normal(size=tuple(shape) + (2,))
    else:
        rng.standard_normal(out=out)
        raw = out
    if variance != 1.0:
        raw *= np.sqrt(variance / 2.0)
        return raw.view(np.complex128)[..., 0]
    raw *= np.sqrt(0.5)
    return raw.view(np.complex128)[..., 0]
