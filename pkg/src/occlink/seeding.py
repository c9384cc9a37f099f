"""Deterministic seed derivation and the noise generator.

``mix64`` folds any number of integers into one 64-bit seed using the
SplitMix64 finalizer::

    h = 0x9E3779B97F4A7C15
    for w in words:
        h = splitmix64(h ^ (w mod 2**64))

where ``splitmix64(x)`` adds the golden-ratio increment and applies the
xor-shift/multiply finalizer (constants 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB). Sweeps derive trial seeds as ``mix64(base, i, j)``.

Gaussian noise comes from the PCG64 generator seeded through numpy's
``SeedSequence`` (both have documented, version-stable algorithms). Raw
64-bit outputs become uniforms ``(x >> 11) * 2**-53`` and pairs of uniforms
become normals through the Box-Muller transform. numpy's own
``standard_normal`` is not used because its stream is not guaranteed
stable across numpy releases.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64(*words: int) -> int:
    h = _GOLDEN
    for w in words:
        h = splitmix64(h ^ (int(w) & MASK64))
    return h


def uniform_stream(seed: int, stream: int, n: int) -> np.ndarray:
    """``n`` uniforms in [0, 1) from PCG64 keyed on (seed, stream)."""
    ss = np.random.SeedSequence([int(seed) & MASK64, int(stream) & MASK64])
    raw = np.random.PCG64(ss).random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def gaussian_noise(seed: int, stream: int, shape, sigma: float) -> np.ndarray:
    """Box-Muller normals with standard deviation ``sigma``."""
    n = int(np.prod(shape))
    if sigma == 0 or n == 0:
        return np.zeros(shape)
    m = (n + 1) // 2
    u = uniform_stream(seed, stream, 2 * m)
    u1 = 1.0 - u[:m]  # (0, 1], keeps log finite
    u2 = u[m:]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return sigma * z[:n].reshape(shape)
