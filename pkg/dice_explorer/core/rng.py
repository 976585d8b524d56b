"""
Seeded random source.

Uniforms come from numpy's Philox counter-based bit generator (one 64-bit
draw per double), normals from Box-Muller on pairs of those uniforms. Both
are fixed algorithms, so a seed reproduces the same stream everywhere and
chunked requests concatenate to the same stream as one large request.
"""

import zlib
from typing import Sequence, Tuple, Union

import numpy as np

Size = Union[int, Tuple[int, ...], None]


class Rng:
    """Deterministic random stream with named child streams."""

    def __init__(self, seed: int, spawn_key: Sequence[int] = ()):
        seed = int(seed)
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        self.seed = seed
        self.spawn_key = tuple(int(k) for k in spawn_key)
        sequence = np.random.SeedSequence(seed, spawn_key=self.spawn_key)
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def spawn(self, name: str) -> "Rng":
        """
        Derive an independent child stream keyed by name.

        Drawing from a child never advances the parent, so adding a
        consumer does not shift anybody else's draws.

        Args:
            name: Stream label, e.g. "env" or "dice"

        Returns:
            New Rng whose stream depends only on (seed, path of names)
        """
        key = zlib.crc32(name.encode("utf-8"))
        return Rng(self.seed, self.spawn_key + (key,))

    def uniform(self, low: float = 0.0, high: float = 1.0, size: Size = None):
        """Uniform draws in [low, high)."""
        return low + (high - low) * self._generator.random(size)

    def integers(self, low: int, high: int, size: Size = None):
        """Integers in [low, high)."""
        return self._generator.integers(low, high, size=size)

    def categorical(self, probabilities: np.ndarray) -> int:
        """Draw one index by inverting the cumulative distribution."""
        cumulative = np.cumsum(probabilities)
        u = self._generator.random() * cumulative[-1]
        index = int(np.searchsorted(cumulative, u, side="right"))
        return min(index, len(probabilities) - 1)

    def normal(self, size: Size = None) -> np.ndarray:
        """Standard normal draws of the given shape (Box-Muller)."""
        shape = () if size is None else (size,) if isinstance(size, int) else size
        count = int(np.prod(shape)) if shape else 1
        draws = gaussian_sample(self, count)
        return draws.reshape(shape) if shape else draws[0]


def gaussian_sample(rng: Rng, n: int) -> np.ndarray:
    """
    Draw n standard normals.

    Each normal consumes exactly two uniforms (u1, u2) and uses
    z = sqrt(-2 ln(1 - u1)) * cos(2 pi u2).

    Args:
        rng: Source stream
        n: Number of draws (>= 0)

    Returns:
        Array of shape (n,)

    Raises:
        ValueError: If n is negative
    """
    if n < 0:
        raise ValueError(f"Sample count must be non-negative, got {n}")
    if n == 0:
        return np.zeros(0)
    uniforms = rng._generator.random(2 * n).reshape(n, 2)
    radius = np.sqrt(-2.0 * np.log1p(-uniforms[:, 0]))
    return radius * np.cos(2.0 * np.pi * uniforms[:, 1])

