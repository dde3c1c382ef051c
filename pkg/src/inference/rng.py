"""
Counter-based splitmix64 random stream.

Output i of a stream with seed s is splitmix64(s + (i + 1)·γ), so a stream
is fully described by (seed, counter) and reproduces bit-for-bit on every
platform. Child streams are derived from (seed, key) and never overlap the
parent's own outputs in practice.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB

_GAMMA_U64 = np.uint64(_GAMMA)
_MUL1_U64 = np.uint64(_MUL1)
_MUL2_U64 = np.uint64(_MUL2)
_TO_UNIT = 2.0**-53


def _mix_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MUL1_U64
        z = (z ^ (z >> np.uint64(27))) * _MUL2_U64
    return z ^ (z >> np.uint64(31))


def _mix_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def splitmix64(seed: int, n: int, start: int = 0) -> np.ndarray:
    """Outputs ``start .. start+n-1`` of the splitmix64 sequence for ``seed``."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK) + idx * _GAMMA_U64
    return _mix_array(z)


class RandomStream:
    """
    Seeded splitmix64 stream with an explicit draw counter.

    Parameters
    ----------
    seed : int
        Any integer; reduced modulo 2**64.
    counter : int
        Number of outputs already consumed.
    """

    def __init__(self, seed: int, counter: int = 0) -> None:
        if counter < 0:
            raise ValueError(f"counter must be >= 0, got {counter}")
        self.seed = int(seed) & _MASK
        self.counter = int(counter)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, counter={self.counter})"

    def next_uint64(self, n: int) -> np.ndarray:
        out = splitmix64(self.seed, n, self.counter)
        self.counter += n
        return out

    def uniform(self, n: int) -> np.ndarray:
        """``n`` floats in [0, 1) with 53 random bits each."""
        return (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * _TO_UNIT

    def spawn(self, key: int) -> RandomStream:
        """Independent child stream for ``key``; does not advance this stream."""
        child = _mix_int(_mix_int(self.seed ^ 0x5851F42D4C957F2D) + ((int(key) + 1) * _GAMMA))
        return RandomStream(child)

    def generator(self) -> np.random.Generator:
        """numpy Generator seeded from the next output (for Gaussian noise)."""
        return np.random.default_rng(int(self.next_uint64(1)[0]))
