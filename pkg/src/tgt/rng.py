"""Deterministic 64-bit randomness primitives.

Every random object in this package (Bernoulli matrices, derived seeds,
random defective sets) is defined in terms of the splitmix64 output
function, so identical seeds reproduce identical bits across runs and
across implementations.

The sequence seeded at ``s`` has outputs ``out(k) = mix64(s + k * GOLDEN)``
for k = 1, 2, ...; ``stream_value(s, k)`` exposes a single output and
``SplitMix64`` iterates the sequence.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """splitmix64 output function on a 64-bit state."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_value(seed: int, index: int) -> int:
    """The index-th output (1-based) of the splitmix64 sequence seeded at seed."""
    return mix64((seed + index * GOLDEN) & MASK64)


def derive_seed(seed: int, tag: int) -> int:
    """Derive an independent child seed from a master seed and a stream tag."""
    return stream_value(seed, tag)


def stream_block(seed: int, start: int, count: int) -> np.ndarray:
    """Outputs start .. start+count-1 of the sequence, as a uint64 array."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    z = (np.uint64(seed & MASK64) + idx * np.uint64(GOLDEN))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MULT1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MULT2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Stateful iterator over the splitmix64 sequence."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & MASK64
        return mix64(self._state)

    def randint(self, upper: int) -> int:
        """Uniform-ish integer in [1..upper] via modulo reduction.

        The modulo bias is astronomically small for desk-scale upper
        bounds and keeping the reduction branch-free makes the draw
        sequence easy to reproduce elsewhere.
        """
        if upper < 1:
            raise ValueError("upper must be >= 1")
        return 1 + self.next_u64() % upper


def random_subset(n: int, d: int, seed: int) -> tuple[int, ...]:
    """Uniform random d-subset of [1..n] via Floyd's sampling algorithm.

    Draws come from the splitmix64 sequence seeded at ``seed``, one draw
    per loop iteration, so the subset is a pure function of (n, d, seed).
    """
    if not 0 <= d <= n:
        raise ValueError(f"need 0 <= d <= n, got d={d}, n={n}")
    stream = SplitMix64(seed)
    chosen: set[int] = set()
    for j in range(n - d + 1, n + 1):
        r = stream.randint(j)
        chosen.add(j if r in chosen else r)
    return tuple(sorted(chosen))


def checksum(values: Iterable[int]) -> int:
    """Order-sensitive 64-bit digest, handy for freezing test expectations."""
    acc = 0
    for v in values:
        acc = mix64(acc ^ (v & MASK64))
    return acc
