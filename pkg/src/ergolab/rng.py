"""Deterministic 64-bit pseudo-random streams for seeded experiments.

The generator is a splitmix64 state advance.  It is trivially portable,
has no hidden global state, and supports cheap substreams, so a report
produced from ``(master_seed, sample_index)`` is byte-identical no matter
how samples are scheduled.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15  # odd increment, ~2**64 / golden ratio


def mix64(z: int) -> int:
    """Scramble a 64-bit integer (the splitmix64 output function)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def substream_seed(master_seed: int, index: int) -> int:
    """Seed of substream ``index`` under ``master_seed``.

    The splitting rule is ``mix64(master + (index + 1) * GAMMA)``: distinct
    indices land in decorrelated regions of the state space, independently
    of the order in which substreams are consumed.
    """
    if index < 0:
        raise ValueError("substream index must be nonnegative")
    return mix64((master_seed + (index + 1) * _GAMMA) & _MASK64)


class SplitMix64:
    """Sequential splitmix64 stream."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        return mix64(self._state)

    def uniform(self) -> float:
        """Uniform double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], endpoints included."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.next_u64() % (hi - lo + 1)
