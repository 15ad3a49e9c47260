"""Fixed pseudo-random generator for reproducible family generation.

Reports must be byte-identical across runs and Python versions for a
fixed seed, so seeded generation cannot rely on the stdlib ``random``
module (only ``random()`` itself is guaranteed stable).  This is the
SplitMix64 generator: state advances by the golden-gamma constant and
each output is a finalized mix of the state.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit generator; the seed fixes the whole stream."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection on the top multiple."""
        if n <= 0:
            raise ValueError("below() needs a positive bound")
        limit = _MASK - (_MASK + 1) % n
        while True:
            u = self.next_u64()
            if u <= limit:
                return u % n

    def bits(self, k: int) -> int:
        """Uniform k-bit integer (k may exceed 64)."""
        out = 0
        got = 0
        while got < k:
            take = min(64, k - got)
            out |= (self.next_u64() >> (64 - take)) << got
            got += take
        return out

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def subset_mask(self, width: int, size: int) -> int:
        """Mask with exactly ``size`` of ``width`` bits set (Floyd sampling)."""
        if size > width:
            raise ValueError("size exceeds width")
        mask = 0
        for j in range(width - size, width):
            t = self.below(j + 1)
            bit = 1 << t
            if mask & bit:
                bit = 1 << j
            mask |= bit
        return mask
