"""Deterministic seeded random sampling for reproducible selection runs.

The generator is pinned to SplitMix64, a published 64-bit counter-based
generator, so that a (seed, budget, k_init) triple identifies the same
selection on every platform and in every implementation language. The
update and output functions are:

    state   <- state + 0x9E3779B97F4A7C15            (mod 2^64)
    z       <- state
    z       <- (z xor (z >> 30)) * 0xBF58476D1CE4E5B9 (mod 2^64)
    z       <- (z xor (z >> 27)) * 0x94D049BB133111EB (mod 2^64)
    output  <- z xor (z >> 31)

Reference outputs for seed 0: 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4,
0x06C45D188009454F. Bounded draws use the multiply-shift reduction
(x * n) >> 64, and subset sampling uses a partial Fisher-Yates shuffle,
both of which consume exactly one 64-bit output per draw.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """SplitMix64 stream seeded with an unsigned 64-bit integer.

    Args:
        seed: Initial state; values outside [0, 2^64) are reduced mod 2^64.
    """

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        """Return the next raw 64-bit output."""
        self._state = (self._state + _GOLDEN) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        """Return a draw from [0, n) via the multiply-shift reduction.

        Args:
            n: Exclusive upper bound, must be positive.

        Raises:
            ValueError: If n is not positive.
        """
        if n <= 0:
            raise ValueError(f"randbelow requires a positive bound, got {n}")
        return (self.next_u64() * n) >> 64

    def sample(self, n: int, k: int) -> list[int]:
        """Draw k distinct indices from range(n) in selection order.

        Implemented as a partial Fisher-Yates shuffle: draw i swaps a
        random element of the unshuffled tail into position i, so the
        result consumes exactly k generator outputs.

        Args:
            n: Population size.
            k: Number of indices to draw, 0 <= k <= n.

        Returns:
            The first k shuffled indices, in the order they were drawn.

        Raises:
            ValueError: If k is negative or exceeds n.
        """
        if k < 0 or k > n:
            raise ValueError(f"cannot sample {k} items from a population of {n}")
        pool = list(range(n))
        out: list[int] = []
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
            out.append(pool[i])
        return out
