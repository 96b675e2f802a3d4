"""Reproducible 64-bit pseudo-random streams.

Two published generators, fixed so that experiments replay bit for bit on any
platform and in any other implementation that follows the same constants:

* SplitMix64 (Steele, Lea, Flood): state += 0x9E3779B97F4A7C15, then
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9, z = (z ^ (z >> 27)) * 0x94D049BB133111EB,
  output z ^ (z >> 31). Used for seeding and stream splitting.
* xorshift64* (Vigna): x ^= x >> 12, x ^= x << 25, x ^= x >> 27, output
  x * 0x2545F4914F6CDD1D. Used for all draws.
"""

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STAR = 0x2545F4914F6CDD1D


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state x (the state is advanced by the golden gamma first)."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_seed(root: int, *keys: int) -> int:
    """Fold integer keys into a root seed.

    ``derive_seed(seed, size, trial)`` gives each scan cell its own stream;
    ``derive_seed(seed, chunk)`` gives each sampling chunk its own stream.

    Example:
        >>> derive_seed(0, 1) != derive_seed(0, 2)
        True
    """
    h = splitmix64(root & MASK64)
    for k in keys:
        h = splitmix64(h ^ (k & MASK64))
    return h


class Xorshift64Star:
    """xorshift64* generator seeded through SplitMix64."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        # xorshift state must be non-zero
        self.state = state or _GOLDEN

    def next_u64(self) -> int:
        """Return the next 64-bit output."""
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * _STAR) & MASK64

    def below(self, n: int) -> int:
        """Return an unbiased integer in [0, n) by rejection on the top bits.

        Raises:
            ValueError: If n < 1
        """
        if n < 1:
            msg = f"upper bound must be positive, got {n}"
            raise ValueError(msg)
        if n == 1:
            return 0
        bits = (n - 1).bit_length()
        while True:
            r = self.next_u64() >> (64 - bits)
            if r < n:
                return r
