"""64-bit xorshift* generator used for codebook construction and loss simulation.

Everything here is integer arithmetic so the streams are identical on every
platform.
"""

MASK64 = (1 << 64) - 1
MULTIPLIER = 2685821657736338717
CODEBOOK_SEED = 0x5EED5EED
# XORed into user seeds so the loss stream never coincides with the codebook stream.
LOSS_STREAM_KEY = 0x9E3779B97F4A7C15


class XorShiftStar:
    """xorshift* with shift triple (12, 25, 27)."""

    def __init__(self, seed: int):
        seed &= MASK64
        if seed == 0:
            raise ValueError("xorshift* state must be non-zero")
        self.state = seed

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * MULTIPLIER) & MASK64

    def next_u32(self) -> int:
        """Top 32 bits of the next output; the numerator of a unit variate."""
        return self.next_u64() >> 32

    def uniform(self) -> float:
        return self.next_u32() / 4294967296.0


def loss_stream(seed: int) -> XorShiftStar:
    state = (seed ^ LOSS_STREAM_KEY) & MASK64
    return XorShiftStar(state or LOSS_STREAM_KEY)
