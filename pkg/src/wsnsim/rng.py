"""Portable splitmix64 generator.

Every random decision in a run is drawn from one of these streams, in a
fixed order, so runs are reproducible bit-for-bit across platforms.
"""

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(x: int) -> int:
    """First output of a generator seeded with ``x``; used to derive child seeds."""
    return mix64((x + GOLDEN_GAMMA) & MASK64)


class SplitMix64:
    """splitmix64 stream with 53-bit uniform floats in [0, 1)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * _INV_2_53

    def getstate(self) -> int:
        return self.state

    def setstate(self, state: int) -> None:
        self.state = state & MASK64

    def __repr__(self):
        return f"SplitMix64(state={self.state:#018x})"


def derive_seeds(base_seed: int, count: int) -> list[int]:
    """Child seeds for a sweep: ``seed_i = splitmix64(base_seed + i)``."""
    return [splitmix64((base_seed + i) & MASK64) for i in range(count)]
