"""Reference definition of the hashing and index-expansion scheme.

Both accelerated backends must reproduce these functions bit for bit; the
pure-Python versions here are the ground truth and double as the slow path
for odd cases (duplicate candidate rows, scalar one-off digests).

The element hash is a pair of keyed FNV-1a lanes finalized with the
murmur3 ``fmix64`` avalanche.  Two independent 64-bit lane values are enough
to drive the index expansion below for any practical ``k``.

Index expansion follows the enhanced double-hashing recurrence

    index_i = (h1 + i*h2 + (i^3 - i)/6) mod m

computed incrementally (two adds per step, no multiplies), with a linear
probe forward to the next free slot whenever a candidate index was already
used by this element.  That probe guarantees each digest holds exactly
``k`` distinct indices whenever ``k <= m``.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
GOLDEN = 0x9E3779B97F4A7C15

# murmur3 finalizer multipliers
FMIX_M1 = 0xFF51AFD7ED558CCD
FMIX_M2 = 0xC4CEB9FE1A85EC53


def fmix64(h: int) -> int:
    """murmur3 64-bit finalizer over plain Python ints."""
    h &= MASK64
    h ^= h >> 33
    h = (h * FMIX_M1) & MASK64
    h ^= h >> 33
    h = (h * FMIX_M2) & MASK64
    h ^= h >> 33
    return h


def lane_bases(seed: int) -> tuple[int, int]:
    """Per-seed starting states of the two FNV lanes."""
    b1 = fmix64((FNV_OFFSET ^ seed) & MASK64)
    b2 = fmix64(b1 ^ GOLDEN)
    return b1, b2


def hash_pair(data: bytes, seed: int) -> tuple[int, int]:
    """Hash a byte string into two 64-bit lane values.

    The second lane mixes in the input length before finalization so the
    pair is not a single function of one lane.
    """
    h1, h2 = lane_bases(seed)
    for b in data:
        h1 = ((h1 ^ b) * FNV_PRIME) & MASK64
        h2 = ((h2 ^ b) * FNV_PRIME) & MASK64
    return fmix64(h1), fmix64(h2 ^ len(data))


def hash_pair_u64(value: int, seed: int) -> tuple[int, int]:
    """Hash a 64-bit integer as its 8 little-endian bytes."""
    return hash_pair((value & MASK64).to_bytes(8, "little"), seed)


def expand_indices(h1: int, h2: int, m: int, k: int) -> list[int]:
    """Expand one hash pair into ``k`` distinct indices in ``[0, m)``."""
    x = h1 % m
    y = h2 % m
    used: set[int] = set()
    out: list[int] = []
    for i in range(k):
        c = x
        while c in used:
            c += 1
            if c == m:
                c = 0
        out.append(c)
        used.add(c)
        x = (x + y) % m
        y = (y + i + 1) % m
    return out
