"""Pure-numpy backend.

Vectorizes the hashspec recurrences across elements.  The one part that is
inherently sequential, the linear probe on duplicate candidate indices, is
handled by detecting affected rows and replaying just those through the
pure-Python reference, so results stay identical to the accelerated backend.
"""

from __future__ import annotations

import numpy as np

from . import hashspec as hs

name = "numpy"

_U64 = np.uint64
_PRIME = _U64(hs.FNV_PRIME)
_M1 = _U64(hs.FMIX_M1)
_M2 = _U64(hs.FMIX_M2)


def _fmix64(h: np.ndarray) -> np.ndarray:
    h = h ^ (h >> _U64(33))
    h = h * _M1
    h = h ^ (h >> _U64(33))
    h = h * _M2
    h = h ^ (h >> _U64(33))
    return h


def hash_pair_bytes(data: bytes, seed: int) -> tuple[int, int]:
    return hs.hash_pair(data, seed)


def hash_pairs_u64(values: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    v = np.ascontiguousarray(values, dtype=np.uint64)
    b1, b2 = hs.lane_bases(seed)
    h1 = np.full(v.shape, b1, dtype=np.uint64)
    h2 = np.full(v.shape, b2, dtype=np.uint64)
    for j in range(8):
        b = (v >> _U64(8 * j)) & _U64(0xFF)
        h1 = (h1 ^ b) * _PRIME
        h2 = (h2 ^ b) * _PRIME
    return _fmix64(h1), _fmix64(h2 ^ _U64(8))


def digest_batch(h1: np.ndarray, h2: np.ndarray, m: int, k: int) -> np.ndarray:
    mm = _U64(m)
    x = h1 % mm
    y = h2 % mm
    cand = np.empty((h1.shape[0], k), dtype=np.uint64)
    for i in range(k):
        cand[:, i] = x
        x = (x + y) % mm
        y = (y + _U64(i + 1)) % mm
    out = cand.astype(np.int64)
    if k > 1:
        srt = np.sort(out, axis=1)
        dup_rows = np.nonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))[0]
        for r in dup_rows:
            out[r] = hs.expand_indices(int(h1[r]), int(h2[r]), m, k)
    return out


def digest_one(h1: int, h2: int, m: int, k: int) -> np.ndarray:
    return np.asarray(hs.expand_indices(h1, h2, m, k), dtype=np.int64)


def apply_digests(counters: np.ndarray, digests: np.ndarray, delta: int,
                  counter_max: int) -> int:
    flat = digests.ravel()
    np.add.at(counters, flat, delta)
    touched = counters[flat]
    if delta > 0:
        bad = bool((touched > counter_max).any())
    else:
        bad = bool((touched < 0).any())
    if not bad:
        return -1
    # roll back, then replay row by row against a scratch copy to report
    # the first row that cannot be applied
    np.add.at(counters, flat, -delta)
    work = counters.copy()
    for r in range(digests.shape[0]):
        row = digests[r]
        after = work[row] + delta
        if (after < 0).any() or (after > counter_max).any():
            return r
        work[row] = after
    raise AssertionError("batch flagged as failing but replay succeeded")


def dot_batch(bits: np.ndarray, digests: np.ndarray) -> np.ndarray:
    return bits[digests].sum(axis=1, dtype=np.int64)
