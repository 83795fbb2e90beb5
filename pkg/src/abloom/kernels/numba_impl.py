"""numba backend: njit translations of the hashspec reference.

All arithmetic stays in uint64; numba promotes mixed int64/uint64 to
float64, which would silently corrupt the hash, so every constant and loop
value is cast explicitly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import hashspec as hs

name = "numba"

_U64 = np.uint64
_OFFSET = np.uint64(hs.FNV_OFFSET)
_PRIME = np.uint64(hs.FNV_PRIME)
_GOLDEN = np.uint64(hs.GOLDEN)
_M1 = np.uint64(hs.FMIX_M1)
_M2 = np.uint64(hs.FMIX_M2)


@njit(cache=True)
def _fmix64(h):
    h = h ^ (h >> _U64(33))
    h = h * _M1
    h = h ^ (h >> _U64(33))
    h = h * _M2
    h = h ^ (h >> _U64(33))
    return h


@njit(cache=True)
def _hash_bytes(data, seed):
    h1 = _fmix64(_OFFSET ^ seed)
    h2 = _fmix64(h1 ^ _GOLDEN)
    for i in range(data.shape[0]):
        b = _U64(data[i])
        h1 = (h1 ^ b) * _PRIME
        h2 = (h2 ^ b) * _PRIME
    return _fmix64(h1), _fmix64(h2 ^ _U64(data.shape[0]))


@njit(cache=True)
def _hash_u64_batch(values, seed, out1, out2):
    b1 = _fmix64(_OFFSET ^ seed)
    b2 = _fmix64(b1 ^ _GOLDEN)
    for r in range(values.shape[0]):
        v = values[r]
        h1 = b1
        h2 = b2
        for j in range(8):
            b = (v >> _U64(8 * j)) & _U64(0xFF)
            h1 = (h1 ^ b) * _PRIME
            h2 = (h2 ^ b) * _PRIME
        out1[r] = _fmix64(h1)
        out2[r] = _fmix64(h2 ^ _U64(8))


@njit(cache=True)
def _digest_batch(h1s, h2s, m, k, out):
    mm = _U64(m)
    one = _U64(1)
    used = np.zeros(m, dtype=np.uint8)
    for r in range(h1s.shape[0]):
        x = h1s[r] % mm
        y = h2s[r] % mm
        for i in range(k):
            c = x
            while used[c] == 1:
                c = c + one
                if c == mm:
                    c = _U64(0)
            out[r, i] = np.int64(c)
            used[c] = 1
            x = (x + y) % mm
            y = (y + _U64(i) + one) % mm
        for i in range(k):
            used[out[r, i]] = 0


@njit(cache=True)
def _apply_digests(counters, digests, delta, counter_max):
    nrows, k = digests.shape
    for r in range(nrows):
        ok = True
        for i in range(k):
            v = counters[digests[r, i]] + delta
            if v < 0 or v > counter_max:
                ok = False
                break
        if not ok:
            for rr in range(r):
                for i in range(k):
                    counters[digests[rr, i]] -= delta
            return r
        for i in range(k):
            counters[digests[r, i]] += delta
    return -1


@njit(cache=True)
def _dot_batch(bits, digests, out):
    nrows, k = digests.shape
    for r in range(nrows):
        s = 0
        for i in range(k):
            s += bits[digests[r, i]]
        out[r] = s


def hash_pair_bytes(data: bytes, seed: int) -> tuple[int, int]:
    arr = np.frombuffer(data, dtype=np.uint8)
    h1, h2 = _hash_bytes(arr, _U64(seed))
    return int(h1), int(h2)


def hash_pairs_u64(values: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    v = np.ascontiguousarray(values, dtype=np.uint64)
    out1 = np.empty(v.shape, dtype=np.uint64)
    out2 = np.empty(v.shape, dtype=np.uint64)
    _hash_u64_batch(v, _U64(seed), out1, out2)
    return out1, out2


def digest_batch(h1: np.ndarray, h2: np.ndarray, m: int, k: int) -> np.ndarray:
    out = np.empty((h1.shape[0], k), dtype=np.int64)
    _digest_batch(np.ascontiguousarray(h1, dtype=np.uint64),
                  np.ascontiguousarray(h2, dtype=np.uint64),
                  np.int64(m), np.int64(k), out)
    return out


def digest_one(h1: int, h2: int, m: int, k: int) -> np.ndarray:
    out = np.empty((1, k), dtype=np.int64)
    _digest_batch(np.array([h1], dtype=np.uint64), np.array([h2], dtype=np.uint64),
                  np.int64(m), np.int64(k), out)
    return out[0]


def apply_digests(counters: np.ndarray, digests: np.ndarray, delta: int,
                  counter_max: int) -> int:
    return int(_apply_digests(counters, np.ascontiguousarray(digests),
                              np.int64(delta), np.int64(counter_max)))


def dot_batch(bits: np.ndarray, digests: np.ndarray) -> np.ndarray:
    out = np.empty(digests.shape[0], dtype=np.int64)
    _dot_batch(bits, np.ascontiguousarray(digests), out)
    return out
