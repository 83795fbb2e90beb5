"""Counting Bloom filter and its binarized views.

A :class:`CountingFilter` keeps one counter per slot and supports removal.
:meth:`CountingFilter.binarize` projects it to an immutable
:class:`BinarizedView`: slot ``i`` is set when ``counter[i] > theta``, and a
query is accepted when at least ``decision_threshold`` of the element's
``k`` slots are set.  ``theta=0`` with ``decision_threshold=k`` reproduces a
standard Bloom filter; raising ``theta`` below ``k`` trades recall for a
lower false-positive rate on overfull filters.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from ._validate import as_int
from .kernels import get_kernels

_MAGIC = b"ABF1"
_VERSION = 1
_HEADER = struct.Struct("<4sBQIQIQ")

MAX_SLOTS = 1 << 48
MAX_COUNTER_MAX = (1 << 32) - 1
DEFAULT_COUNTER_MAX = (1 << 16) - 1


class FilterError(Exception):
    """Base class for filter-domain failures."""


class CounterOverflowError(FilterError):
    """An insert would push some counter past ``counter_max``."""


class CounterUnderflowError(FilterError):
    """A removal would drive some counter negative."""


class FilterFormatError(FilterError):
    """A serialized filter is malformed or inconsistent."""


@dataclass(frozen=True)
class FilterParams:
    """Immutable shape of a filter: slot count, hashes per element, hash seed.

    ``counter_max`` caps every counter; inserts that would exceed it are
    rejected atomically rather than saturated.
    """

    m: int
    k: int
    seed: int = 0
    counter_max: int = DEFAULT_COUNTER_MAX

    def __post_init__(self):
        object.__setattr__(self, "m", as_int("m", self.m, minimum=1,
                                             maximum=MAX_SLOTS - 1))
        object.__setattr__(self, "k", as_int("k", self.k, minimum=1,
                                             maximum=self.m))
        object.__setattr__(self, "seed", as_int("seed", self.seed, minimum=0,
                                                maximum=(1 << 64) - 1))
        object.__setattr__(self, "counter_max", as_int(
            "counter_max", self.counter_max, minimum=1, maximum=MAX_COUNTER_MAX))


@dataclass(frozen=True, eq=False)
class ElementDigest:
    """The ``k`` distinct slot indices one element maps to."""

    indices: np.ndarray  # int64, shape (k,), read-only

    def __post_init__(self):
        self.indices.flags.writeable = False

    @property
    def k(self) -> int:
        return self.indices.shape[0]


def digest(element: bytes, params: FilterParams) -> ElementDigest:
    """Map one element (raw bytes) to its slot indices under ``params``."""
    if not isinstance(element, (bytes, bytearray, memoryview)):
        raise TypeError("element must be bytes-like")
    element = bytes(element)
    if len(element) == 0:
        raise ValueError("element must be non-empty")
    kern = get_kernels()
    h1, h2 = kern.hash_pair_bytes(element, params.seed)
    return ElementDigest(kern.digest_one(h1, h2, params.m, params.k))


def digest_many_u64(values: np.ndarray, params: FilterParams) -> np.ndarray:
    """Digest a batch of 64-bit integer elements.

    Each value is hashed as its 8 little-endian bytes, so the result row for
    ``v`` equals ``digest(struct.pack('<Q', v), params).indices``.  Returns
    an int64 array of shape ``(len(values), k)``.
    """
    kern = get_kernels()
    v = np.ascontiguousarray(values, dtype=np.uint64)
    h1, h2 = kern.hash_pairs_u64(v, params.seed)
    return kern.digest_batch(h1, h2, params.m, params.k)


def _check_digest_array(digests: np.ndarray, params: FilterParams) -> np.ndarray:
    arr = np.ascontiguousarray(digests, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != params.k:
        raise ValueError(f"digest array must have shape (B, {params.k})")
    if arr.size and (arr.min() < 0 or arr.max() >= params.m):
        raise ValueError("digest indices out of range for this filter")
    return arr


@dataclass(frozen=True, eq=False)
class BinarizedView:
    """Immutable thresholded snapshot of a counting filter.

    ``bits[i] = counters[i] > theta`` at snapshot time; ``query`` accepts a
    digest when its dot product with the bits reaches ``decision_threshold``.
    """

    params: FilterParams
    theta: int
    decision_threshold: int
    bits: np.ndarray  # uint8, shape (m,), read-only
    n_at_snapshot: int

    def __post_init__(self):
        self.bits.flags.writeable = False

    def dot(self, d: ElementDigest) -> int:
        """Number of this element's slots that are set."""
        return int(self.dot_many(d.indices[None, :])[0])

    def dot_many(self, digests: np.ndarray) -> np.ndarray:
        digests = _check_digest_array(digests, self.params)
        return get_kernels().dot_batch(self.bits, digests)

    def query(self, d: ElementDigest) -> bool:
        return self.dot(d) >= self.decision_threshold

    def query_many(self, digests: np.ndarray) -> np.ndarray:
        return self.dot_many(digests) >= self.decision_threshold


class CountingFilter:
    """Mutable counting Bloom filter with atomic batch updates."""

    def __init__(self, params: FilterParams):
        self.params = params
        self._counters = np.zeros(params.m, dtype=np.int64)
        self._n_stored = 0

    @property
    def counters(self) -> np.ndarray:
        """The raw counters (do not mutate)."""
        return self._counters

    @property
    def n_stored(self) -> int:
        """Number of elements currently stored (inserts minus removals)."""
        return self._n_stored

    def copy(self) -> "CountingFilter":
        dup = CountingFilter(self.params)
        dup._counters[:] = self._counters
        dup._n_stored = self._n_stored
        return dup

    def insert(self, d: ElementDigest) -> None:
        self.insert_many(d.indices[None, :])

    def remove(self, d: ElementDigest) -> None:
        self.remove_many(d.indices[None, :])

    def insert_many(self, digests: np.ndarray) -> None:
        """Insert a batch atomically; on overflow nothing is applied."""
        digests = _check_digest_array(digests, self.params)
        bad = get_kernels().apply_digests(
            self._counters, digests, 1, self.params.counter_max)
        if bad >= 0:
            raise CounterOverflowError(
                f"insert of element {bad} would exceed counter_max="
                f"{self.params.counter_max}; batch rolled back")
        self._n_stored += digests.shape[0]

    def remove_many(self, digests: np.ndarray) -> None:
        """Remove a batch atomically; on underflow nothing is applied.

        Removing an element that was never inserted is undefined in general
        (it may silently corrupt other elements, as in any counting filter);
        it is rejected only when some counter would go negative.
        """
        digests = _check_digest_array(digests, self.params)
        if digests.shape[0] > self._n_stored:
            raise CounterUnderflowError(
                f"cannot remove {digests.shape[0]} elements from a filter "
                f"holding {self._n_stored}")
        bad = get_kernels().apply_digests(
            self._counters, digests, -1, self.params.counter_max)
        if bad >= 0:
            raise CounterUnderflowError(
                f"removal of element {bad} would drive a counter negative; "
                f"batch rolled back")
        self._n_stored -= digests.shape[0]

    def binarize(self, theta: int, decision_threshold: int) -> BinarizedView:
        """Snapshot the filter as bits set where ``counter > theta``."""
        theta = as_int("theta", theta, minimum=0)
        decision_threshold = as_int("decision_threshold", decision_threshold,
                                    minimum=0, maximum=self.params.k)
        bits = (self._counters > theta).astype(np.uint8)
        return BinarizedView(self.params, theta, decision_threshold, bits,
                             self._n_stored)

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(_MAGIC, _VERSION, self.params.m, self.params.k,
                              self.params.seed, self.params.counter_max,
                              self._n_stored)
        return header + self._counters.astype("<u4").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CountingFilter":
        if len(blob) < _HEADER.size:
            raise FilterFormatError("truncated filter: header incomplete")
        magic, version, m, k, seed, counter_max, n_stored = _HEADER.unpack_from(blob)
        if magic != _MAGIC:
            raise FilterFormatError(f"bad magic {magic!r}")
        if version != _VERSION:
            raise FilterFormatError(f"unsupported format version {version}")
        try:
            params = FilterParams(m=m, k=k, seed=seed, counter_max=counter_max)
        except ValueError as exc:
            raise FilterFormatError(f"invalid parameters in header: {exc}") from exc
        body = blob[_HEADER.size:]
        if len(body) != 4 * m:
            raise FilterFormatError(
                f"counter block is {len(body)} bytes, expected {4 * m}")
        counters = np.frombuffer(body, dtype="<u4").astype(np.int64)
        if counters.size and int(counters.max()) > counter_max:
            raise FilterFormatError("counter exceeds counter_max")
        if int(counters.sum()) != k * n_stored:
            raise FilterFormatError(
                "counter sum does not equal k * n_stored; file corrupt")
        filt = cls(params)
        filt._counters[:] = counters
        filt._n_stored = n_stored
        return filt

    def save(self, path: str | os.PathLike) -> None:
        """Write the filter to ``path`` atomically (temp file + rename)."""
        path = os.fspath(path)
        directory = os.path.dirname(path) or "."
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".abloom-")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(self.to_bytes())
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise

    @classmethod
    def load(cls, path: str | os.PathLike) -> "CountingFilter":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())
