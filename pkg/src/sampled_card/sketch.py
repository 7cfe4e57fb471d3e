"""Element hashing and the HyperLogLog sketch.

Every element is reduced to a 64-bit identifier with XXH64 under a caller
supplied seed.  The identifier is what the sketch, the Good-Turing tallies and
the reservoir all work with, so equal elements always collapse to the same
value no matter which stage sees them.

Two hashing paths exist and produce identical values:

* :func:`hash_element` hashes an arbitrary byte string (str and int are
  accepted and converted first).
* :func:`hash_u64` hashes a numpy array of unsigned 64-bit integers, treating
  each as its 8-byte little-endian encoding.  This is a numpy port of the
  short-input branch of XXH64 and is what the simulation and the binary input
  format use.
"""

from __future__ import annotations

import math
from typing import Union

import numpy as np
import xxhash

Element = Union[bytes, bytearray, memoryview, str, int]

MASK64 = (1 << 64) - 1

_PRIME1 = np.uint64(0x9E3779B185EBCA87)
_PRIME2 = np.uint64(0xC2B2AE3D27D4EB4F)
_PRIME3 = np.uint64(0x165667B19E3779F9)
_PRIME4 = np.uint64(0x85EBCA77C2B2AE63)
_PRIME5 = np.uint64(0x27D4EB2F165667C5)

MIN_REGISTERS = 16
MAX_REGISTERS = 1 << 16


def element_bytes(element: Element) -> bytes:
    """Canonical byte encoding: UTF-8 for str, 8-byte little-endian for int."""
    if isinstance(element, str):
        return element.encode("utf-8")
    if isinstance(element, int):
        return (element & MASK64).to_bytes(8, "little")
    return bytes(element)


def hash_element(element: Element, seed: int = 0) -> int:
    """64-bit XXH64 hash of ``element`` under ``seed``."""
    return xxhash.xxh64_intdigest(element_bytes(element), seed=seed & MASK64)


def _rotl(x: np.ndarray, r: int) -> np.ndarray:
    return (x << np.uint64(r)) | (x >> np.uint64(64 - r))


def hash_u64(values: np.ndarray, seed: int = 0) -> np.ndarray:
    """Vectorized XXH64 of each value's 8-byte little-endian encoding.

    ``hash_u64(np.array([v]), s)[0] == hash_element(v, s)`` for every uint64 v.
    """
    x = np.asarray(values, dtype=np.uint64)
    with np.errstate(over="ignore"):
        acc = np.uint64(seed & MASK64) + _PRIME5 + np.uint64(8)
        lane = _rotl(x * _PRIME2, 31) * _PRIME1
        h = acc ^ lane
        h = _rotl(h, 27) * _PRIME1 + _PRIME4
        h ^= h >> np.uint64(33)
        h *= _PRIME2
        h ^= h >> np.uint64(29)
        h *= _PRIME3
        h ^= h >> np.uint64(32)
    return h


def leading_zeros64(x: np.ndarray) -> np.ndarray:
    """Count of leading zero bits of each uint64 (64 for zero)."""
    x = np.asarray(x, dtype=np.uint64)
    _, exp = np.frexp(x.astype(np.float64))
    msb = exp.astype(np.int64) - 1
    # float rounding can bump the exponent up by one
    np.maximum(msb, 0, out=msb)
    over = (x >> msb.astype(np.uint64)) == 0
    msb -= over
    lz = 63 - msb
    lz[x == 0] = 64
    return lz


def hll_alpha(m: int) -> float:
    if m == 16:
        return 0.673
    if m == 32:
        return 0.697
    if m == 64:
        return 0.709
    return 0.7213 / (1.0 + 1.079 / m)


def nearest_power_of_two(m: float) -> int:
    """Power of two closest to ``m`` (ties go down), clamped to the legal register range."""
    if m <= MIN_REGISTERS:
        return MIN_REGISTERS
    lo = 1 << int(math.floor(math.log2(m)))
    hi = lo * 2
    best = lo if (m - lo) <= (hi - m) else hi
    return min(best, MAX_REGISTERS)


class HllSketch:
    """HyperLogLog with ``m`` registers over 64-bit element identifiers.

    The register index is the top ``log2(m)`` bits of the identifier and the
    rank is one plus the number of leading zeros in the remaining bits.  The
    estimate is the original raw harmonic-mean estimator with the small-range
    linear counting correction; no 64-bit bias tables.
    """

    def __init__(self, m: int = 1024) -> None:
        if m < MIN_REGISTERS or m > MAX_REGISTERS or m & (m - 1):
            raise ValueError(
                f"m must be a power of two in [{MIN_REGISTERS}, {MAX_REGISTERS}], got {m}"
            )
        self.m = m
        self.index_bits = m.bit_length() - 1
        self.registers = np.zeros(m, dtype=np.uint8)

    def __repr__(self) -> str:
        return f"HllSketch(m={self.m}, nonzero={int(np.count_nonzero(self.registers))})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HllSketch):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.registers, other.registers)

    def copy(self) -> "HllSketch":
        dup = HllSketch(self.m)
        dup.registers[:] = self.registers
        return dup

    def _index_rank(self, h: int) -> tuple[int, int]:
        b = self.index_bits
        idx = h >> (64 - b)
        rest = (h << b) & MASK64
        width = 64 - b
        rank = (64 - rest.bit_length()) + 1 if rest else width + 1
        return idx, min(rank, width + 1)

    def insert(self, h: int) -> None:
        """Fold one 64-bit identifier into the registers."""
        idx, rank = self._index_rank(h & MASK64)
        if rank > self.registers[idx]:
            self.registers[idx] = rank

    def insert_many(self, hashes: np.ndarray) -> None:
        """Vectorized :meth:`insert`; identical final state for any order."""
        h = np.asarray(hashes, dtype=np.uint64)
        if h.size == 0:
            return
        b = np.uint64(self.index_bits)
        idx = (h >> np.uint64(64 - self.index_bits)).astype(np.intp)
        rest = h << b
        width = 64 - self.index_bits
        rank = np.minimum(leading_zeros64(rest), width) + 1
        np.maximum.at(self.registers, idx, rank.astype(np.uint8))

    def raw_estimate(self) -> float:
        m = self.m
        return hll_alpha(m) * m * m / float(np.sum(np.ldexp(1.0, -self.registers.astype(np.int64))))

    def estimate(self) -> float:
        """Cardinality estimate of the identifiers inserted so far."""
        m = self.m
        raw = self.raw_estimate()
        zeros = int(np.count_nonzero(self.registers == 0))
        if raw <= 2.5 * m and zeros > 0:
            return m * math.log(m / zeros)
        return raw


def hll_insert(sketch: HllSketch, h: int) -> HllSketch:
    sketch.insert(h)
    return sketch


def hll_estimate(sketch: HllSketch) -> float:
    return sketch.estimate()
