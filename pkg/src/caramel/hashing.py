"""Seeded hashing of keys into fingerprints, equation spots and Bloom positions.

Every function has a scalar form (Python ints, used on the query path) and,
where the build needs it, a vectorised numpy form.  The two are bit-identical;
the test-suite checks this.

Algorithms (fixed by the index format, hash id 1):

* fingerprint: XXH3-128 of the key bytes with the 64-bit master seed;
  ``hi`` is the upper 64 bits of the digest, ``lo`` the lower.
* equation spots: ``s = fmix64(chunk_seed ^ GOLDEN)``, ``x = fmix64(hi ^ s)``,
  ``y = fmix64(lo + x)`` (mod 2**64); with ``t = L // 3`` the spots are
  ``h1 = lo32(x)*t >> 32``, ``h2 = t + (hi32(x)*t >> 32)``,
  ``h3 = 2t + (lo32(y)*t >> 32)``.
* bloom positions: ``((hi + i*lo) mod 2**64) mod b`` for ``i < k``.
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np
import xxhash

HASH_ID = 1
MASK64 = (1 << 64) - 1
MASK32 = (1 << 32) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xFF51AFD7ED558CCD
_M2 = 0xC4CEB9FE1A85EC53


class Fingerprint(NamedTuple):
    hi: int
    lo: int


class SpotTriple(NamedTuple):
    h1: int
    h2: int
    h3: int


def fmix64(x: int) -> int:
    """MurmurHash3 64-bit finaliser."""
    x ^= x >> 33
    x = (x * _M1) & MASK64
    x ^= x >> 33
    x = (x * _M2) & MASK64
    x ^= x >> 33
    return x


def fmix64_array(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(33)
    x *= np.uint64(_M1)
    x ^= x >> np.uint64(33)
    x *= np.uint64(_M2)
    x ^= x >> np.uint64(33)
    return x


def fingerprint(key: bytes, seed: int) -> Fingerprint:
    d = xxhash.xxh3_128_intdigest(key, seed=seed & MASK64)
    return Fingerprint(d >> 64, d & MASK64)


def fingerprint_keys(keys: Sequence[bytes], seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Fingerprint a batch of keys; returns ``(hi, lo)`` uint64 arrays."""
    seed &= MASK64
    digest = xxhash.xxh3_128_intdigest
    n = len(keys)
    hi = np.empty(n, dtype=np.uint64)
    lo = np.empty(n, dtype=np.uint64)
    for i, k in enumerate(keys):
        d = digest(k, seed=seed)
        hi[i] = d >> 64
        lo[i] = d & MASK64
    return hi, lo


def _check_range(n_vars: int) -> int:
    if n_vars < 3 or n_vars % 3:
        raise ValueError(f"variable count must be a positive multiple of 3, got {n_vars}")
    third = n_vars // 3
    if third > MASK32:
        raise ValueError("variable range too large for 32-bit spot reduction")
    return third


def seed_mix(chunk_seed: int) -> int:
    """Per-chunk constant folded into every spot computation."""
    return fmix64((chunk_seed ^ GOLDEN) & MASK64)


def spots_mixed(hi: int, lo: int, mix: int, third: int) -> tuple[int, int, int]:
    """:func:`equation_spots` with the chunk constants precomputed (query fast path)."""
    x = fmix64(hi ^ mix)
    y = fmix64((lo + x) & MASK64)
    return (((x & MASK32) * third) >> 32,
            third + (((x >> 32) * third) >> 32),
            2 * third + (((y & MASK32) * third) >> 32))


def equation_spots(fp: Fingerprint, chunk_seed: int, n_vars: int) -> SpotTriple:
    third = _check_range(n_vars)
    return SpotTriple(*spots_mixed(fp.hi, fp.lo, seed_mix(chunk_seed), third))


def equation_spots_array(hi: np.ndarray, lo: np.ndarray, chunk_seed, n_vars) -> np.ndarray:
    """Vectorised :func:`equation_spots`; returns an ``(n, 3)`` int64 array.

    ``chunk_seed`` and ``n_vars`` may be scalars or per-key arrays (the query
    path mixes keys from different chunks).
    """
    if np.ndim(n_vars) == 0:
        third_v = _check_range(int(n_vars))
    else:
        third_v = np.asarray(n_vars, dtype=np.int64) // 3
    if np.ndim(chunk_seed) == 0:
        s = np.uint64(fmix64((int(chunk_seed) ^ GOLDEN) & MASK64))
    else:
        s = fmix64_array(np.asarray(chunk_seed, dtype=np.uint64) ^ np.uint64(GOLDEN))
    third = np.asarray(third_v, dtype=np.uint64)
    x = fmix64_array(hi ^ s)
    y = fmix64_array(lo + x)
    m32 = np.uint64(MASK32)
    sh = np.uint64(32)
    out = np.empty((len(hi), 3), dtype=np.int64)
    out[:, 0] = ((x & m32) * third) >> sh
    out[:, 1] = third + (((x >> sh) * third) >> sh)
    out[:, 2] = np.uint64(2) * third + (((y & m32) * third) >> sh)
    return out


def bloom_spots(fp: Fingerprint, k: int, b: int) -> list[int]:
    if k < 1 or b < 1:
        raise ValueError("need k >= 1 and b >= 1")
    return [((fp.hi + i * fp.lo) & MASK64) % b for i in range(k)]


def bloom_spots_array(hi: np.ndarray, lo: np.ndarray, k: int, b: int) -> np.ndarray:
    """``(k, n)`` array of Bloom bit positions."""
    if k < 1 or b < 1:
        raise ValueError("need k >= 1 and b >= 1")
    out = np.empty((k, len(hi)), dtype=np.uint64)
    bb = np.uint64(b)
    for i in range(k):
        out[i] = (hi + np.uint64(i) * lo) % bb
    return out


def chunk_seed(master_seed: int, chunk: int, attempt: int) -> int:
    """Seed for one chunk's hash triple; reproducible across retries."""
    return (master_seed ^ fmix64((((chunk << 16) | attempt) + GOLDEN) & MASK64)) & MASK64


def column_seed(master_seed: int, column: int) -> int:
    return fmix64((master_seed + (column + 1) * GOLDEN) & MASK64)
