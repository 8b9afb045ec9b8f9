"""Bloom prefilter for a column dominated by one value, and the rule for when to use one.

Cost model: a filter over the ``n = (1-alpha) N`` keys whose value differs from
the dominant value ``v0`` costs ``1.44 log2(1/eps)`` bits per member; every
dominant key that slips through (fraction ``eps``) must still be stored in the
CSF.  Minimising filter plus CSF cost gives ``eps* = 1.44/(delta ln 2) *
(1-alpha)/alpha``, and the filter pays off when ``tau <= 1`` (see :func:`decide`).
"""
from __future__ import annotations

import math
import struct
import sys
from dataclasses import dataclass

import numpy as np

from .errors import CorruptStreamError, TruncatedStreamError
from .hashing import MASK64, Fingerprint

BITS_PER_ITEM = 1.44
DELTA = 1.089

_HEAD = struct.Struct("<QdIIQ")


@dataclass(frozen=True)
class PrefilterDecision:
    use_filter: bool
    alpha: float
    eps_star: float
    tau: float
    delta: float


def optimal_eps(alpha: float, delta: float = DELTA) -> float:
    """Unclamped optimal false-positive rate; 0 for a constant column."""
    if alpha >= 1.0:
        return 0.0
    return BITS_PER_ITEM / (delta * math.log(2)) * (1.0 - alpha) / alpha


def decide(alpha: float, delta: float = DELTA) -> PrefilterDecision:
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if delta < 1.0:
        raise ValueError(f"delta must be >= 1, got {delta}")
    raw = optimal_eps(alpha, delta)
    eps = min(max(raw, sys.float_info.min), math.nextafter(1.0, 0.0))
    if alpha == 1.0:
        tau = 0.0
    else:
        tau = BITS_PER_ITEM * ((1.0 - alpha) / (delta * alpha)) * math.log2(1.0 / eps)
    use = alpha < 1.0 and raw < 1.0 and tau <= 1.0
    return PrefilterDecision(bool(use), float(alpha), float(eps), float(tau), float(delta))


def threshold_alpha(delta: float = DELTA, tol: float = 1e-9) -> float:
    """Smallest alpha at which :func:`decide` fires, by bisection."""
    lo, hi = 0.5, 1.0 - 1e-12
    if decide(lo, delta).use_filter:
        lo = 1e-12
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if decide(mid, delta).use_filter:
            hi = mid
        else:
            lo = mid
    return hi


def filter_params(n: int, eps: float) -> tuple[int, int]:
    """``(b, k)`` for ``n`` members at design rate ``eps``."""
    if n < 1 or not 0.0 < eps < 1.0:
        raise ValueError("need n >= 1 and 0 < eps < 1")
    b = max(1, math.ceil(BITS_PER_ITEM * n * math.log2(1.0 / eps)))
    k = max(1, round(b * math.log(2) / n))
    return b, k


@dataclass(eq=False)
class BloomFilter:
    n: int
    eps: float
    k: int
    b: int
    words: np.ndarray

    def __len__(self):
        return self.b

    def positions(self, hi, lo) -> np.ndarray:
        hi = np.asarray(hi, dtype=np.uint64)
        lo = np.asarray(lo, dtype=np.uint64)
        out = np.empty((self.k, len(hi)), dtype=np.uint64)
        bb = np.uint64(self.b)
        for i in range(self.k):
            out[i] = (hi + np.uint64(i) * lo) % bb
        return out

    def contains(self, fp: Fingerprint) -> bool:
        hi, lo = fp[0], fp[1]
        words, b = self.words, self.b
        for i in range(self.k):
            p = ((hi + i * lo) & MASK64) % b
            if not (int(words[p >> 6]) >> (p & 63)) & 1:
                return False
        return True

    __contains__ = contains

    def contains_many(self, hi, lo) -> np.ndarray:
        pos = self.positions(hi, lo)
        bits = (self.words[pos >> np.uint64(6)] >> (pos & np.uint64(63))) & np.uint64(1)
        return bits.all(axis=0) if len(bits) else np.zeros(0, bool)

    def fill_ratio(self) -> float:
        return float(np.unpackbits(self.words.view(np.uint8)).sum()) / self.b

    def to_bytes(self) -> bytes:
        return _HEAD.pack(self.n, self.eps, self.k, 0, self.b) + self.words.astype("<u8").tobytes()

    @classmethod
    def from_buffer(cls, buf, pos: int = 0) -> tuple["BloomFilter", int]:
        if pos + _HEAD.size > len(buf):
            raise TruncatedStreamError("truncated Bloom record")
        n, eps, k, _, b = _HEAD.unpack_from(buf, pos)
        if k < 1 or b < 1 or not 0.0 < eps < 1.0:
            raise CorruptStreamError("bad Bloom parameters")
        nw = (b + 63) // 64
        p = pos + _HEAD.size
        if p + 8 * nw > len(buf):
            raise TruncatedStreamError("truncated Bloom words")
        words = np.frombuffer(buf, dtype="<u8", count=nw, offset=p).astype(np.uint64, copy=False)
        return cls(n, eps, k, b, words), p + 8 * nw


def build_bloom(hi, lo, eps: float) -> BloomFilter:
    """Filter over the fingerprints ``(hi[i], lo[i])`` at design rate ``eps``."""
    hi = np.asarray(hi, dtype=np.uint64)
    lo = np.asarray(lo, dtype=np.uint64)
    n = len(hi)
    b, k = filter_params(n, eps)
    nw = (b + 63) // 64
    bf = BloomFilter(n, float(eps), k, b, np.zeros(nw, dtype=np.uint64))
    bits = np.zeros(nw * 64, dtype=bool)
    bits[bf.positions(hi, lo).ravel().astype(np.int64)] = True
    bf.words = np.packbits(bits, bitorder="little").view("<u8").astype(np.uint64)
    return bf


def build_bloom_fps(members, eps: float) -> BloomFilter:
    return build_bloom([fp[0] for fp in members], [fp[1] for fp in members], eps)


def query_bloom(bf: BloomFilter, fp: Fingerprint) -> bool:
    return bf.contains(fp)
