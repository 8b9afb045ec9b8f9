"""Compressed static function over one column of values.

Keys are split into chunks by the top bits of their fingerprint.  Inside a
chunk every key contributes one GF(2) equation per bit of its canonical
Huffman codeword; the solution vector ``g`` of each chunk is stored, the keys
are not.  A lookup XORs three 64-bit windows of ``g`` and decodes the first
codeword in the result.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import hashing
from .codec import CanonicalCode, FrequencyTable, build_code
from .errors import (ConstructionFailedError, CorruptStreamError, DuplicateKeyError,
                     IndexCorruptionError, TruncatedStreamError)
from .gf2 import BitVector, expand_equations, solve_arrays
from .hashing import MASK64, Fingerprint

GAMMA = 1.10
SEEDS_PER_GAMMA = 10
MAX_ESCALATIONS = 3
ESCALATION = 1.05
# Equations per chunk.  Dense elimination on the unpeeled core is quadratic,
# so chunks are kept around this size regardless of key count.
TARGET_CHUNK_BITS = 1 << 14
MIN_SLACK = 12

_HEAD = struct.Struct("<QIIQ")


def spot_count(n_equations: int, gamma: float) -> int:
    """Size of the hashed variable range: ``ceil(gamma*E)`` rounded up to a multiple of 3.

    Tiny systems get at least ``MIN_SLACK`` spare variables; with a handful of
    spots per third, distinct keys collide on whole triples too often.
    """
    L = max(math.ceil(gamma * n_equations), n_equations + MIN_SLACK)
    return L + (-L) % 3


def chunk_bits_for(total_bits: int, target: int = TARGET_CHUNK_BITS) -> int:
    """log2 of the smallest power-of-two chunk count with at most ``target`` bits per chunk."""
    bits = 0
    while (total_bits >> bits) > target:
        bits += 1
    while bits and total_bits > target << bits:
        bits += 1
    return min(bits, 32)


def chunk_of(hi, chunk_bits: int):
    if chunk_bits == 0:
        return np.zeros(len(hi), dtype=np.int64) if isinstance(hi, np.ndarray) else 0
    if isinstance(hi, np.ndarray):
        return (hi >> np.uint64(64 - chunk_bits)).astype(np.int64)
    return hi >> (64 - chunk_bits)


def check_distinct(hi: np.ndarray, lo: np.ndarray) -> None:
    """Raise :class:`DuplicateKeyError` (with key indices) on a repeated fingerprint."""
    if len(hi) < 2:
        return
    order = np.lexsort((lo, hi))
    same = (hi[order[1:]] == hi[order[:-1]]) & (lo[order[1:]] == lo[order[:-1]])
    if same.any():
        i = int(np.argmax(same))
        a, b = sorted((int(order[i]), int(order[i + 1])))
        raise DuplicateKeyError(a, b)


@dataclass(eq=False)
class CsfColumn:
    code: CanonicalCode
    master_seed: int
    chunk_bits: int
    seeds: np.ndarray        # uint64, per chunk
    n_spots: np.ndarray      # int64, hashed variable range per chunk
    words: np.ndarray        # uint64, all chunks back to back plus one pad word
    code_bits: int           # total codeword bits over the build set
    attempts: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        nw = (self.n_spots + self.code.max_length - 1 + 63) // 64
        self.offsets = np.concatenate(([0], np.cumsum(nw))).astype(np.int64)
        if len(self.words) < self.offsets[-1] + 1:
            raise TruncatedStreamError("solution words shorter than the chunk table implies")
        # plain Python copies for the scalar query path
        self._seeds = [int(s) for s in self.seeds]
        self._n_spots = [int(s) for s in self.n_spots]
        self._bases = [int(o) * 64 for o in self.offsets[:-1]]
        self._buf = memoryview(self.words.view(np.uint8))
        self._syms = self.code.symbols
        self._mix = [hashing.seed_mix(sd) for sd in self._seeds]
        self._third = [n // 3 for n in self._n_spots]

    @property
    def chunk_count(self) -> int:
        return 1 << self.chunk_bits

    @property
    def chunks(self) -> list[tuple[int, BitVector]]:
        out = []
        for c in range(self.chunk_count):
            L = self._n_spots[c] + self.code.max_length - 1
            w = self.words[self.offsets[c]:self.offsets[c + 1]]
            out.append((self._seeds[c], BitVector(L, w)))
        return out

    @property
    def g_bits(self) -> int:
        return int((self.n_spots + self.code.max_length - 1).sum())

    @property
    def overhead(self) -> float:
        """Solution bits per codeword bit."""
        return self.g_bits / self.code_bits if self.code_bits else math.inf

    def nbytes(self) -> int:
        return len(self.to_bytes())

    # -- queries --------------------------------------------------------------

    def query_index(self, hi: int, lo: int) -> int:
        c = hi >> (64 - self.chunk_bits) if self.chunk_bits else 0
        h = hashing.spots_mixed(hi, lo, self._mix[c], self._third[c])
        base = self._bases[c]
        buf = self._buf
        w = 0
        for s in h:
            p = base + s
            b = p >> 3
            w ^= int.from_bytes(buf[b:b + 9], "little") >> (p & 7)
        try:
            return self.code.decode_window(w & MASK64)
        except CorruptStreamError as e:
            raise IndexCorruptionError(str(e)) from None

    def query(self, fp: Fingerprint) -> bytes:
        return self._syms[self.query_index(fp[0], fp[1])]

    def query_indices(self, hi: np.ndarray, lo: np.ndarray) -> np.ndarray:
        """Vectorised lookup; returns canonical symbol indices."""
        hi = np.asarray(hi, dtype=np.uint64)
        lo = np.asarray(lo, dtype=np.uint64)
        c = chunk_of(hi, self.chunk_bits)
        spots = hashing.equation_spots_array(hi, lo, self.seeds[c], self.n_spots[c])
        base = self.offsets[c] * 64
        w = np.zeros(len(hi), dtype=np.uint64)
        one, s63 = np.uint64(1), np.uint64(63)
        for j in range(3):
            p = base + spots[:, j]
            wi = p >> 6
            sh = (p & 63).astype(np.uint64)
            w ^= (self.words[wi] >> sh) | ((self.words[wi + 1] << one) << (s63 - sh))
        try:
            return self.code.decode_windows(w)
        except CorruptStreamError as e:
            raise IndexCorruptionError(str(e)) from None

    def query_many(self, hi: np.ndarray, lo: np.ndarray) -> list[bytes]:
        syms = self._syms
        return [syms[i] for i in self.query_indices(hi, lo)]

    # -- serialization --------------------------------------------------------

    def to_bytes(self) -> bytes:
        cb = self.code.to_bytes()
        out = bytearray(_HEAD.pack(self.master_seed, self.chunk_bits, len(cb), self.code_bits))
        out += cb
        out += bytes(-len(out) % 8)
        out += self.seeds.astype("<u8").tobytes()
        out += self.n_spots.astype("<u8").tobytes()
        out += self.words[: self.offsets[-1] + 1].astype("<u8").tobytes()
        return bytes(out)

    @classmethod
    def from_buffer(cls, buf, pos: int = 0) -> tuple["CsfColumn", int]:
        """Parse a record at the 8-aligned offset ``pos``; arrays view ``buf`` without copying."""
        if pos + _HEAD.size > len(buf):
            raise TruncatedStreamError("truncated CSF record")
        master, chunk_bits, cb_len, code_bits = _HEAD.unpack_from(buf, pos)
        if chunk_bits > 32:
            raise CorruptStreamError(f"chunk bits {chunk_bits} out of range")
        p = pos + _HEAD.size
        if p + cb_len > len(buf):
            raise TruncatedStreamError("truncated codebook")
        code, end = CanonicalCode.from_bytes(buf[p:p + cb_len])
        if end != cb_len:
            raise CorruptStreamError("codebook length mismatch")
        p += cb_len
        p += -(p - pos) % 8
        cc = 1 << chunk_bits
        if p + 16 * cc > len(buf):
            raise TruncatedStreamError("truncated chunk table")
        seeds = np.frombuffer(buf, dtype="<u8", count=cc, offset=p)
        n_spots = np.frombuffer(buf, dtype="<u8", count=cc, offset=p + 8 * cc).astype(np.int64)
        p += 16 * cc
        if (n_spots < 3).any() or (n_spots % 3).any():
            raise CorruptStreamError("bad chunk variable count")
        nw = int(((n_spots + code.max_length - 1 + 63) // 64).sum()) + 1
        if p + 8 * nw > len(buf):
            raise TruncatedStreamError("truncated solution words")
        words = np.frombuffer(buf, dtype="<u8", count=nw, offset=p)
        col = cls(code, master, chunk_bits, seeds.astype(np.uint64, copy=False), n_spots,
                  words.astype(np.uint64, copy=False), code_bits)
        return col, p + 8 * nw


def _solve_chunk(hi, lo, codes, lens, maxlen, master_seed, chunk, gamma):
    """Returns (seed, n_spots, words, attempts)."""
    E = int(lens.sum())
    attempt = 0
    for esc in range(MAX_ESCALATIONS + 1):
        n_spots = spot_count(E, gamma * ESCALATION ** esc)
        for _ in range(SEEDS_PER_GAMMA):
            seed = hashing.chunk_seed(master_seed, chunk, attempt)
            attempt += 1
            L = n_spots + maxlen - 1
            if E == 0:
                return seed, n_spots, np.zeros((L + 63) // 64, np.uint64), attempt
            spots = hashing.equation_spots_array(hi, lo, seed, n_spots)
            eq, rhs = expand_equations(spots, codes, lens)
            words = solve_arrays(eq, rhs, L)
            if words is not None:
                return seed, n_spots, words, attempt
    raise ConstructionFailedError(
        f"chunk {chunk}: no solvable seed after {attempt} attempts ({E} equations)")


def build_csf(hi: np.ndarray, lo: np.ndarray, values: Sequence[bytes], master_seed: int,
              gamma: float = GAMMA, code: Optional[CanonicalCode] = None,
              chunk_order: Optional[Iterable[int]] = None,
              target_chunk_bits: int = TARGET_CHUNK_BITS) -> CsfColumn:
    """Build a CSF mapping fingerprint ``(hi[i], lo[i])`` to ``values[i]``.

    ``chunk_order`` only changes the order chunks are solved in; the result
    does not depend on it.
    """
    hi = np.asarray(hi, dtype=np.uint64)
    lo = np.asarray(lo, dtype=np.uint64)
    n = len(values)
    if n == 0 or len(hi) != n or len(lo) != n:
        raise ValueError("need at least one key and aligned fingerprint/value arrays")
    check_distinct(hi, lo)
    if code is None:
        code = build_code(FrequencyTable.from_values(values))
    index = code._index
    sym = np.fromiter((index[v] for v in values), dtype=np.int64, count=n)
    cw, cl = code.codeword_arrays()
    codes, lens = cw[sym], cl[sym]
    total = int(lens.sum())
    chunk_bits = chunk_bits_for(total, target_chunk_bits)
    cc = 1 << chunk_bits
    chunk = chunk_of(hi, chunk_bits)
    order = np.argsort(chunk, kind="stable")
    bounds = np.searchsorted(chunk[order], np.arange(cc + 1))
    todo = range(cc) if chunk_order is None else list(chunk_order)
    if sorted(todo) != list(range(cc)):
        raise ValueError("chunk_order must be a permutation of the chunk indices")
    results = {}
    for c in todo:
        c = int(c)
        sel = order[bounds[c]:bounds[c + 1]]
        results[c] = _solve_chunk(hi[sel], lo[sel], codes[sel], lens[sel], code.max_length,
                                  master_seed, c, gamma)
    seeds = np.array([results[c][0] for c in range(cc)], dtype=np.uint64)
    n_spots = np.array([results[c][1] for c in range(cc)], dtype=np.int64)
    words = np.concatenate([results[c][2] for c in range(cc)] + [np.zeros(1, np.uint64)])
    attempts = np.array([results[c][3] for c in range(cc)], dtype=np.int64)
    return CsfColumn(code, master_seed & MASK64, chunk_bits, seeds, n_spots, words, total, attempts)


def build_csf_pairs(pairs: Sequence[tuple[Fingerprint, bytes]], master_seed: int, **kw) -> CsfColumn:
    hi = np.array([fp[0] for fp, _ in pairs], dtype=np.uint64)
    lo = np.array([fp[1] for fp, _ in pairs], dtype=np.uint64)
    return build_csf(hi, lo, [v for _, v in pairs], master_seed, **kw)


def query_csf(col: CsfColumn, fp: Fingerprint) -> bytes:
    return col.query(fp)
