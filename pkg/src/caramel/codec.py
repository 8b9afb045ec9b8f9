"""Empirical entropy and canonical Huffman coding of a column's values.

Values are opaque byte strings.  Canonical codewords are assigned in order of
increasing length and, within a length, by :func:`symbol_key` (shorter byte
strings first, then by little-endian integer value), so a codebook is fully
described by its sorted values and their lengths.
"""
from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import CorruptStreamError, UnknownSymbolError, UnsupportedCardinalityError

MAX_CODE_LENGTH = 58
MAX_SYMBOLS = 1 << 32


def symbol_key(v: bytes) -> tuple[int, int]:
    return len(v), int.from_bytes(v, "little")


@dataclass(frozen=True)
class FrequencyTable:
    """Value multiset summary: ``(value, count)`` sorted by count desc, value asc."""

    entries: tuple[tuple[bytes, int], ...]
    total: int

    def __post_init__(self):
        if self.total != sum(c for _, c in self.entries):
            raise ValueError("counts do not sum to total")

    @classmethod
    def from_counts(cls, counts: Mapping[bytes, int]) -> "FrequencyTable":
        entries = tuple(sorted(((bytes(v), int(c)) for v, c in counts.items() if c > 0),
                               key=lambda e: (-e[1], e[0])))
        return cls(entries, sum(c for _, c in entries))

    @classmethod
    def from_values(cls, values: Iterable[bytes]) -> "FrequencyTable":
        return cls.from_counts(Counter(values))

    def __len__(self):
        return len(self.entries)

    @property
    def dominant(self) -> tuple[bytes, int]:
        """Most frequent value, ties broken by smallest value bytes."""
        return self.entries[0]

    def as_dict(self) -> dict[bytes, int]:
        return dict(self.entries)


def entropy(ft: FrequencyTable) -> float:
    """First-order empirical entropy in bits per element."""
    n = ft.total
    if n < 1:
        raise ValueError("entropy of an empty multiset")
    return math.fsum((c / n) * math.log2(n / c) for _, c in ft.entries)


def huffman_lengths(counts: list[int], tiebreak: list[bytes]) -> list[int]:
    """Unrestricted Huffman code lengths.

    Merges always take the two smallest ``(count, tiebreak)`` pairs; an
    internal node inherits the smallest tiebreak of its subtree.
    """
    n = len(counts)
    if n < 2:
        raise ValueError("Huffman coding needs at least two symbols")
    heap = [(c, t, i) for i, (c, t) in enumerate(zip(counts, tiebreak))]
    heapq.heapify(heap)
    parent = [-1] * (2 * n - 1)
    nxt = n
    while len(heap) > 1:
        c1, t1, a = heapq.heappop(heap)
        c2, t2, b = heapq.heappop(heap)
        parent[a] = parent[b] = nxt
        heapq.heappush(heap, (c1 + c2, min(t1, t2), nxt))
        nxt += 1
    depth = [0] * (2 * n - 1)
    for node in range(2 * n - 3, -1, -1):
        depth[node] = depth[parent[node]] + 1
    return depth[:n]


def package_merge_lengths(counts: list[int], tiebreak: list[bytes], limit: int) -> list[int]:
    """Optimal prefix-code lengths subject to ``max length <= limit``."""
    n = len(counts)
    if n < 2:
        raise ValueError("need at least two symbols")
    if (1 << limit) < n:
        raise ValueError(f"{n} symbols cannot fit in codes of at most {limit} bits")
    order = sorted(range(n), key=lambda i: (counts[i], tiebreak[i]))
    leaf_w = [counts[i] for i in order]
    # Each level keeps the merged list as (weight, is_leaf) flags; the selected
    # items at every level form a prefix, so only leaf counts need tracking.
    levels = []
    cur = [(w, True) for w in leaf_w]
    levels.append(cur)
    for _ in range(limit - 1):
        pk = [cur[j][0] + cur[j + 1][0] for j in range(0, len(cur) - 1, 2)]
        merged = []
        i = j = 0
        while i < n or j < len(pk):
            if j >= len(pk) or (i < n and leaf_w[i] <= pk[j]):
                merged.append((leaf_w[i], True))
                i += 1
            else:
                merged.append((pk[j], False))
                j += 1
        cur = merged
        levels.append(cur)
    lengths_sorted = [0] * n
    take = 2 * n - 2
    for lvl in reversed(levels):
        leaves = packages = 0
        for _, is_leaf in lvl[:take]:
            if is_leaf:
                leaves += 1
            else:
                packages += 1
        for i in range(leaves):
            lengths_sorted[i] += 1
        take = 2 * packages
    out = [0] * n
    for rank, i in enumerate(order):
        out[i] = lengths_sorted[rank]
    return out


_REV8 = np.array([int(f"{i:08b}"[::-1], 2) for i in range(256)], dtype=np.uint8)
_REV16 = [int(f"{i:016b}"[::-1], 2) for i in range(1 << 16)]


def reverse64(x: int) -> int:
    return (
        (_REV16[x & 0xFFFF] << 48)
        | (_REV16[(x >> 16) & 0xFFFF] << 32)
        | (_REV16[(x >> 32) & 0xFFFF] << 16)
        | _REV16[(x >> 48) & 0xFFFF]
    )


def reverse64_array(x: np.ndarray) -> np.ndarray:
    b = np.ascontiguousarray(x, dtype="<u8").view(np.uint8).reshape(-1, 8)
    return np.ascontiguousarray(_REV8[b][:, ::-1]).view("<u8").reshape(-1)


@dataclass(frozen=True)
class CanonicalCode:
    """Prefix-free code determined by per-symbol lengths.

    ``symbols[i]`` has codeword ``codes[i]`` of ``lengths[i]`` bits (MSB-first).
    """

    symbols: tuple[bytes, ...]
    lengths: tuple[int, ...]
    codes: tuple[int, ...] = field(init=False, repr=False)
    max_length: int = field(init=False)

    def __post_init__(self):
        if len(self.symbols) != len(self.lengths) or not self.symbols:
            raise ValueError("symbols and lengths must be non-empty and aligned")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("duplicate symbols")
        order = sorted(range(len(self.symbols)),
                       key=lambda i: (self.lengths[i], symbol_key(self.symbols[i])))
        syms = tuple(self.symbols[i] for i in order)
        lens = tuple(int(self.lengths[i]) for i in order)
        if lens[0] < 1 or lens[-1] > 64:
            raise ValueError("code lengths must lie in [1, 64]")
        if sum(1 << (lens[-1] - l) for l in lens) > (1 << lens[-1]):
            raise ValueError("lengths violate the Kraft inequality")
        maxlen = lens[-1]
        count = [0] * (maxlen + 1)
        for l in lens:
            count[l] += 1
        first = [0] * (maxlen + 1)
        offset = [0] * (maxlen + 1)
        code = 0
        for l in range(1, maxlen + 1):
            code = (code + count[l - 1]) << 1 if l > 1 else 0
            first[l] = code
            offset[l] = offset[l - 1] + count[l - 1] if l > 1 else 0
        codes = []
        for l in lens:
            codes.append(first[l] + len(codes) - offset[l])
        limits = [(first[l] + count[l]) << (maxlen - l) for l in range(1, maxlen + 1)]
        object.__setattr__(self, "symbols", syms)
        object.__setattr__(self, "lengths", lens)
        object.__setattr__(self, "codes", tuple(codes))
        object.__setattr__(self, "max_length", maxlen)
        object.__setattr__(self, "_count", count)
        object.__setattr__(self, "_first", first)
        object.__setattr__(self, "_offset", offset)
        object.__setattr__(self, "_limits", limits)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(syms)})

    @classmethod
    def from_lengths(cls, lengths: Mapping[bytes, int]) -> "CanonicalCode":
        items = list(lengths.items())
        return cls(tuple(v for v, _ in items), tuple(l for _, l in items))

    def __len__(self):
        return len(self.symbols)

    def kraft_sum(self) -> float:
        return math.fsum(2.0 ** -l for l in self.lengths)

    def index(self, v: bytes) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownSymbolError(v) from None

    def length_of(self, v: bytes) -> int:
        return self.lengths[self.index(v)]

    def encode(self, v: bytes) -> str:
        i = self.index(v)
        return format(self.codes[i], f"0{self.lengths[i]}b")

    def decode_prefix(self, bits: Iterable) -> tuple[bytes, int]:
        """Decode one codeword from the front of a bit stream (MSB-first)."""
        code = 0
        n = 0
        for b in bits:
            code = (code << 1) | (1 if b in (1, "1", True) else 0)
            n += 1
            if code - self._first[n] < self._count[n]:
                return self.symbols[self._offset[n] + code - self._first[n]], n
            if n == self.max_length:
                break
        raise CorruptStreamError(f"no valid codeword within {n} bits")

    def decode_window(self, window: int) -> int:
        """Canonical index of the codeword whose bit ``i`` is bit ``i`` of ``window``."""
        m = self.max_length
        x = reverse64(window) >> (64 - m)
        l = bisect_right(self._limits, x) + 1
        if l > m:
            raise CorruptStreamError("window holds no valid codeword")
        return self._offset[l] + (x >> (m - l)) - self._first[l]

    def decode_windows(self, windows: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`decode_window`; returns int64 canonical indices."""
        m = self.max_length
        x = reverse64_array(windows) >> np.uint64(64 - m)
        limits = np.array(self._limits, dtype=np.uint64)
        l = np.searchsorted(limits, x, side="right") + 1
        if len(l) and int(l.max()) > m:
            raise CorruptStreamError("window holds no valid codeword")
        first = np.array(self._first, dtype=np.uint64)
        offset = np.array(self._offset, dtype=np.int64)
        shift = (m - l).astype(np.uint64)
        return offset[l] + ((x >> shift) - first[l]).astype(np.int64)

    def codeword_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.codes, dtype=np.uint64), np.array(self.lengths, dtype=np.int64)

    def average_length(self, ft: FrequencyTable) -> float:
        return math.fsum(c * self.length_of(v) for v, c in ft.entries) / ft.total

    # -- codebook block -------------------------------------------------------

    def to_bytes(self) -> bytes:
        """Serialize as sorted values plus a bit-packed length per value."""
        order = sorted(range(len(self.symbols)), key=lambda i: symbol_key(self.symbols[i]))
        vals = [self.symbols[i] for i in order]
        out = bytearray()
        out += encode_varint(len(vals))
        out.append(self.max_length)
        out += _encode_values(vals)
        width = _length_width(self.max_length)
        w = BitWriter()
        for i in order:
            w.write(self.lengths[i] - 1, width)
        out += w.getvalue()
        return bytes(out)

    @classmethod
    def from_bytes(cls, buf, pos: int = 0) -> tuple["CanonicalCode", int]:
        z, pos = decode_varint(buf, pos)
        if pos >= len(buf):
            raise CorruptStreamError("truncated codebook")
        max_length = buf[pos]
        pos += 1
        vals, pos = _decode_values(buf, pos, z)
        width = _length_width(max_length)
        nbytes = (z * width + 7) // 8
        if pos + nbytes > len(buf):
            raise CorruptStreamError("truncated codebook lengths")
        r = BitReader(bytes(buf[pos:pos + nbytes]))
        lengths = tuple(r.read(width) + 1 for _ in range(z))
        try:
            code = cls(tuple(vals), lengths)
        except ValueError as e:
            raise CorruptStreamError(f"bad codebook: {e}") from None
        if code.max_length != max_length:
            raise CorruptStreamError("codebook max length mismatch")
        return code, pos + nbytes

    def value_bits(self) -> int:
        """Bits spent on the value dictionary inside :meth:`to_bytes`."""
        vals = sorted(self.symbols, key=symbol_key)
        return 8 * len(_encode_values(vals))

    def length_bits(self) -> int:
        return len(self.symbols) * _length_width(self.max_length)


def build_code(ft: FrequencyTable, max_length: int = MAX_CODE_LENGTH) -> CanonicalCode:
    """Huffman-optimal canonical code, length-limited to ``max_length`` bits."""
    z = len(ft)
    if z > MAX_SYMBOLS:
        raise UnsupportedCardinalityError(f"{z} distinct values exceed 2**32")
    if z < 2:
        raise ValueError("a code needs at least two distinct values")
    vals = [v for v, _ in ft.entries]
    counts = [c for _, c in ft.entries]
    lengths = huffman_lengths(counts, vals)
    if max(lengths) > max_length:
        lengths = package_merge_lengths(counts, vals, max_length)
    return CanonicalCode(tuple(vals), tuple(lengths))


def _length_width(max_length: int) -> int:
    return (max_length - 1).bit_length()


# -- small byte/bit helpers ---------------------------------------------------

def encode_varint(x: int) -> bytes:
    if x < 0:
        raise ValueError("varint must be non-negative")
    out = bytearray()
    while True:
        b = x & 0x7F
        x >>= 7
        if x:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def decode_varint(buf, pos: int) -> tuple[int, int]:
    x = shift = 0
    while True:
        if pos >= len(buf):
            raise CorruptStreamError("truncated varint")
        b = buf[pos]
        pos += 1
        x |= (b & 0x7F) << shift
        shift += 7
        if not b & 0x80:
            return x, pos
        if shift > 70:
            raise CorruptStreamError("varint too long")


class BitWriter:
    """LSB-first bit packer."""

    def __init__(self):
        self.acc = 0
        self.n = 0

    def write(self, value: int, width: int):
        if width:
            self.acc |= (value & ((1 << width) - 1)) << self.n
            self.n += width

    def write_unary(self, q: int):
        self.acc |= ((1 << q) - 1) << self.n
        self.n += q + 1

    def getvalue(self) -> bytes:
        return self.acc.to_bytes((self.n + 7) // 8, "little")


class BitReader:
    def __init__(self, data: bytes):
        self.acc = int.from_bytes(data, "little")
        self.limit = 8 * len(data)
        self.n = 0

    def read(self, width: int) -> int:
        if self.n + width > self.limit:
            raise CorruptStreamError("bit stream exhausted")
        v = (self.acc >> self.n) & ((1 << width) - 1)
        self.n += width
        return v

    def read_unary(self) -> int:
        rest = self.acc >> self.n
        # number of trailing ones
        q = (~rest & (rest + 1)).bit_length() - 1
        if self.n + q + 1 > self.limit:
            raise CorruptStreamError("bit stream exhausted")
        self.n += q + 1
        return q


_RAW, _FIXED = 0, 1


def _encode_values(vals: list[bytes]) -> bytes:
    """Values in ascending :func:`symbol_key` order.

    Fixed-width values up to 8 bytes are stored as Rice-coded gaps between
    consecutive little-endian integers, falling back to raw length-prefixed
    bytes when that is not smaller.
    """
    raw = bytearray([_RAW])
    for v in vals:
        raw += encode_varint(len(v))
        raw += v
    width = len(vals[0])
    if not 1 <= width <= 8 or any(len(v) != width for v in vals):
        return bytes(raw)
    ints = [int.from_bytes(v, "little") for v in vals]
    gaps = [b - a - 1 for a, b in zip(ints, ints[1:])]
    mean = sum(gaps) / len(gaps) if gaps else 0
    k = max(0, int(mean).bit_length() - 1) if mean >= 1 else 0
    nbits = sum((g >> k) + 1 + k for g in gaps)
    if nbits > 8 * len(raw):
        return bytes(raw)
    out = bytearray([_FIXED, width])
    out += encode_varint(ints[0])
    out.append(k)
    w = BitWriter()
    for g in gaps:
        w.write_unary(g >> k)
        w.write(g, k)
    stream = w.getvalue()
    out += encode_varint(len(stream))
    out += stream
    return bytes(out)


def _decode_values(buf, pos: int, z: int) -> tuple[list[bytes], int]:
    if pos >= len(buf):
        raise CorruptStreamError("truncated value dictionary")
    mode = buf[pos]
    pos += 1
    if mode == _RAW:
        vals = []
        for _ in range(z):
            n, pos = decode_varint(buf, pos)
            if pos + n > len(buf):
                raise CorruptStreamError("truncated value")
            vals.append(bytes(buf[pos:pos + n]))
            pos += n
        return vals, pos
    if mode != _FIXED:
        raise CorruptStreamError(f"unknown value mode {mode}")
    width = buf[pos]
    first, pos = decode_varint(buf, pos + 1)
    k = buf[pos]
    nbytes, pos = decode_varint(buf, pos + 1)
    if pos + nbytes > len(buf):
        raise CorruptStreamError("truncated gap stream")
    r = BitReader(bytes(buf[pos:pos + nbytes]))
    ints = [first]
    for _ in range(z - 1):
        q = r.read_unary()
        ints.append(ints[-1] + ((q << k) | r.read(k)) + 1)
    pos += nbytes
    try:
        vals = [x.to_bytes(width, "little") for x in ints]
    except OverflowError:
        raise CorruptStreamError("value out of range for its width") from None
    return vals, pos
