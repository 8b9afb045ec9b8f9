"""Binary index format.  All integers little-endian, all blocks 8-byte aligned.

::

    header (48 bytes)
        magic "CRML" | u16 version | u8 hash id | u8 flags
        u64 master seed | u64 N | u16 m | u8 value kind | u8 reserved
        u32 block size | f64 delta | u64 xxh3-64 of the preceding 40 bytes (0 if unchecked)
    m column blocks
        u64 body length | body | u64 xxh3-64 of body (only with the checksum flag)
    footer "CRMLEND\\0"

A column body starts with ``u8 kind | u8 inner | u16 0 | u32 distinct |
f64 alpha | f64 entropy`` followed by the dominant value record and, by kind,
a Bloom record, an inner value record and/or a CSF record.  A value record is
``u32 length`` + bytes, zero-padded to 8.  The trailing footer guarantees that
64-bit window reads past the last solution word stay inside the file.
"""
from __future__ import annotations

import mmap
import struct
from typing import Union

import xxhash

from .bloom import BloomFilter
from .csf import CsfColumn
from .errors import (BadMagicError, ChecksumMismatchError, CorruptIndexError, CorruptStreamError,
                     IndexCorruptionError, TruncatedStreamError, VersionMismatchError)
from .hashing import HASH_ID
from .table import CONSTANT, FILTERED, PLAIN, CaramelTable, ColumnStore

MAGIC = b"CRML"
VERSION = 1
FOOTER = b"CRMLEND\0"
FLAG_CHECKSUMS, FLAG_PERMUTED, FLAG_BLOOM = 1, 2, 4

_HEADER = struct.Struct("<4sHBBQQHBBId")
HEADER_SIZE = _HEADER.size + 8
_BODY = struct.Struct("<BBHIdd")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")

_KIND_CODE = {CONSTANT: 0, PLAIN: 1, FILTERED: 2}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def _value_record(v: bytes) -> bytes:
    rec = _U32.pack(len(v)) + v
    return rec + bytes(-len(rec) % 8)


def _read_value(buf, pos: int, end: int) -> tuple[bytes, int]:
    if pos + 4 > end:
        raise TruncatedStreamError("truncated value record")
    (n,) = _U32.unpack_from(buf, pos)
    stop = pos + 4 + n
    if stop > end:
        raise TruncatedStreamError("truncated value record")
    return bytes(buf[pos + 4:stop]), stop + (-(4 + n) % 8)


def column_body(col: ColumnStore) -> bytes:
    out = bytearray(_BODY.pack(_KIND_CODE[col.kind], int(col.csf is not None), 0,
                               col.distinct, col.alpha, col.entropy))
    out += _value_record(col.v0)
    if col.kind == FILTERED:
        out += col.bloom.to_bytes()
        if col.csf is None:
            out += _value_record(col.inner_value)
    if col.csf is not None:
        out += col.csf.to_bytes()
    return bytes(out)


def parse_column(buf, pos: int, end: int) -> ColumnStore:
    if pos + _BODY.size > end:
        raise TruncatedStreamError("truncated column header")
    kc, inner, _, distinct, alpha, h0 = _BODY.unpack_from(buf, pos)
    if kc not in _CODE_KIND or inner not in (0, 1):
        raise CorruptIndexError(f"unknown column kind {kc}/{inner}")
    kind = _CODE_KIND[kc]
    v0, p = _read_value(buf, pos + _BODY.size, end)
    col = ColumnStore(kind, v0, alpha, h0, distinct)
    if kind == CONSTANT and inner:
        raise CorruptIndexError("constant column with a CSF")
    if kind == PLAIN and not inner:
        raise CorruptIndexError("plain column without a CSF")
    if kind == FILTERED:
        col.bloom, p = BloomFilter.from_buffer(buf[:end], p)
        if not inner:
            col.inner_value, p = _read_value(buf, p, end)
    if inner:
        col.csf, p = CsfColumn.from_buffer(buf[:end], p)
    if p != end:
        raise CorruptIndexError(f"column body has {end - p} unparsed bytes")
    return col


def serialize(table: CaramelTable) -> bytes:
    flags = (FLAG_CHECKSUMS * table.checksums | FLAG_PERMUTED * table.permuted
             | FLAG_BLOOM * table.uses_bloom)
    head = _HEADER.pack(MAGIC, VERSION, HASH_ID, flags, table.master_seed, table.n_rows,
                        table.m, table.value_kind, 0, table.block_size, table.delta)
    out = bytearray(head)
    out += _U64.pack(xxhash.xxh3_64_intdigest(head) if table.checksums else 0)
    for col in table.columns:
        body = column_body(col)
        out += _U64.pack(len(body))
        out += body
        if table.checksums:
            out += _U64.pack(xxhash.xxh3_64_intdigest(body))
    out += FOOTER
    return bytes(out)


def deserialize(buf: Union[bytes, bytearray, memoryview, mmap.mmap]) -> CaramelTable:
    """Parse an index; solution and filter arrays are views into ``buf``."""
    mv = memoryview(buf)
    size = len(mv)
    if size < 4 or bytes(mv[:4]) != MAGIC:
        raise BadMagicError("not a CARAMEL index (bad magic)")
    if size < HEADER_SIZE + len(FOOTER):
        raise TruncatedStreamError("file shorter than header and footer")
    (_, version, hash_id, flags, seed, n, m, vkind, _, block, delta) = _HEADER.unpack_from(mv, 0)
    if version != VERSION:
        raise VersionMismatchError(f"index version {version}, this reader supports {VERSION}")
    if hash_id != HASH_ID:
        raise VersionMismatchError(f"hash id {hash_id}, this reader supports {HASH_ID}")
    checks = bool(flags & FLAG_CHECKSUMS)
    (hsum,) = _U64.unpack_from(mv, _HEADER.size)
    if checks and hsum != xxhash.xxh3_64_intdigest(bytes(mv[:_HEADER.size])):
        raise ChecksumMismatchError("header checksum mismatch")
    limit = size - len(FOOTER)
    pos = HEADER_SIZE
    columns = []
    for j in range(m):
        if pos + 8 > limit:
            raise TruncatedStreamError(f"missing block for column {j}")
        (blen,) = _U64.unpack_from(mv, pos)
        start = pos + 8
        end = start + blen
        if blen % 8 or end + 8 * checks > limit:
            raise TruncatedStreamError(f"column {j}: block length {blen} exceeds file")
        if checks:
            (csum,) = _U64.unpack_from(mv, end)
            if csum != xxhash.xxh3_64_intdigest(bytes(mv[start:end])):
                raise ChecksumMismatchError(f"column {j}: checksum mismatch")
        try:
            columns.append(parse_column(mv, start, end))
        except CorruptStreamError as e:
            raise IndexCorruptionError(f"column {j}: {e}") from None
        pos = end + 8 * checks
    if pos != limit:
        raise CorruptIndexError(f"{limit - pos} unexpected bytes before footer")
    if bytes(mv[limit:]) != FOOTER:
        raise TruncatedStreamError("missing footer")
    return CaramelTable(columns, n, seed, delta, block, bool(flags & FLAG_PERMUTED), checks, vkind)


def save(table: CaramelTable, path) -> int:
    data = serialize(table)
    with open(path, "wb") as f:
        f.write(data)
    return len(data)


def load(path, use_mmap: bool = True) -> CaramelTable:
    with open(path, "rb") as f:
        if not use_mmap:
            return deserialize(f.read())
        try:
            mm = mmap.mmap(f.fileno(), 0, access=mmap.ACCESS_READ)
        except ValueError:  # empty file
            return deserialize(b"")
    return deserialize(mm)
