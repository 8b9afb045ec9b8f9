"""A whole key -> row table: one independent store per column.

Each column becomes one of

* ``constant``: a single distinct value, stored literally;
* ``plain``: a CSF over all keys;
* ``filtered``: a Bloom filter over the keys whose value is not the dominant
  value ``v0``, plus a CSF over those keys and the ``v0`` keys that pass the
  filter by accident.  Keys rejected by the filter answer ``v0``.

Rows may optionally be reordered first (see :mod:`caramel.permute`) so that
columns become more skewed.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import hashing
from .bloom import DELTA, BloomFilter, PrefilterDecision, build_bloom, decide
from .codec import FrequencyTable, entropy
from .csf import GAMMA, CsfColumn, build_csf, check_distinct
from .errors import ColumnOutOfRangeError, DuplicateKeyError
from .permute import DEFAULT_BLOCK_SIZE, permute_rows

CONSTANT, PLAIN, FILTERED = "constant", "plain", "filtered"

VALUE_BYTES, VALUE_INT32, VALUE_INT64 = 0, 1, 2


@dataclass
class MatrixInput:
    keys: Sequence[bytes]
    rows: Sequence[Sequence[bytes]]
    permutable: bool = False

    def __post_init__(self):
        if len(self.keys) != len(self.rows):
            raise ValueError(f"{len(self.keys)} keys but {len(self.rows)} rows")
        if not self.rows:
            raise ValueError("need at least one row")
        m = len(self.rows[0])
        if m < 1:
            raise ValueError("rows must have at least one column")
        for i, row in enumerate(self.rows):
            if len(row) != m:
                raise ValueError(f"row {i} has {len(row)} entries, expected {m}")

    @property
    def m(self) -> int:
        return len(self.rows[0])


def _default_threads() -> int:
    env = os.environ.get("CARAMEL_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class BuildConfig:
    delta: float = DELTA
    permute: bool = False
    block_size: int = DEFAULT_BLOCK_SIZE
    master_seed: int = 0
    use_bloom: bool = True
    checksums: bool = True
    gamma: float = GAMMA
    threads: int = field(default_factory=_default_threads)
    value_kind: int = VALUE_BYTES


@dataclass(eq=False)
class ColumnStore:
    kind: str
    v0: bytes
    alpha: float
    entropy: float
    distinct: int
    csf: Optional[CsfColumn] = None
    bloom: Optional[BloomFilter] = None
    # filtered column whose CSF build set held a single value
    inner_value: Optional[bytes] = None

    def query(self, hi: int, lo: int) -> bytes:
        if self.kind == CONSTANT:
            return self.v0
        if self.kind == FILTERED and not self.bloom.contains((hi, lo)):
            return self.v0
        if self.csf is None:
            return self.inner_value
        return self.csf.query((hi, lo))

    def query_many(self, hi: np.ndarray, lo: np.ndarray) -> list[bytes]:
        n = len(hi)
        if self.kind == CONSTANT:
            return [self.v0] * n
        if self.kind == PLAIN:
            return self.csf.query_many(hi, lo)
        out = [self.v0] * n
        sel = np.nonzero(self.bloom.contains_many(hi, lo))[0]
        if len(sel):
            if self.csf is None:
                vals = [self.inner_value] * len(sel)
            else:
                vals = self.csf.query_many(hi[sel], lo[sel])
            for i, v in zip(sel.tolist(), vals):
                out[i] = v
        return out

    def decision(self, delta: float = DELTA) -> PrefilterDecision:
        return decide(self.alpha, delta)

    @property
    def g_bits(self) -> int:
        return self.csf.g_bits if self.csf is not None else 0

    @property
    def code_bits(self) -> int:
        return self.csf.code_bits if self.csf is not None else 0

    @property
    def bloom_bits(self) -> int:
        return self.bloom.b if self.bloom is not None else 0


def build_column(hi: np.ndarray, lo: np.ndarray, values: Sequence[bytes], seed: int,
                 delta: float = DELTA, use_bloom: bool = True, gamma: float = GAMMA,
                 eps: Optional[float] = None) -> ColumnStore:
    """Build one column store.

    ``eps`` forces the filtered layout at that design rate (``eps >= 1`` forces
    the plain layout); by default the prefilter rule decides.
    """
    ft = FrequencyTable.from_values(values)
    v0, c0 = ft.dominant
    n = len(values)
    alpha = c0 / n
    h0 = entropy(ft)
    if len(ft) == 1:
        return ColumnStore(CONSTANT, v0, alpha, h0, 1)
    if eps is None:
        d = decide(alpha, delta)
        use, eps = use_bloom and d.use_filter, d.eps_star
    else:
        use = eps < 1.0
    if not use:
        csf = build_csf(hi, lo, values, seed, gamma=gamma)
        return ColumnStore(PLAIN, v0, alpha, h0, len(ft), csf=csf)
    other = np.fromiter((v != v0 for v in values), dtype=bool, count=n)
    bf = build_bloom(hi[other], lo[other], eps)
    keep = other.copy()
    dom = np.nonzero(~other)[0]
    keep[dom[bf.contains_many(hi[dom], lo[dom])]] = True
    idx = np.nonzero(keep)[0]
    sub = [values[i] for i in idx]
    if len(set(sub)) == 1:
        return ColumnStore(FILTERED, v0, alpha, h0, len(ft), bloom=bf, inner_value=sub[0])
    csf = build_csf(hi[idx], lo[idx], sub, seed, gamma=gamma)
    return ColumnStore(FILTERED, v0, alpha, h0, len(ft), csf=csf, bloom=bf)


@dataclass(eq=False)
class CaramelTable:
    columns: list[ColumnStore]
    n_rows: int
    master_seed: int
    delta: float = DELTA
    block_size: int = DEFAULT_BLOCK_SIZE
    permuted: bool = False
    checksums: bool = True
    value_kind: int = VALUE_BYTES

    @property
    def m(self) -> int:
        return len(self.columns)

    @property
    def uses_bloom(self) -> bool:
        return any(c.kind == FILTERED for c in self.columns)

    def fingerprint(self, key: bytes) -> hashing.Fingerprint:
        return hashing.fingerprint(key, self.master_seed)

    def _column(self, j: int) -> ColumnStore:
        if not 0 <= j < len(self.columns):
            raise ColumnOutOfRangeError(f"column {j} outside [0, {len(self.columns)})")
        return self.columns[j]

    def query(self, key: bytes, j: int) -> bytes:
        col = self._column(j)
        hi, lo = self.fingerprint(key)
        return col.query(hi, lo)

    def query_row(self, key: bytes) -> list[bytes]:
        hi, lo = self.fingerprint(key)
        return [c.query(hi, lo) for c in self.columns]

    def query_column(self, keys: Sequence[bytes], j: int) -> list[bytes]:
        col = self._column(j)
        hi, lo = hashing.fingerprint_keys(keys, self.master_seed)
        return col.query_many(hi, lo)

    def decode(self, keys: Sequence[bytes]) -> list[list[bytes]]:
        """Rows for many keys at once (vectorised per column)."""
        hi, lo = hashing.fingerprint_keys(keys, self.master_seed)
        cols = [c.query_many(hi, lo) for c in self.columns]
        return [list(r) for r in zip(*cols)]

    def to_bytes(self) -> bytes:
        from .fileformat import serialize
        return serialize(self)

    def nbytes(self) -> int:
        return len(self.to_bytes())


def fingerprint_input(keys: Sequence[bytes], seed: int) -> tuple[np.ndarray, np.ndarray]:
    if len(set(keys)) != len(keys):
        seen = {}
        for i, k in enumerate(keys):
            if k in seen:
                raise DuplicateKeyError(keys[seen[k]], k, f"key {k!r} appears twice")
            seen[k] = i
    hi, lo = hashing.fingerprint_keys(keys, seed)
    try:
        check_distinct(hi, lo)
    except DuplicateKeyError as e:
        raise DuplicateKeyError(keys[e.first], keys[e.second]) from None
    return hi, lo


def build(data: MatrixInput, config: Optional[BuildConfig] = None, **overrides) -> CaramelTable:
    """Build a table; keyword overrides patch fields of ``config``."""
    config = config or BuildConfig()
    if overrides:
        config = BuildConfig(**{**config.__dict__, **overrides})
    rows = data.rows
    if config.permute:
        rows = permute_rows(rows, config.block_size)
    seed = config.master_seed & hashing.MASK64
    hi, lo = fingerprint_input(data.keys, seed)
    m = data.m
    cols = list(zip(*rows))

    def one(j):
        return build_column(hi, lo, cols[j], hashing.column_seed(seed, j),
                            delta=config.delta, use_bloom=config.use_bloom, gamma=config.gamma)

    if config.threads > 1 and m > 1:
        with ThreadPoolExecutor(min(config.threads, m)) as ex:
            stores = list(ex.map(one, range(m)))
    else:
        stores = [one(j) for j in range(m)]
    return CaramelTable(stores, len(rows), seed, config.delta, config.block_size,
                        config.permute, config.checksums, config.value_kind)


def query(table: CaramelTable, key: bytes, j: int) -> bytes:
    return table.query(key, j)


def query_row(table: CaramelTable, key: bytes) -> list[bytes]:
    return table.query_row(key)
