"""Greedy within-row permutation that lowers the summed column entropy.

Each row may be reordered independently.  The greedy loop repeatedly picks the
(value, column) pair that the most rows could agree on, moves the value into
that column in all those rows and pins it there.  A row's pinned cells are
never touched again.  The loop stops once the best pair would move no more
than ``block_size`` rows.
"""
from __future__ import annotations

from typing import Sequence

import numba
import numpy as np

from .codec import FrequencyTable, entropy
from .errors import DuplicateInRowError

DEFAULT_BLOCK_SIZE = 8


@numba.njit(cache=True)
def _greedy(A, n_values, block_size):
    """In-place greedy on integer-coded rows ``A`` (N x m); returns the iteration count.

    ``cnt[v, c]`` is the number of rows that hold ``v`` unpinned and whose
    column ``c`` is still free, i.e. the weight of moving ``v`` into ``c``.
    Best pair: max weight, then smallest column, then smallest value id.
    """
    N, m = A.shape
    # rows holding each value (CSR) with a pinned flag per entry
    size = np.zeros(n_values, np.int64)
    for r in range(N):
        for j in range(m):
            size[A[r, j]] += 1
    ptr = np.zeros(n_values + 1, np.int64)
    for v in range(n_values):
        ptr[v + 1] = ptr[v] + size[v]
    rows = np.empty(ptr[n_values], np.int64)
    fill = ptr[:-1].copy()
    for r in range(N):
        for j in range(m):
            v = A[r, j]
            rows[fill[v]] = r
            fill[v] += 1
    done = np.zeros(ptr[n_values], np.bool_)
    cnt = np.empty((n_values, m), np.int64)
    for v in range(n_values):
        for c in range(m):
            cnt[v, c] = size[v]
    pinned = np.zeros((N, m), np.bool_)
    iters = 0
    while True:
        # values in descending unpinned count; a value whose count is below
        # the best weight so far cannot win
        order = np.argsort(-size, kind="mergesort")
        best, bv, bc = -1, -1, -1
        for t in range(n_values):
            v = order[t]
            if size[v] < best:
                break
            for c in range(m):
                w = cnt[v, c]
                if w > best or (w == best and (c < bc or (c == bc and v < bv))):
                    best, bv, bc = w, v, c
        if best <= block_size or best <= 0:
            break
        iters += 1
        for e in range(ptr[bv], ptr[bv + 1]):
            if done[e]:
                continue
            r = rows[e]
            if pinned[r, bc]:
                continue
            # v leaves the unpinned pool of row r
            for c in range(m):
                if not pinned[r, c]:
                    cnt[bv, c] -= 1
            done[e] = True
            size[bv] -= 1
            j = 0
            while A[r, j] != bv:
                j += 1
            A[r, j] = A[r, bc]
            A[r, bc] = bv
            pinned[r, bc] = True
            # column bc is no longer free in row r for the other unpinned values
            for q in range(m):
                if not pinned[r, q]:
                    cnt[A[r, q], bc] -= 1
    return iters


def encode_rows(rows: Sequence[Sequence[bytes]]) -> tuple[np.ndarray, list[bytes]]:
    """Integer-code a matrix; ids follow ascending value bytes."""
    distinct = sorted({v for row in rows for v in row})
    ids = {v: i for i, v in enumerate(distinct)}
    m = len(rows[0]) if rows else 0
    A = np.empty((len(rows), m), dtype=np.int64)
    for r, row in enumerate(rows):
        if len(row) != m:
            raise ValueError(f"row {r} has {len(row)} entries, expected {m}")
        A[r] = [ids[v] for v in row]
    return A, distinct


def check_row_duplicates(A: np.ndarray, distinct: Sequence[bytes]) -> None:
    if A.shape[1] < 2:
        return
    s = np.sort(A, axis=1)
    dup = (s[:, 1:] == s[:, :-1])
    if dup.any():
        r, j = np.argwhere(dup)[0]
        raise DuplicateInRowError(int(r), distinct[int(s[r, j])])


def permute_ids(A: np.ndarray, n_values: int, block_size: int = DEFAULT_BLOCK_SIZE) -> np.ndarray:
    A = np.array(A, dtype=np.int64, copy=True)
    if A.size:
        _greedy(A, int(n_values), int(block_size))
    return A


def permute_rows(rows: Sequence[Sequence[bytes]], block_size: int = DEFAULT_BLOCK_SIZE) -> list[list[bytes]]:
    """Return a copy of ``rows`` with every row reordered by the greedy loop."""
    if not rows:
        return []
    A, distinct = encode_rows(rows)
    check_row_duplicates(A, distinct)
    P = permute_ids(A, len(distinct), block_size)
    return [[distinct[i] for i in row] for row in P]


def column_entropy_sum(rows: Sequence[Sequence[bytes]]) -> float:
    """Sum over columns of the empirical zero-order entropy, in bits per row."""
    if not rows:
        return 0.0
    m = len(rows[0])
    return sum(entropy(FrequencyTable.from_values([row[j] for row in rows])) for j in range(m))
