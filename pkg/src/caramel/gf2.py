"""Sparse GF(2) systems with three variables per equation.

The solver peels the equation/variable incidence graph (repeatedly removing an
equation that owns a degree-1 variable) and runs dense Gaussian elimination,
64 bits per word, on whatever core is left.  Every solution is checked against
all equations before it is returned.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

import numba
import numpy as np

from .errors import CorruptStreamError, IndexCorruptionError, VariableRangeError

_ONE = np.uint64(1)
_63 = np.uint64(63)


class BitVector:
    """Fixed-length packed bit array; bit ``i`` is bit ``i % 64`` of word ``i // 64``."""

    __slots__ = ("words", "_len")

    def __init__(self, length: int, words: Optional[np.ndarray] = None):
        n_words = (length + 63) // 64
        if words is None:
            words = np.zeros(n_words, dtype=np.uint64)
        elif len(words) < n_words:
            raise ValueError("word array too short for the requested length")
        self.words = words
        self._len = length

    def __len__(self):
        return self._len

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self._len:
            raise IndexError(i)
        return int(self.words[i >> 6] >> np.uint64(i & 63)) & 1

    def set(self, i: int, bit: int = 1):
        if not 0 <= i < self._len:
            raise IndexError(i)
        mask = _ONE << np.uint64(i & 63)
        if bit:
            self.words[i >> 6] |= mask
        else:
            self.words[i >> 6] &= ~mask

    def __eq__(self, other):
        if not isinstance(other, BitVector) or len(other) != len(self):
            return NotImplemented
        n = (self._len + 63) // 64
        return bool(np.array_equal(self.words[:n], other.words[:n]))

    def __repr__(self):
        return f"BitVector({''.join(str(self[i]) for i in range(min(self._len, 64)))}{'...' if self._len > 64 else ''})"

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        bits = list(bits)
        bv = cls(len(bits))
        for i, b in enumerate(bits):
            if b:
                bv.set(i)
        return bv

    def to_bytes(self) -> bytes:
        return self.words[: (self._len + 63) // 64].astype("<u8").tobytes()


class Equation(NamedTuple):
    spots: tuple[int, int, int]
    rhs: int


@dataclass
class LinearSystem:
    n_vars: int
    spots: list = field(default_factory=list)
    rhs: list = field(default_factory=list)

    def add_equation(self, spots, rhs: int):
        s = tuple(sorted(int(v) for v in spots))
        if len(s) != 3 or len(set(s)) != 3:
            raise ValueError(f"an equation needs three distinct variables, got {spots}")
        if s[0] < 0 or s[2] >= self.n_vars:
            raise VariableRangeError(f"spot {s} outside [0, {self.n_vars})")
        self.spots.append(s)
        self.rhs.append(int(rhs) & 1)

    def __len__(self):
        return len(self.rhs)

    @property
    def equations(self) -> list[Equation]:
        return [Equation(s, r) for s, r in zip(self.spots, self.rhs)]

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        spots = np.array(self.spots, dtype=np.int64).reshape(-1, 3)
        return spots, np.array(self.rhs, dtype=np.uint8)


def add_key_equations(system: LinearSystem, triple, codeword) -> None:
    """Append one equation per codeword bit, shifting the triple by the bit index."""
    bits = [int(b) for b in codeword]
    if bits and max(triple) + len(bits) - 1 >= system.n_vars:
        raise VariableRangeError(
            f"triple {tuple(triple)} shifted by {len(bits) - 1} leaves [0, {system.n_vars})")
    for i, b in enumerate(bits):
        system.add_equation((triple[0] + i, triple[1] + i, triple[2] + i), b)


def expand_equations(spots: np.ndarray, codes: np.ndarray, lengths: np.ndarray):
    """Vectorised :func:`add_key_equations` for many keys.

    ``codes`` are MSB-first codewords.  Returns ``(eq_spots, rhs)``.
    """
    lengths = lengths.astype(np.int64)
    total = int(lengths.sum())
    key_of = np.repeat(np.arange(len(lengths)), lengths)
    starts = np.cumsum(lengths) - lengths
    bit = np.arange(total, dtype=np.int64) - starts[key_of]
    eq = spots[key_of] + bit[:, None]
    shift = (lengths[key_of] - 1 - bit).astype(np.uint64)
    rhs = ((codes[key_of] >> shift) & _ONE).astype(np.uint8)
    return eq, rhs


# -- numba kernels ------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _parity(x):
    x ^= x >> np.uint64(32)
    x ^= x >> np.uint64(16)
    x ^= x >> np.uint64(8)
    x ^= x >> np.uint64(4)
    x ^= x >> np.uint64(2)
    x ^= x >> np.uint64(1)
    return x & np.uint64(1)


@numba.njit(cache=True, nogil=True)
def _peel(spots, n_vars):
    E = spots.shape[0]
    deg = np.zeros(n_vars, np.int64)
    xr = np.zeros(n_vars, np.int64)
    for e in range(E):
        for j in range(3):
            v = spots[e, j]
            deg[v] += 1
            xr[v] ^= e
    stack = np.empty(n_vars, np.int64)
    top = 0
    for v in range(n_vars):
        if deg[v] == 1:
            stack[top] = v
            top += 1
    peel_eq = np.empty(E, np.int64)
    peel_var = np.empty(E, np.int64)
    n_peeled = 0
    while top > 0:
        top -= 1
        v = stack[top]
        if deg[v] != 1:
            continue
        e = xr[v]
        peel_eq[n_peeled] = e
        peel_var[n_peeled] = v
        n_peeled += 1
        for j in range(3):
            u = spots[e, j]
            deg[u] -= 1
            xr[u] ^= e
            if deg[u] == 1:
                stack[top] = u
                top += 1
    return peel_eq[:n_peeled], peel_var[:n_peeled], deg


@numba.njit(cache=True, nogil=True)
def _xor_row(M, b, dst, src, w, W):
    for k in range(w, W):
        M[dst, k] ^= M[src, k]
    b[dst] ^= b[src]


@numba.njit(cache=True, nogil=True)
def _dense_solve(M, b):
    """Echelon elimination of ``M x = b`` in place; returns (ok, x words).

    Columns go in blocks of 8 inside one 64-bit word.  A block's pivot rows
    are brought to reduced form among themselves, then each other row is
    cleared by XOR-ing in the matching combination of pivot rows, taken from
    a 256-entry Gray-code table when enough rows need it.  Only rows that are
    non-zero in the current word are visited.
    """
    ne, W = M.shape
    one = np.uint64(1)
    pivrow = np.empty(ne, np.int64)
    pivcol = np.empty(ne, np.int64)
    live = np.arange(ne)
    used = np.zeros(ne, np.bool_)
    act = np.empty(ne, np.int64)
    acw = np.empty(ne, np.uint64)
    idx = np.empty(ne, np.int64)
    prow = np.empty(8, np.int64)
    piv = np.empty(8, np.int64)
    T = np.zeros((256, W), np.uint64)
    Tb = np.zeros(256, np.uint8)
    nlive = ne
    rank = 0
    for w in range(W):
        if nlive == 0:
            break
        na = 0
        for q in range(nlive):
            r = live[q]
            x = M[r, w]
            if x:
                act[na] = r
                acw[na] = x
                na += 1
        for sh in range(0, 64, 8):
            if na == 0:
                break
            bmask = np.uint64(0xFF) << np.uint64(sh)
            p = 0
            for q in range(na):
                if p == 8:
                    break
                x = acw[q]
                if not (x & bmask):
                    continue
                r = act[q]
                for j in range(p):
                    if (x >> np.uint64(piv[j])) & one:
                        _xor_row(M, b, r, prow[j], w, W)
                x = M[r, w]
                acw[q] = x
                pat = (x >> np.uint64(sh)) & np.uint64(0xFF)
                if pat:
                    c = sh
                    while not (pat & one):
                        pat >>= one
                        c += 1
                    for j in range(p):
                        if (M[prow[j], w] >> np.uint64(c)) & one:
                            _xor_row(M, b, prow[j], r, w, W)
                    prow[p] = r
                    piv[p] = c
                    p += 1
                    used[r] = True
                    acw[q] = 0
            if p == 0:
                continue
            pmask = np.uint64(0)
            for j in range(p):
                pmask |= one << np.uint64(piv[j])
            cnt = 0
            for q in range(na):
                x = acw[q] & pmask
                t = 0
                if x:
                    for j in range(p):
                        t |= int((x >> np.uint64(piv[j])) & one) << j
                    cnt += 1
                idx[q] = t
            if cnt * (p - 2) > (1 << p) * 2:
                for t in range(1, 1 << p):
                    j = 0
                    while not (t >> j) & 1:
                        j += 1
                    prev = t & (t - 1)
                    src = prow[j]
                    for k in range(w, W):
                        T[t, k] = T[prev, k] ^ M[src, k]
                    Tb[t] = Tb[prev] ^ b[src]
                for q in range(na):
                    t = idx[q]
                    if t:
                        r = act[q]
                        for k in range(w, W):
                            M[r, k] ^= T[t, k]
                        b[r] ^= Tb[t]
                        acw[q] = M[r, w]
            else:
                for q in range(na):
                    t = idx[q]
                    if t:
                        r = act[q]
                        j = 0
                        while t:
                            if t & 1:
                                _xor_row(M, b, r, prow[j], w, W)
                            t >>= 1
                            j += 1
                        acw[q] = M[r, w]
            for j in range(p):
                pivrow[rank + j] = prow[j]
                pivcol[rank + j] = w * 64 + piv[j]
            rank += p
            k = 0
            for q in range(na):
                if acw[q]:
                    act[k] = act[q]
                    acw[k] = acw[q]
                    k += 1
            na = k
        k = 0
        for q in range(nlive):
            if not used[live[q]]:
                live[k] = live[q]
                k += 1
        nlive = k
    x = np.zeros(W, np.uint64)
    for q in range(nlive):
        if b[live[q]]:
            return False, x
    for i in range(rank - 1, -1, -1):
        r = pivrow[i]
        c = pivcol[i]
        w = c >> 6
        acc = np.uint64(0)
        for k in range(w, W):
            acc ^= M[r, k] & x[k]
        if (_parity(acc) ^ np.uint64(b[r])) & one:
            x[w] |= one << np.uint64(c & 63)
    return True, x


@numba.njit(cache=True, nogil=True)
def _solve(spots, rhs, n_vars):
    E = spots.shape[0]
    n_words = (n_vars + 63) // 64
    peel_eq, peel_var, deg = _peel(spots, n_vars)
    g = np.zeros(n_vars, np.uint8)
    n_core = E - peel_eq.shape[0]
    if n_core > 0:
        peeled = np.zeros(E, np.bool_)
        for t in range(peel_eq.shape[0]):
            peeled[peel_eq[t]] = True
        core_vars = np.nonzero(deg > 0)[0]
        # low-degree variables first keeps early pivots sparse
        core_vars = core_vars[np.argsort(deg[core_vars], kind="mergesort")]
        nv = core_vars.shape[0]
        vid = np.full(n_vars, -1, np.int64)
        for i in range(nv):
            vid[core_vars[i]] = i
        W = (nv + 63) // 64
        M = np.zeros((n_core, W), np.uint64)
        b = np.zeros(n_core, np.uint8)
        r = 0
        for e in range(E):
            if not peeled[e]:
                for j in range(3):
                    v = vid[spots[e, j]]
                    M[r, v >> 6] ^= np.uint64(1) << np.uint64(v & 63)
                b[r] = rhs[e]
                r += 1
        ok, x = _dense_solve(M, b)
        if not ok:
            return False, np.zeros(n_words, np.uint64)
        for i in range(nv):
            g[core_vars[i]] = np.uint8((x[i >> 6] >> np.uint64(i & 63)) & np.uint64(1))
    for t in range(peel_eq.shape[0] - 1, -1, -1):
        e = peel_eq[t]
        g[peel_var[t]] = rhs[e] ^ g[spots[e, 0]] ^ g[spots[e, 1]] ^ g[spots[e, 2]]
    words = np.zeros(n_words, np.uint64)
    for v in range(n_vars):
        if g[v]:
            words[v >> 6] |= np.uint64(1) << np.uint64(v & 63)
    return True, words


def peel_core_size(spots: np.ndarray, n_vars: int) -> int:
    """Number of equations left after peeling (diagnostics)."""
    peel_eq, _, _ = _peel(np.ascontiguousarray(spots, dtype=np.int64), int(n_vars))
    return len(spots) - len(peel_eq)


def check_solution(spots: np.ndarray, rhs: np.ndarray, words: np.ndarray) -> bool:
    if len(spots) == 0:
        return True
    s = spots.astype(np.int64)
    bits = (words[s >> 6] >> (s & 63).astype(np.uint64)) & _ONE
    parity = (bits[:, 0] ^ bits[:, 1] ^ bits[:, 2]).astype(np.uint8)
    return bool(np.array_equal(parity, rhs.astype(np.uint8)))


def solve_arrays(spots: np.ndarray, rhs: np.ndarray, n_vars: int) -> Optional[np.ndarray]:
    """Solve ``XOR(g[spots[e]]) == rhs[e]`` for all e; ``None`` if inconsistent.

    Variables that appear in no equation are 0.  Raises ``AssertionError`` if
    the solver ever returns an assignment that fails verification.
    """
    spots = np.ascontiguousarray(spots, dtype=np.int64).reshape(-1, 3)
    rhs = np.ascontiguousarray(rhs, dtype=np.uint8)
    if len(spots) and (spots.min() < 0 or spots.max() >= n_vars):
        raise VariableRangeError("equation spot outside the variable range")
    ok, words = _solve(spots, rhs, int(n_vars))
    if not ok:
        return None
    if not check_solution(spots, rhs, words):
        raise AssertionError("GF(2) solver produced an assignment that violates the system")
    return words


def solve(system: LinearSystem) -> Optional[BitVector]:
    spots, rhs = system.arrays()
    words = solve_arrays(spots, rhs, system.n_vars)
    return None if words is None else BitVector(system.n_vars, words)


def gaussian_solve(system: LinearSystem) -> Optional[BitVector]:
    """Plain Gauss-Jordan elimination over Python-int bitsets (reference path)."""
    n = system.n_vars
    rows = []
    for s, r in zip(system.spots, system.rhs):
        row = (r & 1) << n
        for v in s:
            row ^= 1 << v
        rows.append(row)
    pivots = []
    rank = 0
    for col in range(n):
        bit = 1 << col
        p = next((i for i in range(rank, len(rows)) if rows[i] & bit), None)
        if p is None:
            continue
        rows[rank], rows[p] = rows[p], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & bit:
                rows[i] ^= rows[rank]
        pivots.append(col)
        rank += 1
    mask = (1 << n) - 1
    if any(row & ~mask for row in rows[rank:]):
        return None
    g = BitVector(n)
    for r, col in enumerate(pivots):
        if (rows[r] >> n) & 1:
            g.set(col)
    return g


def read_bit(g: BitVector, i: int) -> int:
    return g[i]


def xor_lookup(g: BitVector, triple, code):
    """Decode the value stored for a key by streaming XOR-ed solution bits."""
    h1, h2, h3 = triple

    def bits():
        i = 0
        while True:
            if h3 + i >= len(g):
                return
            yield g[h1 + i] ^ g[h2 + i] ^ g[h3 + i]
            i += 1

    try:
        value, _ = code.decode_prefix(bits())
    except CorruptStreamError as e:
        raise IndexCorruptionError(str(e)) from None
    return value
