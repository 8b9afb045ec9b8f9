"""Synthetic matrices used by the benchmarks and the acceptance tests."""
from __future__ import annotations

import numpy as np


def int_rows(A: np.ndarray) -> list[list[bytes]]:
    """Integer matrix -> rows of 4-byte little-endian values."""
    A = np.asarray(A)
    N, m = A.shape
    raw = A.astype("<i4").tobytes()
    return [[raw[4 * (r * m + j): 4 * (r * m + j) + 4] for j in range(m)] for r in range(N)]


def int_column(a: np.ndarray) -> list[bytes]:
    raw = np.asarray(a).astype("<i4").tobytes()
    return [raw[i:i + 4] for i in range(0, len(raw), 4)]


def row_keys(N: int, prefix: bytes = b"row") -> list[bytes]:
    return [prefix + b"%d" % i for i in range(N)]


def uniform_matrix(N: int, m: int, n_values: int = 1000, seed: int = 0) -> np.ndarray:
    """Values drawn uniformly from ``1..n_values``."""
    rng = np.random.default_rng(seed)
    return rng.integers(1, n_values + 1, size=(N, m))


def powerlaw_probs(n_values: int = 1000, k: float = 2.0) -> np.ndarray:
    p = np.arange(1, n_values + 1, dtype=float) ** -k
    return p / p.sum()


def powerlaw_matrix(N: int, m: int, k: float = 2.0, n_values: int = 1000, seed: int = 0) -> np.ndarray:
    """Values ``v`` in ``1..n_values`` with probability proportional to ``v**-k``."""
    rng = np.random.default_rng(seed)
    return rng.choice(np.arange(1, n_values + 1), size=(N, m), p=powerlaw_probs(n_values, k))


def dominated_column(N: int, alpha: float, n_other: int = 1, seed: int = 0) -> np.ndarray:
    """``round(alpha*N)`` copies of 0, the rest uniform over ``1..n_other``, shuffled."""
    rng = np.random.default_rng(seed)
    n0 = int(round(alpha * N))
    col = np.concatenate([np.zeros(n0, np.int64), rng.integers(1, n_other + 1, N - n0)])
    rng.shuffle(col)
    return col


def shuffled_templates(N: int, width: int = 8, n_templates: int = 1, seed: int = 0) -> np.ndarray:
    """Rows that are random shuffles of one of ``n_templates`` sets of ``width`` distinct values."""
    rng = np.random.default_rng(seed)
    templates = [rng.choice(10 * width * n_templates, width, replace=False) + 1
                 for _ in range(n_templates)]
    pick = rng.integers(0, n_templates, N)
    return np.array([rng.permutation(templates[t]) for t in pick])
