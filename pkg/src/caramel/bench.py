"""Benchmark suites.  Each suite returns :class:`BenchReport` rows; ``extra``
carries suite-specific ``key=value`` pairs."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, fields
from typing import Callable, Optional, Sequence

import numpy as np

from . import hashing, synth
from .bloom import DELTA, decide, threshold_alpha
from .codec import FrequencyTable, entropy
from .csf import build_csf
from .fileformat import column_body
from .permute import column_entropy_sum, permute_rows
from .table import BuildConfig, CaramelTable, MatrixInput, build, build_column

SUITES = ("uniform", "powerlaw", "bloom-sweep", "permute", "latency")
SWEEP_ALPHAS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


@dataclass
class BenchReport:
    dataset: str
    N: int
    m: int
    h0_sum: float
    flat_bytes: int
    compressed_bytes: int
    compression_rate: float
    build_seconds: float
    median_query_us: float
    p99_query_us: float
    extra: str = ""

    @classmethod
    def header(cls) -> str:
        return "\t".join(f.name for f in fields(cls))

    def tsv(self) -> str:
        out = []
        for v in asdict(self).values():
            out.append(f"{v:.6g}" if isinstance(v, float) else str(v))
        return "\t".join(out)


def _fmt_extra(**kw) -> str:
    return ";".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in kw.items())


def time_calls(fn: Callable, args: Sequence) -> np.ndarray:
    """Per-call wall time in microseconds."""
    out = np.empty(len(args))
    clock = time.perf_counter_ns
    for i, a in enumerate(args):
        t0 = clock()
        fn(a)
        out[i] = clock() - t0
    return out / 1000.0


def h0_sum_int(A: np.ndarray) -> float:
    total = 0.0
    N = A.shape[0]
    for j in range(A.shape[1]):
        _, counts = np.unique(A[:, j], return_counts=True)
        total += float(np.sum(counts / N * np.log2(N / counts)))
    return total


def matrix_report(name: str, A: np.ndarray, config: Optional[BuildConfig] = None,
                  n_queries: int = 20000, seed: int = 0) -> tuple[BenchReport, CaramelTable]:
    """Build a table over an integer matrix and measure size and element-query latency."""
    config = config or BuildConfig(master_seed=seed)
    N, m = A.shape
    keys = synth.row_keys(N)
    rows = synth.int_rows(A)
    t0 = time.perf_counter()
    table = build(MatrixInput(keys, rows), config)
    secs = time.perf_counter() - t0
    size = table.nbytes()
    flat = N * m * 4
    rng = np.random.default_rng(seed)
    picks = list(zip(rng.integers(0, N, n_queries).tolist(), rng.integers(0, m, n_queries).tolist()))
    lat = time_calls(lambda rc: table.query(keys[rc[0]], rc[1]), picks) if n_queries else np.zeros(1)
    g = sum(c.g_bits for c in table.columns)
    code = sum(c.code_bits for c in table.columns)
    rep = BenchReport(name, N, m, h0_sum_int(A), flat, size, flat / size, secs,
                      float(np.median(lat)), float(np.percentile(lat, 99)),
                      _fmt_extra(bits_per_entry=8 * size / (N * m),
                                 g_over_code=g / code if code else math.nan,
                                 kinds="/".join(f"{k}:{sum(c.kind == k for c in table.columns)}"
                                                for k in ("constant", "plain", "filtered"))))
    return rep, table


def suite_uniform(N: int = 10**4, m: int = 100, n_values: int = 1000, seed: int = 0,
                  n_queries: int = 20000) -> list[BenchReport]:
    A = synth.uniform_matrix(N, m, n_values, seed)
    return [matrix_report(f"uniform-{n_values}", A, BuildConfig(master_seed=seed), n_queries, seed)[0]]


def suite_powerlaw(N: int = 10**4, m: int = 100, k: float = 2.0, seed: int = 0,
                   n_queries: int = 20000) -> list[BenchReport]:
    A = synth.powerlaw_matrix(N, m, k, seed=seed)
    return [matrix_report(f"powerlaw-k{k:g}", A, BuildConfig(master_seed=seed), n_queries, seed)[0]]


def column_sizes(values: Sequence[bytes], keys: Sequence[bytes], seed: int,
                 eps_list: Sequence[Optional[float]], delta: float = DELTA) -> list[int]:
    """Serialized column size for each forced design rate (``None`` = plain CSF)."""
    hi, lo = hashing.fingerprint_keys(keys, seed)
    cseed = hashing.column_seed(seed, 0)
    out = []
    for eps in eps_list:
        store = build_column(hi, lo, values, cseed, delta=delta, eps=1.0 if eps is None else eps)
        out.append(len(column_body(store)))
    return out


def bloom_sweep(N: int = 10**5, alphas: Sequence[float] = SWEEP_ALPHAS, n_seeds: int = 20,
                delta: float = DELTA, n_other: int = 1) -> list[dict]:
    """For each alpha: decision, and (if it fires) filtered vs plain sizes over seeds."""
    keys = synth.row_keys(N, b"k")
    out = []
    for alpha in alphas:
        d = decide(alpha, delta)
        row = dict(alpha=alpha, fired=d.use_filter, eps_star=d.eps_star, tau=d.tau,
                   wins=0, seeds=0, filtered_bytes=math.nan, plain_bytes=math.nan)
        if d.use_filter:
            filt, plain = [], []
            for s in range(n_seeds):
                col = synth.int_column(synth.dominated_column(N, alpha, n_other, seed=s))
                f, p = column_sizes(col, keys, s, [d.eps_star, None], delta)
                filt.append(f)
                plain.append(p)
            row.update(wins=int(sum(f <= p for f, p in zip(filt, plain))), seeds=n_seeds,
                       filtered_bytes=float(np.median(filt)), plain_bytes=float(np.median(plain)))
        out.append(row)
    return out


def eps_sweep(N: int = 10**5, alpha: float = 0.8, factors: Sequence[float] = (0.25, 0.5, 1, 2, 4),
              n_seeds: int = 10, n_other: int = 50, delta: float = DELTA) -> dict:
    """Median column size at ``eps = f * eps*`` for each factor (rates >= 1 mean no filter)."""
    keys = synth.row_keys(N, b"k")
    eps_star = decide(alpha, delta).eps_star
    sizes = {f: [] for f in factors}
    for s in range(n_seeds):
        col = synth.int_column(synth.dominated_column(N, alpha, n_other, seed=s))
        eps_list = [f * eps_star if f * eps_star < 1 else None for f in factors]
        for f, size in zip(factors, column_sizes(col, keys, s, eps_list, delta)):
            sizes[f].append(size)
    return {f: float(np.median(v)) for f, v in sizes.items()}


def suite_bloom_sweep(N: int = 10**5, n_seeds: int = 20, delta: float = DELTA) -> list[BenchReport]:
    reps = []
    for r in bloom_sweep(N, n_seeds=n_seeds, delta=delta):
        fb = r["filtered_bytes"] if r["fired"] else math.nan
        pb = r["plain_bytes"]
        reps.append(BenchReport(f"two-value-a{r['alpha']:.2f}", N, 1, math.nan, N * 4,
                                int(fb) if r["fired"] else 0, (N * 4 / fb) if r["fired"] else math.nan,
                                math.nan, math.nan, math.nan,
                                _fmt_extra(fired=int(r["fired"]), eps_star=r["eps_star"], tau=r["tau"],
                                           wins=r["wins"], seeds=r["seeds"], plain_bytes=pb)))
    reps.append(BenchReport("threshold", N, 1, math.nan, 0, 0, math.nan, math.nan, math.nan, math.nan,
                            _fmt_extra(alpha_star=threshold_alpha(delta), delta=delta)))
    return reps


def permute_gain(N: int = 1000, width: int = 8, n_templates: int = 1, block_size: int = 8,
                 seed: int = 0) -> tuple[float, float, bool, float]:
    """(entropy before, after, multisets preserved, seconds)."""
    rows = synth.int_rows(synth.shuffled_templates(N, width, n_templates, seed))
    t0 = time.perf_counter()
    out = permute_rows(rows, block_size)
    secs = time.perf_counter() - t0
    same = all(sorted(a) == sorted(b) for a, b in zip(rows, out))
    return column_entropy_sum(rows), column_entropy_sum(out), same, secs


def suite_permute(N: int = 1000, width: int = 8, seed: int = 0) -> list[BenchReport]:
    reps = []
    for t in (1, 4):
        before, after, same, secs = permute_gain(N, width, t, seed=seed)
        reps.append(BenchReport(f"shuffled-{t}x{width}", N, width, after, N * width * 4, 0, math.nan,
                                secs, math.nan, math.nan,
                                _fmt_extra(h0_before=before, h0_after=after,
                                           reduction=1 - after / before if before else 0.0,
                                           multiset_ok=int(same))))
    return reps


def latency(N: int = 10**6, n_queries: int = 20000, n_values: int = 1000, seed: int = 0) -> dict:
    """Single-CSF lookup latency next to a dict lookup on the same keys."""
    rng = np.random.default_rng(seed)
    keys = synth.row_keys(N, b"key")
    vals = synth.int_column(rng.integers(1, n_values + 1, N))
    t0 = time.perf_counter()
    hi, lo = hashing.fingerprint_keys(keys, seed)
    col = build_csf(hi, lo, vals, hashing.column_seed(seed, 0))
    build_s = time.perf_counter() - t0
    picks = [keys[i] for i in rng.integers(0, N, n_queries)]
    fp = hashing.fingerprint
    csf_us = time_calls(lambda k: col.query(fp(k, seed)), picks)
    d = dict(zip(keys, vals))
    dict_us = time_calls(d.__getitem__, picks)
    ok = all(col.query(fp(k, seed)) == d[k] for k in picks[:1000])
    med, base = float(np.median(csf_us)), float(np.median(dict_us))
    return dict(N=N, queries=n_queries, build_seconds=build_s, csf_bytes=col.nbytes(),
                median_us=med, p99_us=float(np.percentile(csf_us, 99)),
                dict_median_us=base, dict_p99_us=float(np.percentile(dict_us, 99)),
                ratio=med / base, regression=med > 3 * base, correct=ok)


def suite_latency(N: int = 10**6, n_queries: int = 20000, seed: int = 0) -> list[BenchReport]:
    r = latency(N, n_queries, seed=seed)
    return [BenchReport("csf-uniform-1000", N, 1, math.nan, N * 4, r["csf_bytes"], N * 4 / r["csf_bytes"],
                        r["build_seconds"], r["median_us"], r["p99_us"],
                        _fmt_extra(dict_median_us=r["dict_median_us"], dict_p99_us=r["dict_p99_us"],
                                   ratio=r["ratio"], regression=int(r["regression"])))]


def run_suite(name: str, **kw) -> list[BenchReport]:
    fn = {"uniform": suite_uniform, "powerlaw": suite_powerlaw, "bloom-sweep": suite_bloom_sweep,
          "permute": suite_permute, "latency": suite_latency}.get(name)
    if fn is None:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return fn(**kw)
