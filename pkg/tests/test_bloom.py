import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from caramel.bloom import (BloomFilter, build_bloom, build_bloom_fps, decide, filter_params,
                           optimal_eps, query_bloom, threshold_alpha)
from caramel.hashing import Fingerprint


def random_fps(rng, n):
    hi = rng.integers(0, 2**64 - 1, n, dtype=np.uint64, endpoint=True)
    lo = rng.integers(0, 2**64 - 1, n, dtype=np.uint64, endpoint=True)
    return hi, lo


def test_decide_examples():
    d = decide(1.0)
    assert not d.use_filter and d.eps_star > 0
    d = decide(0.5, 1.089)
    assert not d.use_filter
    assert optimal_eps(0.5, 1.089) == pytest.approx(1.44 / (1.089 * math.log(2)), rel=1e-12)
    assert optimal_eps(0.5, 1.089) == pytest.approx(1.907, abs=1e-3)
    assert 0 < d.eps_star < 1


def test_decide_formula_at_08():
    d = decide(0.8, 1.089)
    eps = 1.44 / (1.089 * math.log(2)) * 0.25
    assert d.eps_star == pytest.approx(eps)
    assert d.tau == pytest.approx(1.44 * (0.25 / 1.089) * math.log2(1 / eps))
    assert d.use_filter


def test_threshold_in_expected_band():
    a = threshold_alpha(1.089)
    assert 0.62 <= a <= 0.68
    grid = np.arange(0.5, 0.9999, 0.001)
    first = next(x for x in grid if decide(float(x)).use_filter)
    assert abs(first - a) < 2e-3


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(1.0, 2.0))
def test_decision_monotone_in_alpha(a, b, delta):
    lo, hi = sorted((a, b))
    if decide(lo, delta).use_filter:
        assert decide(hi, delta).use_filter or hi == 1.0


def test_bad_arguments():
    with pytest.raises(ValueError):
        decide(0.0)
    with pytest.raises(ValueError):
        decide(0.5, 0.9)
    with pytest.raises(ValueError):
        filter_params(0, 0.1)
    with pytest.raises(ValueError):
        filter_params(5, 1.0)


def test_filter_params_examples():
    assert filter_params(1, 0.5) == (2, 1)
    b, k = filter_params(10**4, 0.01)
    assert b == math.ceil(1.44 * 10**4 * math.log2(100)) == 95672
    assert k == round(b * math.log(2) / 10**4) == 7


def test_single_member():
    fp = Fingerprint(123, 456)
    bf = build_bloom_fps([fp], 0.5)
    assert bf.b == 2 and query_bloom(bf, fp)


def test_empty_filter_rejects():
    bf = BloomFilter(10, 0.1, 3, 100, np.zeros(2, np.uint64))
    assert not bf.contains(Fingerprint(1, 2))
    hi, lo = random_fps(np.random.default_rng(0), 100)
    assert not bf.contains_many(hi, lo).any()


def test_fpr_monte_carlo(rng):
    hi, lo = random_fps(rng, 10**4)
    bf = build_bloom(hi, lo, 0.05)
    assert bf.contains_many(hi, lo).all()
    h2, l2 = random_fps(rng, 10**5)
    fpr = bf.contains_many(h2, l2).mean()
    assert 0.5 * 0.05 <= fpr <= 1.5 * 0.05


@given(st.integers(1, 3000), st.floats(0.001, 0.95), st.integers(0, 2**32))
def test_no_false_negatives(n, eps, seed):
    hi, lo = random_fps(np.random.default_rng(seed), n)
    bf = build_bloom(hi, lo, eps)
    assert bf.contains_many(hi, lo).all()
    for a, b in list(zip(hi, lo))[:20]:
        assert bf.contains(Fingerprint(int(a), int(b)))


def test_scalar_matches_vector(rng):
    hi, lo = random_fps(rng, 500)
    bf = build_bloom(hi[:100], lo[:100], 0.3)
    vec = bf.contains_many(hi, lo)
    assert [bf.contains((int(a), int(b))) for a, b in zip(hi, lo)] == vec.tolist()


def test_serialization_roundtrip(rng):
    hi, lo = random_fps(rng, 1000)
    bf = build_bloom(hi, lo, 0.2)
    blob = bf.to_bytes()
    back, end = BloomFilter.from_buffer(blob)
    assert end == len(blob) and back.to_bytes() == blob
    assert back.contains_many(hi, lo).all()
