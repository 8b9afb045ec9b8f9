import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from caramel.errors import DuplicateInRowError
from caramel.permute import column_entropy_sum, permute_rows
from caramel.synth import int_rows, shuffled_templates


def brute_force_min(rows):
    best = None
    for combo in itertools.product(*[list(itertools.permutations(r)) for r in rows]):
        h = column_entropy_sum([list(r) for r in combo])
        best = h if best is None else min(best, h)
    return best


def test_micro_instance_reaches_optimum():
    rows = [[b"a", b"b"], [b"b", b"a"]]
    assert column_entropy_sum(rows) == pytest.approx(2.0)
    assert brute_force_min(rows) == 0.0
    out = permute_rows(rows, block_size=0)
    assert out[0] == out[1]
    assert column_entropy_sum(out) == 0.0


def test_default_block_size_stops_small_instances():
    rows = [[b"a", b"b"], [b"b", b"a"]]
    assert permute_rows(rows) == rows


def test_single_row_unchanged():
    rows = [[b"x", b"y", b"z"]]
    assert permute_rows(rows, 0) == rows


def test_shuffled_template_recovered():
    rows = int_rows(shuffled_templates(1000, 8, 1, seed=3))
    before, after = column_entropy_sum(rows), column_entropy_sum(permute_rows(rows))
    assert after <= 0.15 * before


def test_column_entropy_examples():
    assert column_entropy_sum([[b"c", b"c"]] * 5) == 0.0
    rows = [[b"a", b"d"], [b"a", b"d"], [b"b", b"e"], [b"c", b"f"]]
    assert column_entropy_sum(rows) == pytest.approx(3.0)


def test_uniform_1000_columns_entropy():
    rng = np.random.default_rng(0)
    rows = int_rows(rng.integers(1, 1001, size=(10**4, 20)))
    per_col = column_entropy_sum(rows) / 20
    # sampling bias: 10^4 draws over 1000 values lose about 0.07 bits
    assert 9.85 < per_col < 9.966


def test_duplicate_in_row_rejected():
    with pytest.raises(DuplicateInRowError) as e:
        permute_rows([[b"a", b"b"], [b"c", b"c"]])
    assert e.value.row == 1 and e.value.value == b"c"


def test_deterministic():
    rows = int_rows(shuffled_templates(300, 6, 3, seed=1))
    assert permute_rows(rows, 2) == permute_rows(rows, 2)


@st.composite
def distinct_rows(draw):
    m = draw(st.integers(1, 6))
    pool = draw(st.integers(m, 12))
    n = draw(st.integers(1, 60))
    rows = [draw(st.permutations(list(range(pool))))[:m] for _ in range(n)]
    return [[bytes([v]) for v in r] for r in rows]


@given(distinct_rows(), st.integers(0, 10))
def test_multiset_preserved_and_entropy_not_worse_on_full_run(rows, b):
    out = permute_rows(rows, b)
    assert len(out) == len(rows)
    for a, o in zip(rows, out):
        assert sorted(a) == sorted(o)


@given(distinct_rows())
def test_small_instances_close_to_brute_force(rows):
    rows = rows[:3]
    for r in rows:
        del r[3:]
    out = permute_rows(rows, 0)
    assert column_entropy_sum(out) <= column_entropy_sum(rows) + 1e-9 or len(rows) < 2
