import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from caramel import hashing
from caramel.bloom import decide
from caramel.codec import FrequencyTable, build_code
from caramel.errors import (BadMagicError, ChecksumMismatchError, ColumnOutOfRangeError,
                            CorruptIndexError, DuplicateInRowError, DuplicateKeyError,
                            TruncatedStreamError, VersionMismatchError)
from caramel.fileformat import HEADER_SIZE, FOOTER, column_body, deserialize, load, save, serialize
from caramel.table import (CONSTANT, FILTERED, PLAIN, BuildConfig, MatrixInput, build,
                           build_column)
from caramel.synth import dominated_column, int_column, int_rows, row_keys

DATA = Path(__file__).parent / "data"


def small_matrix(N=300, m=5, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 6, size=(N, m))
    A[:, 0] = 7
    A[:, 1] = np.where(rng.random(N) < 0.9, 1, rng.integers(2, 5, N))
    return row_keys(N), int_rows(A)


def test_single_row_constant_columns():
    t = build(MatrixInput([b"only"], [[b"a", b"b", b"c"]]))
    assert [c.kind for c in t.columns] == [CONSTANT] * 3
    assert t.query_row(b"only") == [b"a", b"b", b"c"]
    # header, three tiny blocks (length, 32-byte body, checksum) and the footer
    assert len(t.to_bytes()) == HEADER_SIZE + 3 * (8 + 32 + 8) + len(FOOTER)


def test_lossless_small_mixed():
    keys, rows = small_matrix()
    t = build(MatrixInput(keys, rows))
    kinds = [c.kind for c in t.columns]
    assert kinds[0] == CONSTANT and kinds[1] == FILTERED and PLAIN in kinds
    for k, r in zip(keys, rows):
        assert t.query_row(k) == r
    assert t.decode(keys) == [list(r) for r in rows]
    for j in range(t.m):
        assert t.query_column(keys, j) == [r[j] for r in rows]


def test_filtered_iff_decision_fired():
    keys, rows = small_matrix()
    t = build(MatrixInput(keys, rows))
    for c in t.columns:
        if c.kind != CONSTANT:
            assert (c.kind == FILTERED) == decide(c.alpha, t.delta).use_filter


def test_filtered_fast_path_and_false_positive_path():
    N = 3000
    keys = row_keys(N)
    col = int_column(dominated_column(N, 0.9, 3, seed=2))
    hi, lo = hashing.fingerprint_keys(keys, 5)
    store = build_column(hi, lo, col, 11)
    assert store.kind == FILTERED and store.csf is not None
    v0 = store.v0
    inside = store.bloom.contains_many(hi, lo)
    dom = np.array([v == v0 for v in col])
    fast = np.nonzero(dom & ~inside)[0]
    fps = np.nonzero(dom & inside)[0]
    assert len(fast) > 0 and len(fps) > 0
    for i in fast[:50]:
        assert store.query(int(hi[i]), int(lo[i])) == v0
    # false positives were folded into the CSF build set, so the CSF itself answers v0
    for i in fps:
        assert store.csf.query((int(hi[i]), int(lo[i]))) == v0
        assert store.query(int(hi[i]), int(lo[i])) == v0


def test_no_bloom_config_gives_plain():
    keys, rows = small_matrix()
    t = build(MatrixInput(keys, rows), use_bloom=False)
    assert FILTERED not in [c.kind for c in t.columns]
    assert t.decode(keys) == [list(r) for r in rows]


def test_permuted_rows_are_permutations():
    rng = np.random.default_rng(4)
    A = np.array([rng.permutation(8)[:5] + 1 for _ in range(400)])
    keys, rows = row_keys(400), int_rows(A)
    t = build(MatrixInput(keys, rows, permutable=True), permute=True, block_size=2)
    assert t.permuted
    for k, r in zip(keys, rows):
        assert sorted(t.query_row(k)) == sorted(r)


def test_permute_rejects_row_duplicates():
    with pytest.raises(DuplicateInRowError):
        build(MatrixInput([b"a", b"b"], [[b"1", b"2"], [b"3", b"3"]]), permute=True)
    # without permutation duplicates in a row are fine
    t = build(MatrixInput([b"a", b"b"], [[b"1", b"2"], [b"3", b"3"]]))
    assert t.query_row(b"b") == [b"3", b"3"]


def test_duplicate_keys_rejected():
    with pytest.raises(DuplicateKeyError):
        build(MatrixInput([b"a", b"a"], [[b"1"], [b"2"]]))


def test_shape_validation():
    with pytest.raises(ValueError):
        MatrixInput([b"a"], [[b"1"], [b"2"]])
    with pytest.raises(ValueError):
        MatrixInput([b"a", b"b"], [[b"1"], [b"2", b"3"]])


def test_column_out_of_range():
    t = build(MatrixInput([b"a"], [[b"1"]]))
    with pytest.raises(ColumnOutOfRangeError):
        t.query(b"a", 1)
    with pytest.raises(ColumnOutOfRangeError):
        t.query(b"a", -1)


def test_column_order_and_threads_independent():
    keys, rows = small_matrix(seed=3)
    a = build(MatrixInput(keys, rows), threads=1).to_bytes()
    b = build(MatrixInput(keys, rows), threads=4).to_bytes()
    assert a == b
    # building each column alone, in reverse order, gives the same blocks
    t = build(MatrixInput(keys, rows), threads=1)
    hi, lo = hashing.fingerprint_keys(keys, t.master_seed)
    cols = list(zip(*rows))
    for j in reversed(range(len(cols))):
        alone = build_column(hi, lo, cols[j], hashing.column_seed(t.master_seed, j))
        assert column_body(alone) == column_body(t.columns[j])


def test_no_keys_in_file():
    keys = [b"secret-key-%06d" % i for i in range(500)]
    rng = np.random.default_rng(1)
    rows = int_rows(rng.integers(0, 50, size=(500, 3)))
    blob = build(MatrixInput(keys, rows)).to_bytes()
    assert b"secret-key" not in blob
    assert not any(k in blob for k in keys[:100])


def test_roundtrip_byte_identical(tmp_path):
    keys, rows = small_matrix()
    t = build(MatrixInput(keys, rows))
    blob = serialize(t)
    assert serialize(deserialize(blob)) == blob
    path = tmp_path / "t.crml"
    assert save(t, path) == len(blob) == os.path.getsize(path)
    for mm in (True, False):
        back = load(path, use_mmap=mm)
        assert back.decode(keys) == [list(r) for r in rows]
        assert serialize(back) == blob


def test_roundtrip_without_checksums():
    keys, rows = small_matrix()
    blob = build(MatrixInput(keys, rows), checksums=False).to_bytes()
    back = deserialize(blob)
    assert not back.checksums and back.decode(keys[:50]) == [list(r) for r in rows[:50]]


def _built():
    keys, rows = small_matrix()
    return keys, rows, build(MatrixInput(keys, rows)).to_bytes()


def test_bad_magic():
    _, _, blob = _built()
    with pytest.raises(BadMagicError):
        deserialize(b"XXXX" + blob[4:])
    with pytest.raises(BadMagicError):
        deserialize(b"")


def test_version_mismatch():
    _, _, blob = _built()
    bad = bytearray(blob)
    bad[4] = 9
    with pytest.raises(VersionMismatchError):
        deserialize(bytes(bad))


def test_truncated():
    _, _, blob = _built()
    for cut in (10, HEADER_SIZE + 4, len(blob) // 2, len(blob) - 3):
        with pytest.raises(CorruptIndexError):
            deserialize(blob[:cut])
    with pytest.raises(TruncatedStreamError):
        deserialize(blob[:len(blob) // 2])


def test_flipped_payload_byte_checksum():
    _, _, blob = _built()
    bad = bytearray(blob)
    pos = len(blob) - len(FOOTER) - 8 - 40
    bad[pos] ^= 0x10
    with pytest.raises(ChecksumMismatchError):
        deserialize(bytes(bad))
    hdr = bytearray(blob)
    hdr[20] ^= 1
    with pytest.raises(ChecksumMismatchError):
        deserialize(bytes(hdr))


def golden_input():
    rng = np.random.default_rng(2024)
    N = 200
    A = np.stack([np.full(N, 3), np.where(rng.random(N) < 0.85, 0, rng.integers(1, 4, N)),
                  rng.integers(0, 20, N), rng.integers(0, 2, N)], axis=1)
    return row_keys(N, b"g"), int_rows(A)


def test_golden_file():
    """The committed file was produced by scripts/make_golden.py; it must load
    and answer identically, and a fresh build must reproduce it byte for byte."""
    keys, rows = golden_input()
    blob = (DATA / "golden_v1.crml").read_bytes()
    t = deserialize(blob)
    assert t.decode(keys) == [list(r) for r in rows]
    assert [c.kind for c in t.columns] == [CONSTANT, FILTERED, PLAIN, PLAIN]
    assert build(MatrixInput(keys, rows), master_seed=77, threads=1).to_bytes() == blob


def test_independent_column_coding_advantage():
    col1 = [b"a"] * 2 + [b"b", b"c"]
    col2 = [b"d"] * 2 + [b"e", b"f"]
    for col in (col1, col2):
        ft = FrequencyTable.from_values(col)
        assert build_code(ft).average_length(ft) == pytest.approx(1.5)
    merged = FrequencyTable.from_values(col1 + col2)
    assert len(merged) == 6
    assert build_code(merged).average_length(merged) >= 2.0


@st.composite
def matrices(draw):
    N = draw(st.integers(1, 120))
    m = draw(st.integers(1, 4))
    n_vals = draw(st.integers(1, 6))
    keys = draw(st.lists(st.binary(min_size=0, max_size=8), min_size=N, max_size=N, unique=True))
    rows = [[bytes([draw(st.integers(0, n_vals - 1))]) * draw(st.integers(1, 2)) for _ in range(m)]
            for _ in range(N)]
    return keys, rows


@settings(max_examples=30)
@given(matrices(), st.integers(0, 2**64 - 1), st.booleans())
def test_lossless_property(data, seed, bloom):
    keys, rows = data
    t = build(MatrixInput(keys, rows), master_seed=seed, use_bloom=bloom, threads=1)
    back = deserialize(t.to_bytes())
    for k, r in zip(keys, rows):
        assert back.query_row(k) == r
