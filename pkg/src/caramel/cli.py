"""``caramel`` command-line tool: build, query, stats, bench.

Exit codes: 0 ok, 1 usage, 2 data error, 3 build failure, 4 corrupt or unreadable index.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from typing import Optional, Sequence

from . import synth
from .bench import SUITES, BenchReport, run_suite
from .bloom import DELTA
from .errors import (ColumnOutOfRangeError, ConstructionFailedError, CorruptIndexError,
                     DuplicateInRowError, DuplicateKeyError, UnsupportedCardinalityError)
from .fileformat import FOOTER, HEADER_SIZE, column_body, load, save
from .permute import DEFAULT_BLOCK_SIZE
from .table import (VALUE_BYTES, VALUE_INT32, VALUE_INT64, BuildConfig, CaramelTable,
                    MatrixInput, build)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BUILD, EXIT_INDEX = 0, 1, 2, 3, 4

QUERY_EPILOG = ("Keys that were not in the build set still get an answer: the index stores no "
                "keys, so an unknown key returns some value from the column's value set.")


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- ingest -------------------------------------------------------------------

def _canonical_int(s: str) -> Optional[int]:
    try:
        v = int(s)
    except ValueError:
        return None
    return v if str(v) == s else None


def encode_values(cells: list[list[str]], mode: str, origin: str) -> tuple[list[list[bytes]], int]:
    """Turn text cells into value bytes; returns rows and the value kind."""
    if mode == "str":
        return [[c.encode("utf-8") for c in row] for row in cells], VALUE_BYTES
    flat = [c for row in cells for c in row]
    ints = [_canonical_int(c) for c in flat]
    if any(v is None for v in ints):
        if mode == "int":
            i = next(i for i, v in enumerate(ints) if v is None)
            m = len(cells[0]) if cells else 1
            raise DataError(f"{origin}: line {i // m + 1}: {flat[i]!r} is not an integer")
        return [[c.encode("utf-8") for c in row] for row in cells], VALUE_BYTES
    lo, hi = (min(ints), max(ints)) if ints else (0, 0)
    if -2**31 <= lo and hi < 2**31:
        width, kind = 4, VALUE_INT32
    elif -2**63 <= lo and hi < 2**63:
        width, kind = 8, VALUE_INT64
    else:
        raise DataError(f"{origin}: integer values exceed 64 bits; use --values str")
    return [[v.to_bytes(width, "little", signed=True) for v in map(int, row)] for row in cells], kind


def read_tsv(path: str, key_col: int = 0, value_cols: Optional[Sequence[int]] = None):
    keys, cells = [], []
    arity = None
    with open(path, encoding="utf-8") as f:
        for ln, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if arity is None:
                arity = len(parts)
                if arity < 2:
                    raise DataError(f"{path}: line {ln}: need a key and at least one value")
            elif len(parts) != arity:
                raise DataError(f"{path}: line {ln}: {len(parts)} fields, expected {arity}")
            if not 0 <= key_col < arity:
                raise DataError(f"key column {key_col} outside [0, {arity})")
            cols = value_cols if value_cols is not None else [j for j in range(arity) if j != key_col]
            if any(not 0 <= j < arity for j in cols):
                raise DataError(f"value columns {list(cols)} outside [0, {arity})")
            keys.append(parts[key_col])
            cells.append([parts[j] for j in cols])
    if not keys:
        raise DataError(f"{path}: no data rows")
    return keys, cells


def read_tokens(path: str, width: Optional[int] = None, pad: str = "0"):
    keys, cells = [], []
    with open(path, encoding="utf-8") as f:
        lines = [ln.split() for ln in f]
    if width is None:
        width = max((len(t) for t in lines), default=0)
    if width < 1:
        raise DataError(f"{path}: no tokens")
    for ln, toks in enumerate(lines, 1):
        for t in toks:
            if _canonical_int(t) is None:
                raise DataError(f"{path}: line {ln}: token {t!r} is not an integer")
        row = toks[:width] + [pad] * (width - len(toks))
        keys.append(str(ln))
        cells.append(row)
    return keys, cells


def generate(spec: str, seed: int):
    """``uniform:NxM[:V]`` or ``powerlaw:NxM[:V]`` -> keys, integer matrix."""
    try:
        kind, shape, *rest = spec.split(":")
        n, m = (int(x) for x in shape.lower().split("x"))
        v = int(rest[0]) if rest else 1000
    except ValueError:
        raise DataError(f"bad generator spec {spec!r}; expected uniform:NxM[:V]") from None
    if kind == "uniform":
        A = synth.uniform_matrix(n, m, v, seed)
    elif kind == "powerlaw":
        A = synth.powerlaw_matrix(n, m, 2.0, v, seed)
    else:
        raise DataError(f"unknown generator {kind!r}")
    return [k.decode() for k in synth.row_keys(n)], A


# -- output -------------------------------------------------------------------

def format_value(v: bytes, kind: int) -> str:
    if kind == VALUE_INT32 and len(v) == 4 or kind == VALUE_INT64 and len(v) == 8:
        return str(int.from_bytes(v, "little", signed=True))
    return v.decode("utf-8", errors="backslashreplace")


def column_stats(table: CaramelTable) -> list[dict]:
    out = []
    for j, c in enumerate(table.columns):
        body = len(column_body(c))
        out.append(dict(column=j, kind=c.kind, alpha=c.alpha, entropy=c.entropy, distinct=c.distinct,
                        code_bits=c.code_bits, bloom_bits=c.bloom_bits, g_bits=c.g_bits,
                        codebook_bits=8 * len(c.csf.code.to_bytes()) if c.csf is not None else 0,
                        block_bytes=body + 8 + 8 * table.checksums))
    return out


# -- commands -----------------------------------------------------------------

def cmd_build(a) -> int:
    t0 = time.perf_counter()
    if a.gen:
        keys, A = generate(a.gen, a.seed)
        rows, kind = synth.int_rows(A), VALUE_INT32
    else:
        if not a.input:
            raise DataError("need an input file or --gen")
        if a.format == "tsv":
            vcols = [int(x) for x in a.value_cols.split(",")] if a.value_cols else None
            keys, cells = read_tsv(a.input, a.key_col, vcols)
        else:
            keys, cells = read_tokens(a.input, a.width, a.pad)
        rows, kind = encode_values(cells, a.values, a.input)
    cfg = BuildConfig(delta=a.delta, permute=a.permute, block_size=a.block_size,
                      master_seed=a.seed, use_bloom=not a.no_bloom, checksums=not a.no_checksums,
                      value_kind=kind)
    data = MatrixInput([k.encode("utf-8") for k in keys], rows, a.permute)
    table = build(data, cfg)
    size = save(table, a.output)
    secs = time.perf_counter() - t0
    h0 = sum(c.entropy for c in table.columns)
    n, m = table.n_rows, table.m
    flat = n * m * 4 if kind != VALUE_BYTES else sum(len(v) for r in rows for v in r)
    kinds = {k: sum(c.kind == k for c in table.columns) for k in ("constant", "plain", "filtered")}
    print(f"N={n}\tm={m}\tH0_sum={h0:.4f} bits/row\tsize={size} bytes\t"
          f"bits_per_entry={8 * size / (n * m):.4f}\tcompression={flat / size:.3f}x\t"
          f"build={secs:.2f}s\tconstant={kinds['constant']}\tplain={kinds['plain']}\t"
          f"filtered={kinds['filtered']}")
    return EXIT_OK


def cmd_query(a) -> int:
    table = load(a.index)
    key = a.key.encode("utf-8")
    if a.row:
        for v in table.query_row(key):
            print(format_value(v, table.value_kind))
        return EXIT_OK
    if a.column is None:
        if table.m != 1:
            raise _UsageError("give a COLUMN or --row for tables with more than one column")
        a.column = 0
    print(format_value(table.query(key, a.column), table.value_kind))
    return EXIT_OK


def cmd_stats(a) -> int:
    table = load(a.index)
    stats = column_stats(table)
    cols = list(stats[0].keys()) if stats else []
    print("\t".join(cols))
    for s in stats:
        print("\t".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in s.values()))
    total = sum(s["block_bytes"] for s in stats) + HEADER_SIZE + len(FOOTER)
    fsize = os.path.getsize(a.index)
    print(f"# N={table.n_rows} m={table.m} columns_bytes={total - HEADER_SIZE - len(FOOTER)} "
          f"accounted_bytes={total} file_bytes={fsize} "
          f"payload_bits={sum(s['g_bits'] + s['bloom_bits'] + s['codebook_bits'] for s in stats)}")
    return EXIT_OK


def cmd_bench(a) -> int:
    kw = {}
    if a.suite in ("uniform", "powerlaw", "permute", "latency"):
        kw["seed"] = a.seed
    if a.n is not None:
        kw["N"] = a.n
    if a.m is not None and a.suite in ("uniform", "powerlaw"):
        kw["m"] = a.m
    if a.seeds is not None and a.suite == "bloom-sweep":
        kw["n_seeds"] = a.seeds
    print(BenchReport.header())
    for r in run_suite(a.suite, **kw):
        print(r.tsv(), flush=True)
    return EXIT_OK


class _UsageError(Exception):
    pass


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="caramel", description="Compressed key -> row tables built from static functions.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="build an index from TSV/tokens or a generator")
    b.add_argument("input", nargs="?", help="input file (omit with --gen)")
    b.add_argument("-o", "--output", required=True, help="index file to write")
    b.add_argument("--format", choices=("tsv", "tokens"), default="tsv")
    b.add_argument("--gen", metavar="KIND:NxM[:V]", help="synthetic input, e.g. uniform:10000x100:1000")
    b.add_argument("--key-col", type=int, default=0, help="TSV key column (default 0)")
    b.add_argument("--value-cols", help="comma-separated TSV value columns (default: all but the key)")
    b.add_argument("--width", type=int, help="tokens per row (pad/truncate); default: longest line")
    b.add_argument("--pad", default="0", help="token used for padding short lines")
    b.add_argument("--values", choices=("auto", "int", "str"), default="auto",
                   help="store values as integers (auto: when every cell is one) or raw strings")
    b.add_argument("--permute", action="store_true", help="reorder each row to skew the columns")
    b.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE,
                   help="stop permuting when the best move affects <= this many rows")
    b.add_argument("--delta", type=float, default=DELTA, help="solver overhead used by the filter rule")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--no-bloom", action="store_true", help="never prefilter dominated columns")
    b.add_argument("--no-checksums", action="store_true")
    b.set_defaults(fn=cmd_build)

    q = sub.add_parser("query", help="look up a key", epilog=QUERY_EPILOG)
    q.add_argument("index")
    q.add_argument("key")
    q.add_argument("column", nargs="?", type=int)
    q.add_argument("--row", action="store_true", help="print the whole row, one value per line")
    q.set_defaults(fn=cmd_query)

    s = sub.add_parser("stats", help="per-column size breakdown")
    s.add_argument("index")
    s.set_defaults(fn=cmd_stats)

    be = sub.add_parser("bench", help="run a benchmark suite, TSV to stdout")
    be.add_argument("suite", choices=SUITES)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("-n", type=int, help="override the suite's row count")
    be.add_argument("-m", type=int, help="override the column count (uniform, powerlaw)")
    be.add_argument("--seeds", type=int, help="seeds per alpha (bloom-sweep)")
    be.set_defaults(fn=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    p = make_parser()
    a = p.parse_args(argv)
    try:
        return a.fn(a)
    except _UsageError as e:
        print(f"caramel: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DuplicateKeyError, DuplicateInRowError, UnsupportedCardinalityError,
            UnicodeDecodeError, ValueError) as e:
        if isinstance(e, CorruptIndexError):
            print(f"caramel: corrupt index: {e}", file=sys.stderr)
            return EXIT_INDEX
        print(f"caramel: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ColumnOutOfRangeError as e:
        print(f"caramel: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ConstructionFailedError as e:
        print(f"caramel: build failed: {e}", file=sys.stderr)
        return EXIT_BUILD
    except CorruptIndexError as e:
        print(f"caramel: corrupt index: {e}", file=sys.stderr)
        return EXIT_INDEX
    except OSError as e:
        print(f"caramel: {e}", file=sys.stderr)
        return EXIT_INDEX if a.cmd in ("query", "stats") else EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
