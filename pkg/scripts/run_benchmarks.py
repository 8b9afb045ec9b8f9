"""Run every benchmark suite at its default (desk) scale and write one TSV per
suite into an output directory.

    python3 scripts/run_benchmarks.py [--out results] [--suites uniform,permute]
"""
import argparse
import time
from pathlib import Path

from caramel.bench import SUITES, BenchReport, run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--suites", default=",".join(SUITES))
    a = ap.parse_args()
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in a.suites.split(","):
        t0 = time.perf_counter()
        rows = run_suite(name)
        text = "\n".join([BenchReport.header()] + [r.tsv() for r in rows]) + "\n"
        (out / f"{name}.tsv").write_text(text)
        print(f"# {name}: {len(rows)} rows in {time.perf_counter() - t0:.1f}s")
        print(text)


if __name__ == "__main__":
    main()
