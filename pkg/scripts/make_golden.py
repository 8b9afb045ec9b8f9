"""Regenerate tests/data/golden_v1.crml.  Only needed after an intentional
format change (bump the version byte first)."""
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from test_table import golden_input  # noqa: E402

from caramel import MatrixInput, build  # noqa: E402

keys, rows = golden_input()
blob = build(MatrixInput(keys, rows), master_seed=77, threads=1).to_bytes()
out = ROOT / "tests" / "data" / "golden_v1.crml"
out.write_bytes(blob)
print(f"wrote {out} ({len(blob)} bytes)")
