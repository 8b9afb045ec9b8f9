"""Column-entropy reduction from row permutation as a function of the block
size B, on shuffled-template rows.

    python3 scripts/permute_ablation.py [--n 1000] [--width 8] [--templates 4]
"""
import argparse

from caramel.bench import permute_gain


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--width", type=int, default=8)
    ap.add_argument("--templates", type=int, default=4)
    a = ap.parse_args()
    print("block_size\th0_before\th0_after\treduction\tseconds")
    for b in (0, 2, 8, 32, 128, 512):
        before, after, same, secs = permute_gain(a.n, a.width, a.templates, block_size=b)
        assert same
        print(f"{b}\t{before:.2f}\t{after:.2f}\t{1 - after / before:.1%}\t{secs:.3f}")


if __name__ == "__main__":
    main()
