"""Prefilter study on two-value columns: decision threshold, filtered vs plain
sizes per alpha, and the design-rate sweep around eps* at alpha = 0.8.

    python3 scripts/prefilter_sweep.py [--n 100000] [--seeds 20]
"""
import argparse

from caramel.bench import bloom_sweep, eps_sweep
from caramel.bloom import filter_params, threshold_alpha


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10**5)
    ap.add_argument("--seeds", type=int, default=20)
    a = ap.parse_args()
    print(f"threshold alpha* = {threshold_alpha():.6f}")
    print("alpha\tfired\teps_star\tk\ttau\twins\tfiltered_bytes\tplain_bytes")
    for r in bloom_sweep(a.n, n_seeds=a.seeds):
        k = filter_params(a.n, r["eps_star"])[1] if r["fired"] else "-"
        print(f"{r['alpha']:.2f}\t{int(r['fired'])}\t{r['eps_star']:.4f}\t{k}\t{r['tau']:.4f}\t"
              f"{r['wins']}/{r['seeds']}\t{r['filtered_bytes']:.0f}\t{r['plain_bytes']:.0f}")
    print("\nfactor\tmedian_bytes (alpha=0.8, eps = factor * eps*)")
    for f, v in eps_sweep(a.n, n_seeds=max(1, a.seeds // 2)).items():
        print(f"{f:g}\t{v:.0f}")


if __name__ == "__main__":
    main()
