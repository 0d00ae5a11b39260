"""Certified-by-search CDE'(n, K) dimensions on the Li-Yau corpus.

Usage: python scripts/certify_corpus.py [--starts 64] [--seed 0]
"""

import argparse
import math
import time

from liyaulab.curvature import cd_dimension_hint
from liyaulab.families import FamilySpec, liyau_corpus
from liyaulab.pipeline import certify_corpus


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--starts", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    corpus = liyau_corpus()
    corpus.add(FamilySpec("lattice_box", (2, 4)))
    print(f"{'graph':<18} {'K':>5} {'CD hint':>10} {'CDE n':>10}  certified")
    for K in (0.0, -1.0, -2.0):
        t0 = time.perf_counter()
        entries = certify_corpus(corpus, K=K, starts=args.starts, seed=args.seed)
        for e in entries:
            hint = max(cd_dimension_hint(e.graph, x, K) for x in e.vertices)
            n = f"{e.n:.6f}" if math.isfinite(e.n) else "inf"
            print(f"{e.name:<18} {K:>5g} {hint:>10.4g} {n:>10}  {e.certified}")
        print(f"  ({time.perf_counter() - t0:.1f}s for K = {K:g})")


if __name__ == "__main__":
    main()
