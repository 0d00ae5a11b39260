"""Smallest n for which the classical Li-Yau inequality holds on the default grid,
next to the certified CDE' dimension, for f = delta_y over all y.

The ratio certified / needed shows how much room the falsification control
(shrinking n by a factor 4) has on each graph.
"""

import numpy as np

from liyaulab.families import FamilySpec, liyau_corpus
from liyaulab.inequalities import classical_liyau_lhs, default_t_grid
from liyaulab.pipeline import certify_corpus


def needed_dimension(e, t_grid):
    rows = [e.graph.index(x) for x in e.vertices]
    F = np.eye(e.graph.n)
    worst = 0.0
    for t in t_grid:
        worst = max(worst, float((2.0 * t * classical_liyau_lhs(e.graph, e.prop, F, t)[rows]).max()))
    return worst


def main():
    corpus = liyau_corpus()
    corpus.add(FamilySpec("lattice_box", (2, 4)))
    grid = default_t_grid()
    print(f"{'graph':<18} {'needed n':>10} {'certified n':>12} {'ratio':>7}")
    for e in certify_corpus(corpus):
        need = needed_dimension(e, grid)
        cert = e.n if e.certified else float("inf")
        print(f"{e.name:<18} {need:>10.4f} {cert:>12.4f} {cert / need:>7.2f}")


if __name__ == "__main__":
    main()
