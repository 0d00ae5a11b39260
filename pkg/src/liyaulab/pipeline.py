"""Corpus runs: certify a dimension by search, then hand the graph to the checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .curvature import certify_cde_dimension
from .families import Corpus
from .graph import WeightedGraph
from .heat import Propagator, propagator_build


@dataclass
class CertifiedGraph:
    name: str
    graph: WeightedGraph
    vertices: list[str]
    n: float
    K: float
    certified: bool
    prop: Propagator

    @property
    def usable_n(self) -> float:
        """The certified n, or inf (every Li-Yau right-hand side becomes infinite) when uncertified."""
        return self.n if self.certified else math.inf


def certify_corpus(corpus: Corpus, K: float = 0.0, starts: int = 64, seed: int = 0) -> list[CertifiedGraph]:
    out = []
    for name, g in corpus.graphs.items():
        vs = corpus.check_vertices[name]
        n, ok = certify_cde_dimension(g, K=K, vertices=vs, starts=starts, seed=seed)
        out.append(CertifiedGraph(name, g, vs, n, K, ok, propagator_build(g)))
    return out
