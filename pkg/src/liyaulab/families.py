"""Deterministic graph families used as the test corpus."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .graph import WeightedGraph

FAMILIES = ("path", "cycle", "complete", "star", "lattice_box", "regular_tree")


@dataclass(frozen=True)
class FamilySpec:
    """Which family, its size, and the weight and measure conventions.

    ``size`` is N for path/cycle/complete/star (vertex count), ``(d, L)`` for
    lattice_box and ``(branching, depth)`` for regular_tree. ``measure`` is
    ``"unit"``, ``"degree"`` or an explicit vertex -> mass map.
    """

    family: str
    size: tuple[int, ...]
    weight: float = 1.0
    measure: str | Mapping[str, float] = "unit"

    def label(self) -> str:
        return f"{self.family}({','.join(map(str, self.size))})"


def _build(vertices, edges, spec: FamilySpec) -> WeightedGraph:
    if not spec.weight > 0:
        raise ValueError("edge weight must be positive")
    return WeightedGraph.from_edges(vertices, [(u, v, spec.weight) for u, v in edges], spec.measure)


def generate(spec: FamilySpec) -> WeightedGraph:
    fam, size = spec.family, tuple(int(s) for s in spec.size)
    if fam in ("path", "cycle", "complete", "star"):
        if len(size) != 1:
            raise ValueError(f"{fam} takes a single size N")
        (N,) = size
        minimum = {"path": 1, "cycle": 3, "complete": 1, "star": 2}[fam]
        if N < minimum:
            raise ValueError(f"{fam} needs N >= {minimum}")
        vs = [str(i) for i in range(N)]
        if fam == "path":
            edges = [(vs[i], vs[i + 1]) for i in range(N - 1)]
        elif fam == "cycle":
            edges = [(vs[i], vs[(i + 1) % N]) for i in range(N)]
        elif fam == "complete":
            edges = list(itertools.combinations(vs, 2))
        else:
            edges = [(vs[0], v) for v in vs[1:]]
        return _build(vs, edges, spec)

    if fam == "lattice_box":
        if len(size) != 2 or size[0] < 1 or size[1] < 1:
            raise ValueError("lattice_box needs (d >= 1, L >= 1)")
        d, L = size
        coords = list(itertools.product(range(L), repeat=d))
        name = {c: ",".join(map(str, c)) for c in coords}
        edges = []
        for c in coords:
            for axis in range(d):
                if c[axis] + 1 < L:
                    nb = c[:axis] + (c[axis] + 1,) + c[axis + 1:]
                    edges.append((name[c], name[nb]))
        return _build([name[c] for c in coords], edges, spec)

    if fam == "regular_tree":
        if len(size) != 2 or size[0] < 1 or size[1] < 0:
            raise ValueError("regular_tree needs (branching >= 1, depth >= 0)")
        branching, depth = size
        # root has `branching` children, every other internal vertex branching - 1,
        # so all internal vertices have degree `branching`
        vs, edges = ["r"], []
        frontier = ["r"]
        for level in range(depth):
            nxt = []
            for parent in frontier:
                kids = branching if parent == "r" else branching - 1
                for c in range(kids):
                    child = f"{parent}.{c}"
                    vs.append(child)
                    edges.append((parent, child))
                    nxt.append(child)
            frontier = nxt
        return _build(vs, edges, spec)

    raise ValueError(f"unknown family {fam!r}; expected one of {FAMILIES}")


def interior(g: WeightedGraph, spec: FamilySpec) -> list[str]:
    """Vertices of a lattice box all of whose coordinates are off the faces."""
    if spec.family != "lattice_box":
        return list(g.vertices)
    L = spec.size[1]
    return [v for v in g.vertices if all(0 < int(c) < L - 1 for c in v.split(","))]


def random_graph(rng: np.random.Generator, n_max: int = 40, w_range=(0.1, 10.0),
                 m_range=(0.1, 10.0), loops: bool = True) -> WeightedGraph:
    """Connected random weighted graph: a random spanning tree plus extra edges."""
    n = int(rng.integers(2, n_max + 1))
    vs = [f"v{i}" for i in range(n)]
    order = rng.permutation(n)
    pairs = set()
    for a in range(1, n):
        b = int(rng.integers(0, a))
        pairs.add(tuple(sorted((int(order[a]), int(order[b])))))
    extra = int(rng.integers(0, 2 * n))
    for _ in range(extra):
        i, j = sorted(int(t) for t in rng.integers(0, n, size=2))
        if i != j or loops:
            pairs.add((i, j))
    edges = [(vs[i], vs[j], float(rng.uniform(*w_range))) for i, j in sorted(pairs)]
    measure = rng.uniform(*m_range, size=n)
    return WeightedGraph.from_edges(vs, edges, measure)


@dataclass
class Corpus:
    """Named graphs with the vertices on which checks are evaluated."""

    graphs: dict[str, WeightedGraph] = field(default_factory=dict)
    check_vertices: dict[str, list[str]] = field(default_factory=dict)

    def add(self, spec: FamilySpec, name: str | None = None) -> WeightedGraph:
        g = generate(spec)
        name = name or spec.label()
        self.graphs[name] = g
        self.check_vertices[name] = interior(g, spec)
        return g


def liyau_corpus() -> Corpus:
    c = Corpus()
    c.add(FamilySpec("complete", (2,)))
    c.add(FamilySpec("complete", (5,)))
    c.add(FamilySpec("lattice_box", (2, 5)))
    c.add(FamilySpec("star", (6,)))
    return c
