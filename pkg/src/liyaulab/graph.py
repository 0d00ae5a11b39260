"""Weighted graph data model: G = (V, E, m, w) with symmetric weights and loops.

Vertex ids are strings. Internal dense indexing follows insertion order, so
every vertex function is a 1-D float array aligned with ``graph.vertices``.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Base class for invalid graph input."""


class AsymmetricWeight(GraphError):
    pass


class NonpositiveMeasure(GraphError):
    pass


class NonpositiveWeight(GraphError):
    pass


class Disconnected(GraphError):
    pass


class UnknownVertex(GraphError, KeyError):
    pass


class DuplicateEdge(GraphError):
    pass


class SchemaError(GraphError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ValidationSummary:
    delta: float
    deg_max: float
    bounded_ratio: float
    connected: bool


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Finite connected weighted graph.

    Args:
        vertices: ordered vertex ids.
        measure: positive vertex measure m, aligned with ``vertices``.
        edges: undirected edges ``(i, j, w)`` on dense indices, each listed once;
            ``i == j`` is a loop.
    """

    vertices: tuple[str, ...]
    measure: np.ndarray
    edges: tuple[tuple[int, int, float], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.measure, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "measure", m)
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.vertices)})
        if len(self._index) != len(self.vertices):
            raise GraphError("duplicate vertex ids")
        if m.shape != (len(self.vertices),):
            raise DimensionMismatch("measure length does not match vertex count")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(
        cls,
        vertices: Sequence[str],
        edges: Iterable[tuple[str, str, float]],
        measure: Mapping[str, float] | Sequence[float] | float | str = 1.0,
        validate_graph: bool = True,
    ) -> "WeightedGraph":
        """Build from vertex ids and ``(u, v, w)`` triples.

        ``measure`` may be a mapping, a sequence aligned with ``vertices``, a
        constant, or one of the strings ``"unit"`` / ``"degree"``.
        """
        vertices = tuple(str(v) for v in vertices)
        index = {v: i for i, v in enumerate(vertices)}
        seen: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            u, v = str(u), str(v)
            for z in (u, v):
                if z not in index:
                    raise UnknownVertex(f"edge endpoint {z!r} is not a vertex")
            i, j = sorted((index[u], index[v]))
            w = float(w)
            if (i, j) in seen:
                raise DuplicateEdge(f"edge {{{u}, {v}}} listed twice")
            seen[(i, j)] = w
        edge_tuple = tuple((i, j, w) for (i, j), w in seen.items())

        if isinstance(measure, str):
            if measure == "unit":
                m = np.ones(len(vertices))
            elif measure == "degree":
                m = np.zeros(len(vertices))
                for i, j, w in edge_tuple:
                    m[i] += w
                    if i != j:
                        m[j] += w
            else:
                raise SchemaError(f"unknown measure scheme {measure!r}")
        elif isinstance(measure, Mapping):
            missing = [v for v in vertices if v not in measure]
            if missing:
                raise SchemaError(f"missing measure entry for vertex {missing[0]!r}")
            m = np.array([float(measure[v]) for v in vertices])
        elif np.isscalar(measure):
            m = np.full(len(vertices), float(measure))
        else:
            m = np.asarray(measure, dtype=float)

        g = cls(vertices, m, edge_tuple)
        if validate_graph:
            validate(g)
        return g

    # -- basic structure ----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.vertices)

    def index(self, v: str) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownVertex(f"unknown vertex {v!r}") from None

    def __contains__(self, v) -> bool:
        return v in self._index

    @cached_property
    def weight_matrix(self) -> sp.csr_matrix:
        """Symmetric sparse weight matrix, loops on the diagonal."""
        rows, cols, vals = [], [], []
        for i, j, w in self.edges:
            rows.append(i)
            cols.append(j)
            vals.append(w)
            if i != j:
                rows.append(j)
                cols.append(i)
                vals.append(w)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def arcs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Directed non-loop arcs ``(src, dst, w)``, both orientations.

        Loops are dropped here: they contribute w * 0 to every difference operator.
        """
        src, dst, w = [], [], []
        for i, j, wt in self.edges:
            if i == j:
                continue
            src += [i, j]
            dst += [j, i]
            w += [wt, wt]
        return np.array(src, dtype=int), np.array(dst, dtype=int), np.array(w, dtype=float)

    @cached_property
    def arc_incidence(self) -> sp.csr_matrix:
        """Sparse (n x arcs) matrix summing arc values into their source."""
        src, _, _ = self.arcs
        return sp.csr_matrix(
            (np.ones(len(src)), (src, np.arange(len(src)))), shape=(self.n, len(src))
        )

    @cached_property
    def degree(self) -> np.ndarray:
        """deg(x) = sum of w_xy over y ~ x, loops included."""
        return np.asarray(self.weight_matrix.sum(axis=1)).ravel()

    @cached_property
    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        W = self.weight_matrix
        return tuple(
            tuple(int(j) for j in W.indices[W.indptr[i]:W.indptr[i + 1]] if j != i)
            for i in range(self.n)
        )

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Matrix of the Laplacian, (Delta f)(x) = (1/m(x)) sum w_xy (f(y) - f(x))."""
        W = self.weight_matrix.tolil()
        W.setdiag(0.0)
        W = W.tocsr()
        off_deg = np.asarray(W.sum(axis=1)).ravel()
        L = W - sp.diags(off_deg)
        return sp.diags(1.0 / self.measure) @ L

    @property
    def omega_min(self) -> float:
        ws = [w for i, j, w in self.edges if i != j]
        return min(ws) if ws else float("inf")

    @property
    def m_max(self) -> float:
        return float(self.measure.max())

    def func(self, values: Mapping[str, float] | Sequence[float] | float) -> np.ndarray:
        """Coerce a mapping/sequence/constant into a vertex function array."""
        if isinstance(values, Mapping):
            out = np.zeros(self.n)
            for k, val in values.items():
                out[self.index(k)] = val
            return out
        if np.isscalar(values):
            return np.full(self.n, float(values))
        arr = np.asarray(values, dtype=float)
        check_dim(self, arr)
        return arr

    def delta_function(self, y: str) -> np.ndarray:
        f = np.zeros(self.n)
        f[self.index(y)] = 1.0
        return f

    def content_hash(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()[:16]

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and np.array_equal(self.measure, other.measure)
            and sorted(self.edges) == sorted(other.edges)
        )

    def __hash__(self):
        return hash((self.vertices, self.edges))

    def __repr__(self):
        return f"WeightedGraph(|V|={self.n}, |E|={len(self.edges)})"

    def subgraph(self, keep: Iterable[int]) -> "WeightedGraph":
        """Induced subgraph on dense indices ``keep`` (order preserved)."""
        keep = sorted(set(keep))
        remap = {old: new for new, old in enumerate(keep)}
        edges = tuple(
            (remap[i], remap[j], w) for i, j, w in self.edges if i in remap and j in remap
        )
        return WeightedGraph(tuple(self.vertices[i] for i in keep), self.measure[keep], edges)


def check_dim(g: WeightedGraph, *fs: np.ndarray) -> None:
    """Vertex functions are length-n vectors or (n, k) column stacks."""
    for f in fs:
        if np.ndim(f) not in (1, 2) or np.shape(f)[0] != g.n:
            raise DimensionMismatch(f"expected vertex function of length {g.n}, got {np.shape(f)}")


def validate(g: WeightedGraph) -> ValidationSummary:
    """Check the standing assumptions and return delta, sup deg and sup deg/m.

    Raises:
        NonpositiveMeasure, NonpositiveWeight, AsymmetricWeight, Disconnected.
    """
    if g.n == 0:
        raise GraphError("graph has no vertices")
    bad = np.flatnonzero(~(g.measure > 0) | ~np.isfinite(g.measure))
    if bad.size:
        raise NonpositiveMeasure(f"m({g.vertices[bad[0]]!r}) = {g.measure[bad[0]]} is not positive")
    for i, j, w in g.edges:
        if not (w > 0 and np.isfinite(w)):
            raise NonpositiveWeight(f"weight of {{{g.vertices[i]}, {g.vertices[j]}}} is {w}")
    W = g.weight_matrix
    if abs(W - W.T).max() > 0:
        raise AsymmetricWeight("weight matrix is not symmetric")
    dist = bfs_distances(g, 0)
    if np.any(dist < 0):
        lost = g.vertices[int(np.flatnonzero(dist < 0)[0])]
        raise Disconnected(f"vertex {lost!r} is unreachable from {g.vertices[0]!r}")
    return ValidationSummary(
        delta=float(g.measure.min()),
        deg_max=float(g.degree.max()),
        bounded_ratio=float(np.max(g.degree / g.measure)),
        connected=True,
    )


# -- metric structure -------------------------------------------------------


def bfs_distances(g: WeightedGraph, source: int) -> np.ndarray:
    """Hop distances from dense index ``source``; -1 marks unreachable."""
    dist = np.full(g.n, -1, dtype=int)
    dist[source] = 0
    queue = deque([source])
    nbrs = g.neighbors
    while queue:
        a = queue.popleft()
        for b in nbrs[a]:
            if dist[b] < 0:
                dist[b] = dist[a] + 1
                queue.append(b)
    return dist


def graph_distance(g: WeightedGraph, x: str, z: str) -> int:
    """Number of edges on a shortest path; weights are ignored."""
    return int(bfs_distances(g, g.index(x))[g.index(z)])


def ball(g: WeightedGraph, x: str, r: float) -> list[str]:
    """B(x, r) = {y : d(x, y) <= r} for real r >= 0, in vertex order."""
    if r < 0:
        raise ValueError("radius must be non-negative")
    d = bfs_distances(g, g.index(x))
    return [g.vertices[i] for i in np.flatnonzero((d >= 0) & (d <= r + 1e-12))]


def ball_indices(g: WeightedGraph, i: int, r: float) -> np.ndarray:
    d = bfs_distances(g, i)
    return np.flatnonzero((d >= 0) & (d <= r + 1e-12))


def volume(g: WeightedGraph, A: Iterable[str]) -> float:
    return float(sum(g.measure[g.index(v)] for v in set(A)))


def ball_volume(g: WeightedGraph, x: str, r: float) -> float:
    """V(x, r) = V(B(x, r))."""
    return volume(g, ball(g, x, r))


def diameter(g: WeightedGraph) -> int:
    return int(max(bfs_distances(g, i).max() for i in range(g.n)))


# -- file format --------------------------------------------------------------


def to_document(g: WeightedGraph) -> dict:
    return {
        "vertices": list(g.vertices),
        "measure": {v: float(g.measure[i]) for i, v in enumerate(g.vertices)},
        "edges": [
            {"u": g.vertices[i], "v": g.vertices[j], "w": float(w)} for i, j, w in g.edges
        ],
    }


def dumps(g: WeightedGraph) -> str:
    return json.dumps(to_document(g), indent=1) + "\n"


def from_document(doc) -> WeightedGraph:
    if not isinstance(doc, dict):
        raise SchemaError("graph document must be a JSON object")
    for key in ("vertices", "measure", "edges"):
        if key not in doc:
            raise SchemaError(f"graph document is missing key {key!r}")
    vertices = doc["vertices"]
    if not isinstance(vertices, list) or not all(isinstance(v, str) for v in vertices):
        raise SchemaError("'vertices' must be a list of string ids")
    measure = doc["measure"]
    if not isinstance(measure, dict):
        raise SchemaError("'measure' must map vertex id -> number")
    for v in vertices:
        if v not in measure:
            raise SchemaError(f"missing measure entry for vertex {v!r}")
        if not isinstance(measure[v], (int, float)) or isinstance(measure[v], bool):
            raise SchemaError(f"measure of vertex {v!r} is not a number")
    extra = set(measure) - set(vertices)
    if extra:
        raise SchemaError(f"measure given for unknown vertex {sorted(extra)[0]!r}")
    triples = []
    if not isinstance(doc["edges"], list):
        raise SchemaError("'edges' must be a list")
    first_seen: dict[frozenset, int] = {}
    for k, e in enumerate(doc["edges"]):
        if not isinstance(e, dict) or not {"u", "v", "w"} <= set(e):
            raise SchemaError(f"edge #{k} must be an object with keys u, v, w")
        if not isinstance(e["w"], (int, float)) or isinstance(e["w"], bool):
            raise SchemaError(f"edge #{k} weight is not a number")
        key = frozenset((e["u"], e["v"]))
        if key in first_seen:
            raise DuplicateEdge(
                f"edge #{k} {{{e['u']}, {e['v']}}} duplicates edge #{first_seen[key]}"
            )
        first_seen[key] = k
        triples.append((e["u"], e["v"], e["w"]))
    return WeightedGraph.from_edges(vertices, triples, measure)


def loads(text: str) -> WeightedGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_document(doc)


def load(path: str | Path) -> WeightedGraph:
    return loads(Path(path).read_text())


def save(g: WeightedGraph, path: str | Path) -> None:
    Path(path).write_text(dumps(g))
