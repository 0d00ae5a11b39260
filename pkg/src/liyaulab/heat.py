"""Heat semigroup P_t = exp(t Delta) on finite graphs.

Two engines share one ``Propagator``:

* spectral: eigendecomposition of the m-symmetrised operator
  A = M^{1/2} Delta M^{-1/2}; exact to absolute roundoff, used for eigenvalues,
  derivatives and cross-checks.
* uniformized: exp(t Delta) = (exp(-theta) exp(theta B))^(2^s) with
  B = Delta / c + I >= 0 entrywise. All series terms and squarings are
  non-negative, so kernel entries keep relative accuracy even when they are
  far below machine epsilon (small t, distant vertices). Li-Yau ratios need that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import WeightedGraph, ball_indices, check_dim


class EigenSolverError(RuntimeError):
    pass


def _uniformized_expm(L: np.ndarray, t: float) -> np.ndarray:
    """exp(t L) for L with non-negative off-diagonal and non-positive row sums."""
    N = L.shape[0]
    if t == 0:
        return np.eye(N)
    c = float(max(-L.diagonal().min(), 0.0))
    if c == 0.0:
        return np.eye(N)
    B = L / c + np.eye(N)
    np.clip(B, 0.0, None, out=B)
    s = max(0, math.ceil(math.log2(c * t / 0.5))) if c * t > 0.5 else 0
    theta = c * t / 2.0**s
    term = np.eye(N)
    acc = np.eye(N)
    for k in range(1, 200):
        term = term @ B * (theta / k)
        acc += term
        if term.max() <= 1e-18 * acc.max():
            break
    E = acc * math.exp(-theta)
    for _ in range(s):
        E = E @ E
    return E


@dataclass(eq=False)
class Propagator:
    """Factorised heat semigroup of a finite graph, optionally with killing.

    ``killing[x]`` is the total weight from x to vertices outside the graph on
    which functions vanish (Dirichlet condition); zero for the plain graph.
    """

    graph: WeightedGraph
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    measure_roots: np.ndarray
    killing: np.ndarray
    generator: np.ndarray = field(repr=False)

    def __post_init__(self):
        self._kernel_cache: dict[float, np.ndarray] = {}

    @property
    def n(self) -> int:
        return self.graph.n

    def reconstruction_error(self) -> float:
        U, lam, r = self.eigenvectors, self.eigenvalues, self.measure_roots
        A = (U * lam) @ U.T
        L = (A / r[:, None]) * r[None, :]
        return float(np.abs(L - self.generator).max() / max(np.abs(self.generator).max(), 1e-300))

    def matrix(self, t: float, method: str = "uniformized") -> np.ndarray:
        """Dense matrix of P_t."""
        if t < 0:
            raise ValueError("t must be non-negative")
        if method == "spectral":
            U, lam, r = self.eigenvectors, self.eigenvalues, self.measure_roots
            E = (U * np.exp(t * lam)) @ U.T
            return (E / r[:, None]) * r[None, :]
        if method != "uniformized":
            raise ValueError(f"unknown method {method!r}")
        key = float(t)
        P = self._kernel_cache.get(key)
        if P is None:
            P = _uniformized_expm(self.generator, key)
            if len(self._kernel_cache) > 256:
                self._kernel_cache.clear()
            self._kernel_cache[key] = P
        return P

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Generator applied to f (the killed Laplacian for a truncation)."""
        return self.generator @ f


def propagator_build(g: WeightedGraph, killing: np.ndarray | None = None) -> Propagator:
    """Factorise Delta (minus killing / m) through its m-symmetrisation."""
    Lw = g.weight_matrix.toarray()
    np.fill_diagonal(Lw, 0.0)
    kill = np.zeros(g.n) if killing is None else np.asarray(killing, dtype=float)
    Lw -= np.diag(Lw.sum(axis=1) + kill)
    m = g.measure
    r = np.sqrt(m)
    A = Lw / np.outer(r, r)
    A = 0.5 * (A + A.T)
    try:
        lam, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigh failed on {g!r}: {exc}") from exc
    lam = np.minimum(lam, 0.0) if killing is None else lam
    gen = Lw / m[:, None]
    return Propagator(g, lam, U, r, kill, gen)


def heat_apply(prop: Propagator, f: np.ndarray, t: float, method: str = "uniformized") -> np.ndarray:
    """P_t f."""
    if t < 0:
        raise ValueError("t must be non-negative")
    f = np.asarray(f, dtype=float)
    check_dim(prop.graph, f)
    if t == 0:
        return f.copy()
    return prop.matrix(t, method) @ f


def heat_derivative(prop: Propagator, f: np.ndarray, t: float, method: str = "spectral") -> np.ndarray:
    """d/dt P_t f = Delta P_t f.

    The spectral route differentiates each mode; the uniformized route applies
    the generator to P_t f.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    f = np.asarray(f, dtype=float)
    check_dim(prop.graph, f)
    if method == "spectral":
        U, lam, r = prop.eigenvectors, prop.eigenvalues, prop.measure_roots
        return (U @ (lam * np.exp(t * lam) * (U.T @ (r * f)))) / r
    return prop.laplacian(heat_apply(prop, f, t, method))


@dataclass(frozen=True)
class HeatKernelValue:
    t: float
    x: str
    y: str
    p: float


def heat_kernel(prop: Propagator, t: float, x: str, y: str, method: str = "uniformized") -> HeatKernelValue:
    """p(t, x, y) = P_t(delta_y / m(y))(x)."""
    if not t > 0:
        raise ValueError("heat kernel needs t > 0")
    g = prop.graph
    i, j = g.index(x), g.index(y)
    P = prop.matrix(t, method)
    return HeatKernelValue(t, x, y, float(P[i, j] / g.measure[j]))


def heat_kernel_matrix(prop: Propagator, t: float, method: str = "uniformized") -> np.ndarray:
    """Array p[x, y] of the heat kernel."""
    if not t > 0:
        raise ValueError("heat kernel needs t > 0")
    return prop.matrix(t, method) / prop.graph.measure[None, :]


def kernel_table_csv(prop: Propagator, times) -> str:
    g = prop.graph
    lines = ["t,x,y,p"]
    for t in times:
        p = heat_kernel_matrix(prop, t)
        for i, x in enumerate(g.vertices):
            for j, y in enumerate(g.vertices):
                lines.append(f"{t!r},{x},{y},{p[i, j]!r}")
    return "\n".join(lines) + "\n"


@dataclass
class Truncation:
    """Ball B(center, R) with Dirichlet condition outside."""

    graph: WeightedGraph
    killing: np.ndarray
    boundary: list[str]
    whole_graph: bool
    ambient_index: np.ndarray

    def propagator(self) -> Propagator:
        return propagator_build(self.graph, self.killing)


def dirichlet_truncation(g: WeightedGraph, center: str, R: int) -> Truncation:
    """Induced subgraph on B(center, R); boundary vertices keep their full degree."""
    if R < 1:
        raise ValueError("R must be >= 1")
    keep = ball_indices(g, g.index(center), R)
    whole = len(keep) == g.n
    sub = g.subgraph(keep)
    W = g.weight_matrix.toarray()
    np.fill_diagonal(W, 0.0)
    inside = np.zeros(g.n, dtype=bool)
    inside[keep] = True
    killing = W[keep][:, ~inside].sum(axis=1)
    boundary = [sub.vertices[a] for a in np.flatnonzero(killing > 0)]
    return Truncation(sub, killing, boundary, whole, keep)
