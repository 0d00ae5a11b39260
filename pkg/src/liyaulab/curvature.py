"""Curvature-dimension conditions at a vertex.

CD(n, K) is a quadratic condition and is decided exactly from eigenvalues of
local quadratic forms. CDE'(n, K) is not quadratic; it is probed by a seeded
multi-start search over positive functions f = exp(v) on the two-ball B_2(x).
A returned witness is a certificate of violation. Finding none proves nothing.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import networkx as nx
import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from . import operators as ops
from .graph import WeightedGraph, ball_indices

DEFAULT_TOL = 1e-7
MAX_ITERS = 500
V_BOUND = 12.0


def _inv(n: float) -> float:
    if not n > 0:
        raise ValueError(f"dimension n must be positive, got {n}")
    return 0.0 if math.isinf(n) else 1.0 / n


class LocalPatch:
    """Restriction of the graph to B_2(x), with x at local index 0.

    Local order is x, then its neighbours (the "inner" vertices, whose full
    neighbourhoods lie inside the patch), then the distance-2 sphere.
    """

    def __init__(self, g: WeightedGraph, x: str | int):
        self.graph = g
        self.center = g.index(x) if isinstance(x, str) else int(x)
        i = self.center
        nbrs = [j for j in g.neighbors[i]]
        b2 = ball_indices(g, i, 2)
        sphere2 = [j for j in b2 if j != i and j not in set(nbrs)]
        self.global_index = np.array([i] + nbrs + sphere2, dtype=int)
        self.k = 1 + len(nbrs)
        W = g.weight_matrix[self.global_index][:, self.global_index].toarray()
        self.W = W
        self.m = g.measure[self.global_index]
        self.Wi = W[: self.k]
        self.mi = self.m[: self.k]
        self.off_deg = self.Wi.sum(axis=1) - np.diag(W)[: self.k]

    @property
    def size(self) -> int:
        return len(self.global_index)

    def vertex_ids(self) -> list[str]:
        return [self.graph.vertices[j] for j in self.global_index]

    def skeleton(self) -> nx.Graph:
        """The data every local quantity depends on: the root, inner measures and
        the non-loop edges touching inner vertices. Nodes are local indices."""
        G = nx.Graph()
        for a in range(self.size):
            G.add_node(a, root=a == 0, m=float(self.m[a]) if a < self.k else None)
        for a in range(self.k):
            for b in np.flatnonzero(self.W[a]):
                if b != a:
                    G.add_edge(a, int(b), w=float(self.W[a, b]))
        return G

    # -- quadratic forms for CD -------------------------------------------

    def laplacian_rows(self) -> np.ndarray:
        """N x N matrix whose inner rows are the Laplacian; other rows are zero."""
        N = self.size
        L = np.zeros((N, N))
        L[: self.k] = self.Wi
        L[np.arange(self.k), np.arange(self.k)] = -self.off_deg
        L[: self.k] /= self.mi[:, None]
        return L

    def gamma_form(self, z: int) -> np.ndarray:
        """Matrix G_z with Gamma(f)(z) = f^T G_z f, for an inner local index z."""
        w = self.W[z].copy()
        w[z] = 0.0
        G = np.diag(w)
        G[z, z] = w.sum()
        G[z, :] -= w
        G[:, z] -= w
        return G / (2.0 * self.m[z])

    def cd_forms(self, n: float) -> tuple[np.ndarray, np.ndarray]:
        """(N_n, G_x): Gamma_2(f)(x) - (Delta f(x))^2/n and Gamma(f)(x) as matrices."""
        L = self.laplacian_rows()
        Gx = self.gamma_form(0)
        lx = L[0]
        G2 = sum(lx[z] * self.gamma_form(z) for z in range(self.k) if lx[z] != 0.0) * 0.5
        GL = Gx @ L
        G2 = G2 - 0.5 * (GL + GL.T)
        Nn = G2 - _inv(n) * np.outer(lx, lx)
        return 0.5 * (Nn + Nn.T), Gx

    # -- CDE' objective ---------------------------------------------------

    def _prepare(self) -> None:
        k = self.k
        wx = self.Wi[0, :k].copy()
        wx[0] = 0.0
        wrow = self.Wi[0].copy()
        wrow[0] = 0.0
        dllog = wrow / self.mi[0]
        dllog[0] = -wrow.sum() / self.mi[0]
        self._wx, self._wrow, self._dllog = wx, wrow, dllog
        self._Wm = self.Wi / self.mi[:, None]
        self._rowsum_m = self.Wi.sum(axis=1) / self.mi
        self._diag = (np.arange(k), np.arange(k))

    def cde_terms(self, v: np.ndarray, n: float, grad: bool = True):
        """Evaluate A = Gamma~_2(f)(x) - f(x)^2 (Delta log f)(x)^2 / n and Gamma(f)(x) at f = exp(v).

        Returns ``(A, G)`` or, with ``grad``, ``(A, G, dA/dv, dG/dv)``.
        """
        if not hasattr(self, "_wx"):
            self._prepare()
        inv_n = _inv(n)
        k = self.k
        F = np.exp(v)
        Fi = F[:k]
        Wm, wx, mx = self._Wm, self._wx, self.mi[0]
        D = F - Fi[:, None]
        WD = Wm * D
        lapF = WD.sum(axis=1)
        gam = 0.5 * (WD * D).sum(axis=1)
        # Delta(f^2) = Delta f * 2f + 2 Gamma(f), evaluated exactly from differences
        D2 = (WD * (F + Fi[:, None])).sum(axis=1)
        gvals = D2 / (2.0 * Fi)

        a = Fi - Fi[0]
        b = gvals - gvals[0]
        half_lap_gamma = 0.5 * (wx @ (gam - gam[0])) / mx
        gamma_fg = (wx @ (a * b)) / (2.0 * mx)
        llog = (self._wrow @ v - self._wrow.sum() * v[0]) / mx
        T = Fi[0] ** 2 * llog * llog
        A = half_lap_gamma - gamma_fg - inv_n * T
        G = gam[0]
        if not grad:
            return A, G

        diag = self._diag
        dgam = WD
        dgam[diag] -= lapF
        d_half = 0.5 * (wx @ dgam - wx.sum() * dgam[0]) / mx

        c = wx * a / (2.0 * mx)
        c[0] = -c.sum()
        dD2 = 2.0 * Wm * F
        dD2[diag] -= 2.0 * Fi * self._rowsum_m
        dg = dD2 / (2.0 * Fi)[:, None]
        dg[diag] -= D2 / (2.0 * Fi * Fi)
        d_gfg = c @ dg
        wb = wx * b / (2.0 * mx)
        d_gfg[:k] += wb
        d_gfg[0] -= wb.sum()

        dA = (d_half - d_gfg) * F
        if inv_n:
            dA -= inv_n * (2.0 * Fi[0] ** 2 * llog) * self._dllog
            dA[0] -= inv_n * 2.0 * T
        dG = dgam[0] * F
        return A, G, dA, dG


# -- CD: exact -----------------------------------------------------------------


@dataclass(frozen=True)
class CDDecision:
    holds: bool
    min_eigenvalue: float


def cd_form_matrix(g: WeightedGraph, x: str, n: float, K: float) -> tuple[np.ndarray, list[str]]:
    """Matrix of f -> Gamma_2(f)(x) - (Delta f(x))^2/n - K Gamma(f)(x) on f|B_2(x)."""
    patch = LocalPatch(g, x)
    Nn, Gx = patch.cd_forms(n)
    return Nn - K * Gx, patch.vertex_ids()


def cd_holds_at(g: WeightedGraph, x: str, n: float, K: float, tol: float = DEFAULT_TOL) -> CDDecision:
    M, _ = cd_form_matrix(g, x, n, K)
    lam = float(np.linalg.eigvalsh(M)[0])
    return CDDecision(holds=lam >= -tol, min_eigenvalue=lam)


def cd_curvature_at(g: WeightedGraph, x: str, n: float, tol: float = 1e-10) -> float:
    """Largest K such that CD(n, K) holds at x; may be -inf.

    Solved as a generalized eigenproblem after fixing f(x) = 0 and eliminating
    the directions on which Gamma(f)(x) vanishes (the distance-2 sphere).
    """
    patch = LocalPatch(g, x)
    Nn, Gx = patch.cd_forms(n)
    Nn, Gx = Nn[1:, 1:], Gx[1:, 1:]
    if Nn.shape[0] == 0:
        return math.inf
    gev, gvec = np.linalg.eigh(Gx)
    scale = max(gev.max(), 1e-300)
    rng_mask = gev > tol * scale
    R, Z = gvec[:, rng_mask], gvec[:, ~rng_mask]
    NRR = R.T @ Nn @ R
    if Z.shape[1]:
        NZZ = Z.T @ Nn @ Z
        NRZ = R.T @ Nn @ Z
        zev, zvec = np.linalg.eigh(NZZ)
        nscale = max(np.abs(Nn).max(), 1e-300)
        if zev[0] < -tol * nscale:
            return -math.inf
        pos = zev > tol * nscale
        coupling = NRZ @ zvec[:, ~pos]
        if coupling.size and np.abs(coupling).max() > math.sqrt(tol) * nscale:
            return -math.inf
        Zp = zvec[:, pos]
        NRZp = NRZ @ Zp
        NRR = NRR - NRZp @ np.diag(1.0 / zev[pos]) @ NRZp.T
    GRR = np.diag(gev[rng_mask])
    NRR = 0.5 * (NRR + NRR.T)
    return float(sla.eigh(NRR, GRR, eigvals_only=True)[0])


def cd_dimension_hint(g: WeightedGraph, x: str, K: float = 0.0, tol: float = 1e-9) -> float:
    """Smallest n with CD(n, K) at x (up to ``tol`` on K); inf if CD(inf, K) fails."""
    k_inf = cd_curvature_at(g, x, math.inf)
    if k_inf < K - tol:
        return math.inf
    lo, hi = 1e-6, 1.0
    while cd_curvature_at(g, x, hi) < K - tol:
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if cd_curvature_at(g, x, mid) >= K - tol:
            hi = mid
        else:
            lo = mid
        if hi / lo < 1 + 1e-10:
            break
    return hi


# -- CDE': numerical search ---------------------------------------------------------


def cde_deficit(g: WeightedGraph, x: str, f: np.ndarray, n: float, K: float) -> float:
    """Gamma~_2(f)(x) - f(x)^2 (Delta log f)(x)^2 / n - K Gamma(f)(x), on the whole graph."""
    f = np.asarray(f, dtype=float)
    i = g.index(x)
    inv_n = _inv(n)
    t2 = ops.gamma2_tilde(g, f)[i]
    llog = ops.laplacian_log(g, f)[i]
    return float(t2 - inv_n * f[i] ** 2 * llog**2 - K * ops.gamma(g, f)[i])


@dataclass
class CurvatureWitness:
    vertex: str
    f: dict[str, float]
    deficit: float
    normalization: float
    n: float
    K: float

    def as_array(self, g: WeightedGraph) -> np.ndarray:
        """Extend to the whole graph by the value at the centre; only B_2(x) matters."""
        out = np.full(g.n, self.f[self.vertex])
        for v, val in self.f.items():
            out[g.index(v)] = val
        return out

    def recheck(self, g: WeightedGraph) -> float:
        return cde_deficit(g, self.vertex, self.as_array(g), self.n, self.K)


@dataclass
class SearchResult:
    value: float
    v: np.ndarray
    converged_starts: int
    starts: int


def _start_points(size: int, starts: int, seed: int) -> list[np.ndarray]:
    pts = []
    for s in range(starts):
        rng = np.random.default_rng([seed, s])
        scale = (0.3, 1.0, 2.5)[s % 3]
        v = rng.normal(scale=scale, size=size)
        v[0] = 0.0
        pts.append(v)
    return pts


class _PatchCache:
    """Search results shared between rooted-isomorphic patches.

    A hit is confirmed by an exact isomorphism and the stored optimum is
    carried over through it, so witnesses remain valid for the new vertex.
    """

    def __init__(self):
        self._entries: dict[tuple, list[tuple[nx.Graph, dict, object]]] = {}

    @staticmethod
    def _key(skel: nx.Graph, query: tuple) -> tuple:
        wl = nx.weisfeiler_lehman_graph_hash(
            skel, node_attr="label", edge_attr="wl", iterations=3)
        return (wl, query)

    @staticmethod
    def _label(skel: nx.Graph) -> None:
        for a, d in skel.nodes(data=True):
            d["label"] = f"{d['root']}|{d['m']!r}"
        for a, b, d in skel.edges(data=True):
            d["wl"] = repr(d["w"])

    def lookup(self, patch: LocalPatch, query: tuple):
        skel = patch.skeleton()
        self._label(skel)
        key = self._key(skel, query)
        for other, _, value in self._entries.get(key, []):
            gm = nx.isomorphism.GraphMatcher(
                skel, other,
                node_match=lambda p, q: p["root"] == q["root"] and p["m"] == q["m"],
                edge_match=lambda p, q: p["w"] == q["w"])
            if gm.is_isomorphic():
                return gm.mapping, value
        return None, None

    def store(self, patch: LocalPatch, query: tuple, value) -> None:
        skel = patch.skeleton()
        self._label(skel)
        self._entries.setdefault(self._key(skel, query), []).append((skel, {}, value))


_CACHE = _PatchCache()


def clear_cache() -> None:
    global _CACHE
    _CACHE = _PatchCache()


def _search_ratio(patch: LocalPatch, n: float, starts: int, max_iters: int, seed: int) -> SearchResult:
    """Minimise A(f)/Gamma(f)(x) over f = exp(v), v(x) = 0 (cached per patch class)."""
    query = ("ratio", float(n), starts, max_iters, seed)
    mapping, hit = _CACHE.lookup(patch, query)
    if hit is not None:
        v = np.array([hit.v[mapping[a]] for a in range(patch.size)])
        return SearchResult(hit.value, v, hit.converged_starts, hit.starts)
    res = _search_ratio_uncached(patch, n, starts, max_iters, seed)
    _CACHE.store(patch, query, res)
    return res


def _search_ratio_uncached(patch: LocalPatch, n: float, starts: int, max_iters: int,
                           seed: int) -> SearchResult:
    N = patch.size
    if N == 1:
        return SearchResult(math.inf, np.zeros(1), 0, 0)

    def obj(w):
        v = np.concatenate(([0.0], w))
        A, G, dA, dG = patch.cde_terms(v, n)
        if G <= 1e-300:
            return 1e300, np.zeros_like(w)
        r = A / G
        return r, ((dA - r * dG) / G)[1:]

    best = SearchResult(math.inf, np.zeros(N), 0, starts)
    bounds = [(-V_BOUND, V_BOUND)] * (N - 1)
    for v0 in _start_points(N, starts, seed):
        with np.errstate(all="ignore"):
            res = minimize(obj, v0[1:], jac=True, method="L-BFGS-B", bounds=bounds,
                           options={"maxiter": max_iters, "ftol": 1e-15, "gtol": 1e-10})
        if res.success:
            best.converged_starts += 1
        if np.isfinite(res.fun) and res.fun < best.value:
            best.value = float(res.fun)
            best.v = np.concatenate(([0.0], res.x))
    return best


def _witness(patch: LocalPatch, v: np.ndarray, n: float, K: float) -> CurvatureWitness:
    A, G = patch.cde_terms(v, n, grad=False)
    f = np.exp(v) / math.sqrt(G)
    ids = patch.vertex_ids()
    x = ids[0]
    fmap = {vid: float(val) for vid, val in zip(ids, f)}
    g = patch.graph
    deficit = cde_deficit(g, x, CurvatureWitness(x, fmap, 0, 0, n, K).as_array(g), n, K)
    return CurvatureWitness(vertex=x, f=fmap, deficit=deficit, normalization=1.0, n=n, K=K)


def cde_search_counterexample(g: WeightedGraph, x: str, n: float, K: float, starts: int = 16,
                              max_iters: int = MAX_ITERS, seed: int = 0,
                              tol: float = DEFAULT_TOL) -> CurvatureWitness | None:
    """Look for positive f violating CDE'(n, K) at x. Returns a witness or None."""
    _inv(n)
    if starts < 1:
        raise ValueError("starts must be >= 1")
    patch = LocalPatch(g, x)
    res = _search_ratio(patch, n, starts, max_iters, seed)
    if not np.isfinite(res.value) or res.value - K >= -tol:
        return None
    w = _witness(patch, res.v, n, K)
    return w if w.deficit < -tol else None


def cde_curvature_upper(g: WeightedGraph, x: str, n: float, starts: int = 16, seed: int = 0,
                        max_iters: int = MAX_ITERS) -> float:
    """Smallest value of (Gamma~_2 - f^2 (Delta log f)^2 / n) / Gamma(f) found at x.

    Every evaluated f gives a valid upper bound on the best K in CDE'(n, K) at x.
    """
    _inv(n)
    return _search_ratio(LocalPatch(g, x), n, starts, max_iters, seed).value


def cde_dimension_estimate(g: WeightedGraph, x: str, starts: int = 16, seed: int = 0,
                           max_iters: int = MAX_ITERS, K: float = 0.0) -> float:
    """Largest f(x)^2 (Delta log f)^2 / (Gamma~_2(f) - K Gamma(f))(x) found: the search's lower
    estimate of the smallest n with CDE'(n, K) at x. Returns inf when the denominator went negative."""
    patch = LocalPatch(g, x)
    query = ("dimension", float(K), starts, max_iters, seed)
    _, hit = _CACHE.lookup(patch, query)
    if hit is None:
        hit = _dimension_estimate(patch, starts, seed, max_iters, K)
        _CACHE.store(patch, query, hit)
    return hit


def _dimension_estimate(patch: LocalPatch, starts: int, seed: int, max_iters: int, K: float = 0.0) -> float:
    N = patch.size
    if N == 1:
        return 0.0
    # maximise T / A_inf  <=>  minimise -T/A_inf, with T = (A_inf - A_1), A_inf shifted by -K Gamma
    best = 0.0

    def obj(w):
        v = np.concatenate(([0.0], w))
        Ainf, G, dAinf, dG = patch.cde_terms(v, math.inf)
        A1, _, dA1, _ = patch.cde_terms(v, 1.0)
        T, dT = Ainf - A1, dAinf - dA1
        Ainf, dAinf = Ainf - K * G, dAinf - K * dG
        if Ainf <= 0:
            return (1e6 if T > 0 else 0.0), np.zeros_like(w)
        r = -T / Ainf
        return r, (-(dT - (T / Ainf) * dAinf) / Ainf)[1:]

    bounds = [(-V_BOUND, V_BOUND)] * (N - 1)
    for v0 in _start_points(N, starts, seed):
        with np.errstate(all="ignore"):
            res = minimize(obj, v0[1:], jac=True, method="L-BFGS-B", bounds=bounds,
                           options={"maxiter": max_iters})
        if res.fun >= 1e6:
            return math.inf
        best = max(best, -float(res.fun))
    return best


# -- sweeps -------------------------------------------------------------------------


@dataclass
class VertexCurvature:
    vertex: str
    cd_K_star: float
    cde_best_K_upper: float
    verdict: str
    cde_witness: CurvatureWitness | None = None


@dataclass
class CurvatureReport:
    n: float
    K: float
    seed: int
    starts: int
    records: list[VertexCurvature] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        if any(r.verdict == "violated" for r in self.records):
            return "violated"
        return "inconclusive"

    def to_json(self) -> str:
        return json.dumps([_record_dict(r) for r in self.records], indent=1, allow_nan=True)

    def to_csv(self) -> str:
        lines = ["vertex,cd_K_star,cde_best_K_upper,verdict"]
        for r in self.records:
            lines.append(f"{r.vertex},{r.cd_K_star!r},{r.cde_best_K_upper!r},{r.verdict}")
        return "\n".join(lines) + "\n"


def _record_dict(r: VertexCurvature) -> dict:
    d = asdict(r)
    for key in ("cd_K_star", "cde_best_K_upper"):
        if not math.isfinite(d[key]):
            d[key] = str(d[key])
    return d


def curvature_sweep(g: WeightedGraph, n: float, K: float, vertices=None, starts: int = 16,
                    seed: int = 0, tol: float = DEFAULT_TOL) -> CurvatureReport:
    """CD curvature and a CDE' counterexample search at each vertex.

    Verdict per vertex is ``violated`` when a witness is found, otherwise
    ``inconclusive``: the search cannot prove CDE'.
    """
    vertices = list(g.vertices) if vertices is None else list(vertices)
    report = CurvatureReport(n=n, K=K, seed=seed, starts=starts)
    for x in vertices:
        patch = LocalPatch(g, x)
        res = _search_ratio(patch, n, starts, MAX_ITERS, seed)
        witness = None
        if np.isfinite(res.value) and res.value - K < -tol:
            w = _witness(patch, res.v, n, K)
            witness = w if w.deficit < -tol else None
        report.records.append(VertexCurvature(
            vertex=x,
            cd_K_star=cd_curvature_at(g, x, n),
            cde_best_K_upper=res.value,
            verdict="violated" if witness else "inconclusive",
            cde_witness=witness,
        ))
    return report


def certify_cde_dimension(g: WeightedGraph, K: float = 0.0, vertices=None, starts: int = 64,
                          seed: int = 0, growth: float = 1.25, max_rounds: int = 12,
                          tol: float = DEFAULT_TOL) -> tuple[float, bool]:
    """Find n for which no CDE'(n, K) counterexample is found at any listed vertex.

    The starting guess is the largest of the CD(n, K) dimension and the search
    estimate of the CDE'(n, K) dimension; n grows geometrically while witnesses
    appear. Returns ``(n, certified)``.
    """
    vertices = list(g.vertices) if vertices is None else list(vertices)
    n = 0.0
    for x in vertices:
        n = max(n, cd_dimension_hint(g, x, K),
                cde_dimension_estimate(g, x, starts=min(starts, 16), seed=seed, K=K))
    if not math.isfinite(n):
        return math.inf, False
    n = max(n, 1e-3) * (1.0 + 1e-6)
    for _ in range(max_rounds):
        if all(cde_search_counterexample(g, x, n, K, starts=starts, seed=seed, tol=tol) is None
               for x in vertices):
            return n, True
        n *= growth
    return n, False
