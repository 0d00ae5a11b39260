"""Discrete operators on vertex functions: Laplacian, gradient forms, norms.

Every operator is evaluated edge-by-edge from differences f(y) - f(x), never by
expanding products, so identities between them hold to roundoff.
"""

from __future__ import annotations

import numpy as np

from .graph import WeightedGraph, check_dim


class NonpositiveFunction(ValueError):
    pass


def _edge_sum(g: WeightedGraph, values: np.ndarray) -> np.ndarray:
    """Sum arc values into their source vertex; works column-wise on 2-D input."""
    return g.arc_incidence @ values


def _w(g: WeightedGraph, f: np.ndarray) -> np.ndarray:
    _, _, w = g.arcs
    return w if f.ndim == 1 else w[:, None]


def _m(g: WeightedGraph, f: np.ndarray) -> np.ndarray:
    return g.measure if f.ndim == 1 else g.measure[:, None]


def laplacian(g: WeightedGraph, f: np.ndarray) -> np.ndarray:
    """(Delta f)(x) = (1/m(x)) sum_y w_xy (f(y) - f(x))."""
    f = np.asarray(f, dtype=float)
    check_dim(g, f)
    src, dst, _ = g.arcs
    return _edge_sum(g, _w(g, f) * (f[dst] - f[src])) / _m(g, f)


def gamma(g: WeightedGraph, f: np.ndarray, h: np.ndarray | None = None) -> np.ndarray:
    """Carre du champ Gamma(f, h); ``h=None`` gives Gamma(f) = Gamma(f, f)."""
    f = np.asarray(f, dtype=float)
    h = f if h is None else np.asarray(h, dtype=float)
    check_dim(g, f, h)
    src, dst, _ = g.arcs
    return _edge_sum(g, _w(g, f) * (f[dst] - f[src]) * (h[dst] - h[src])) / (2.0 * _m(g, f))


def gamma2(g: WeightedGraph, f: np.ndarray, h: np.ndarray | None = None) -> np.ndarray:
    """Iterated form Gamma_2(f, h) = (Delta Gamma(f,h) - Gamma(f, Delta h) - Gamma(h, Delta f)) / 2."""
    f = np.asarray(f, dtype=float)
    if h is None:
        return 0.5 * laplacian(g, gamma(g, f)) - gamma(g, f, laplacian(g, f))
    h = np.asarray(h, dtype=float)
    return 0.5 * (
        laplacian(g, gamma(g, f, h)) - gamma(g, f, laplacian(g, h)) - gamma(g, h, laplacian(g, f))
    )


def _require_positive(f: np.ndarray) -> None:
    if not np.all(f > 0):
        raise NonpositiveFunction("function must be strictly positive at every vertex")


def gamma2_tilde(g: WeightedGraph, f: np.ndarray) -> np.ndarray:
    """Modified iterated form Gamma_2(f) - Gamma(f, Gamma(f)/f) for f > 0."""
    f = np.asarray(f, dtype=float)
    _require_positive(f)
    return gamma2(g, f) - gamma(g, f, gamma(g, f) / f)


def gamma2_tilde_sqrt_form(g: WeightedGraph, u: np.ndarray) -> np.ndarray:
    """Gamma~_2(sqrt u) written through u: (1/2) Delta Gamma(sqrt u) - Gamma(sqrt u, Delta u / (2 sqrt u))."""
    u = np.asarray(u, dtype=float)
    _require_positive(u)
    r = np.sqrt(u)
    return 0.5 * laplacian(g, gamma(g, r)) - gamma(g, r, laplacian(g, u) / (2.0 * r))


def laplacian_log(g: WeightedGraph, f: np.ndarray) -> np.ndarray:
    """(Delta log f)(x) = (1/m(x)) sum_y w_xy log(f(y)/f(x))."""
    f = np.asarray(f, dtype=float)
    _require_positive(f)
    return laplacian(g, np.log(f))


def dirichlet_energy(g: WeightedGraph, f: np.ndarray, h: np.ndarray | None = None) -> float:
    """Q(f, h) = (1/2) sum_{x,y} w_xy (f(y)-f(x)) (h(y)-h(x))."""
    f = np.asarray(f, dtype=float)
    h = f if h is None else np.asarray(h, dtype=float)
    check_dim(g, f, h)
    src, dst, w = g.arcs
    return float(0.5 * np.sum(w * (f[dst] - f[src]) * (h[dst] - h[src])))


def lp_norm(g: WeightedGraph, f: np.ndarray, p: float) -> float:
    """Norm of f in l^p(V, m); ``p=np.inf`` gives max |f|."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    f = np.abs(np.asarray(f, dtype=float))
    check_dim(g, f)
    if np.isinf(p):
        return float(f.max())
    scale = f.max()
    if scale == 0:
        return 0.0
    return float(scale * np.sum((f / scale) ** p * g.measure) ** (1.0 / p))


def inner(g: WeightedGraph, f: np.ndarray, h: np.ndarray) -> float:
    """<f, h> = sum_x f(x) h(x) m(x)."""
    return float(np.sum(np.asarray(f) * np.asarray(h) * g.measure))


def green_residual(g: WeightedGraph, f: np.ndarray, h: np.ndarray) -> float:
    """sum f Delta h m + sum Gamma(f, h) m, which vanishes by Green's formula."""
    return inner(g, f, laplacian(g, h)) + float(np.sum(gamma(g, f, h) * g.measure))


def green_scale(g: WeightedGraph, f: np.ndarray, h: np.ndarray) -> float:
    """Size of the summands of the two Green sums, for relative tolerances."""
    f = np.asarray(f, dtype=float)
    lap_terms = float(np.sum(np.abs(f * laplacian(g, h)) * g.measure))
    return max(lap_terms, float(np.sum(np.abs(gamma(g, f, h)) * g.measure)), 1e-300)


def embedding_constant(delta: float, p: float, q: float) -> float:
    """C with ||f||_q <= C ||f||_p when inf m = delta and 1 <= p < q <= inf."""
    inv_q = 0.0 if np.isinf(q) else 1.0 / q
    return float(delta ** (inv_q - 1.0 / p))


def quotient_gradient_bound(g: WeightedGraph, f: np.ndarray, h: np.ndarray, B1: float, B2: float) -> np.ndarray:
    """Pointwise bound on Gamma(f/h) when |f| <= B1 and |h| >= B2 > 0.

    Returns (2/B2^2) Gamma(f) + (2 B1^2/B2^4) Gamma(h).
    """
    if not B2 > 0:
        raise ValueError("B2 must be positive")
    return 2.0 / B2**2 * gamma(g, f) + 2.0 * B1**2 / B2**4 * gamma(g, h)
