"""Residuals of exact identities: Green's formula, polarization, the Gamma~_2
rewrite, and the heat semigroup axioms. All residuals are relative."""

from __future__ import annotations

import numpy as np

from . import operators as ops
from .graph import WeightedGraph
from .heat import Propagator, heat_apply

TINY = 1e-300


def green_relative(g: WeightedGraph, f: np.ndarray, h: np.ndarray) -> float:
    return abs(ops.green_residual(g, f, h)) / ops.green_scale(g, f, h)


def polarization_relative(g: WeightedGraph, f: np.ndarray) -> float:
    """Delta(f^2) = 2 f Delta f + 2 Gamma(f), measured against the size of its terms."""
    a = ops.laplacian(g, f * f)
    b = 2.0 * f * ops.laplacian(g, f)
    c = 2.0 * ops.gamma(g, f)
    scale = max(np.abs(a).max(), np.abs(b).max(), np.abs(c).max(), TINY)
    return float(np.abs(a - b - c).max() / scale)


def tilde_relative(g: WeightedGraph, u: np.ndarray) -> float:
    """Gamma~_2(sqrt u) against (1/2) Delta Gamma(sqrt u) - Gamma(sqrt u, Delta u/(2 sqrt u))."""
    r = np.sqrt(u)
    direct = ops.gamma2_tilde(g, r)
    other = ops.gamma2_tilde_sqrt_form(g, u)
    terms = (0.5 * ops.laplacian(g, ops.gamma(g, r)), ops.gamma(g, r, ops.laplacian(g, r)),
             ops.gamma(g, r, ops.gamma(g, r) / r))
    scale = max(max(np.abs(t).max() for t in terms), TINY)
    return float(np.abs(direct - other).max() / scale)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).max() / max(np.abs(a).max(), np.abs(b).max(), TINY))


def semigroup_residuals(prop: Propagator, t: float, f: np.ndarray, s: float | None = None) -> dict[str, float]:
    """Residuals of the heat semigroup axioms at time t (all should be ~0).

    ``positivity`` is the most negative kernel entry (clipped at 0), the
    contraction entries are max(0, ||P_t f||_p - ||f||_p) / ||f||_p.
    """
    g = prop.graph
    s = t / 2.0 if s is None else s
    P = prop.matrix(t)
    out = {
        "semigroup": _rel(prop.matrix(s) @ prop.matrix(t - s) @ f, P @ f) if 0 < s < t else 0.0,
        # both sides decay to ~0 for large t, so measure against ||Delta|| ||f||
        "commute": float(np.abs(prop.laplacian(P @ f) - P @ prop.laplacian(f)).max()
                         / max(np.abs(prop.generator).sum(axis=1).max() * np.abs(f).max(), TINY)),
        "self_adjoint": _rel(g.measure[:, None] * P, (g.measure[:, None] * P).T),
        "stochastic": float(np.abs(P.sum(axis=1) - 1.0).max()),
        "positivity": float(max(0.0, -P.min())),
    }
    u = heat_apply(prop, f, t)
    for p in (1, 2, np.inf):
        base = ops.lp_norm(g, f, p)
        out[f"contraction_{p}"] = max(0.0, ops.lp_norm(g, u, p) - base) / max(base, TINY)
    return out
