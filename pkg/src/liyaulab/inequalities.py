"""Li-Yau type inequalities for the heat semigroup, and their consequences.

All checks report margins rhs - lhs on a grid; time derivatives of the heat
flow are taken analytically (d/dt P_t f = Delta P_t f). Finite differences
appear only in the derivative-residual helpers, which exist to test the
analytic formulas.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import operators as ops
from .graph import WeightedGraph, ball_indices, bfs_distances, graph_distance
from .heat import Propagator, heat_apply, heat_kernel_matrix
from .reports import DEFAULT_TOL, ViolationReport

DEFAULT_BS = (0.75, 1.0, 2.0, 5.0)


def default_t_grid(t_min: float = 0.01, t_max: float = 10.0, num: int = 25) -> np.ndarray:
    return np.geomspace(t_min, t_max, num)


class InvalidSchedule(ValueError):
    pass


# -- time weights W ---------------------------------------------------------------


@dataclass(frozen=True)
class PowerSchedule:
    """W(s) = (1 - s/t)^b, b > 1/2."""

    b: float

    def __post_init__(self):
        if not self.b > 0.5:
            raise InvalidSchedule(f"power schedule needs b > 1/2, got {self.b}")

    def W(self, s, t):
        return (1.0 - np.asarray(s) / t) ** self.b

    def dW(self, s, t):
        return -(self.b / t) * (1.0 - np.asarray(s) / t) ** (self.b - 1.0)

    def closed_integrals(self, t: float) -> tuple[float, float]:
        b = self.b
        return t / (2 * b + 1), b * b / ((2 * b - 1) * t)


@dataclass(frozen=True)
class GeneralSchedule:
    """Arbitrary W given as callables ``W(s, t)`` and ``dW(s, t)``, checked on ``samples`` points."""

    W: Callable
    dW: Callable
    samples: int = 201
    label: str = "general"


def w_validate(schedule, t: float, K: float, tol: float = 1e-12) -> bool:
    """Check W(0) = 1, W(t) = 0, W > 0 on [0, t) and W' <= -K W on the sample grid.

    Raises InvalidSchedule on the first violated condition.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    samples = getattr(schedule, "samples", 201)
    s = np.linspace(0.0, t, samples)
    W = np.asarray(schedule.W(s, t), dtype=float)
    if abs(W[0] - 1.0) > tol:
        raise InvalidSchedule(f"W(0) = {W[0]} != 1")
    if abs(W[-1]) > tol:
        raise InvalidSchedule(f"W(t) = {W[-1]} != 0")
    if np.any(W[:-1] <= 0):
        raise InvalidSchedule("W must be positive on [0, t)")
    with np.errstate(all="ignore"):
        dW = np.asarray(schedule.dW(s[:-1], t), dtype=float)
    bad = np.flatnonzero(dW > -K * W[:-1] + tol * (1 + np.abs(dW)))
    if bad.size:
        raise InvalidSchedule(f"W'(s) > -K W(s) at s = {s[bad[0]]:.6g}")
    return True


def w_integrals(schedule, t: float, method: str = "auto") -> tuple[float, float]:
    """(int_0^t W^2, int_0^t W'^2).

    Closed forms for the power family; otherwise adaptive Gauss-Kronrod
    quadrature with extrapolation (handles the integrable endpoint singularity
    of W'^2 when 1/2 < b < 1), rejected unless its error estimate is below 1e-10.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if method == "auto":
        method = "closed" if isinstance(schedule, PowerSchedule) else "quadrature"
    if method == "closed":
        if not isinstance(schedule, PowerSchedule):
            raise InvalidSchedule("closed form only exists for the power family")
        return schedule.closed_integrals(t)
    out = []
    for integrand in (lambda s: float(schedule.W(s, t)) ** 2, lambda s: float(schedule.dW(s, t)) ** 2):
        with warnings.catch_warnings():
            # roundoff warnings near an endpoint singularity; the error estimate decides
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(integrand, 0.0, t, epsabs=1e-13, epsrel=1e-11, limit=500)
        if err > 1e-10 * max(1.0, abs(val)):
            raise InvalidSchedule(f"quadrature did not converge (error estimate {err:.2e})")
        out.append(val)
    return out[0], out[1]


# -- Li-Yau --------------------------------------------------------------------------


@dataclass
class LiYauSides:
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs


def _positive_flow(prop: Propagator, f: np.ndarray, t: float) -> np.ndarray:
    u = heat_apply(prop, f, t)
    if not np.all(u > 0):
        raise ValueError("P_t f is not strictly positive; need f >= 0, f != 0 and t > 0")
    return u


def liyau_sides(g: WeightedGraph, prop: Propagator, f: np.ndarray, t: float, n: float, K: float = 0.0,
                schedule=None) -> LiYauSides:
    """Both sides of the W-weighted Li-Yau estimate at every vertex.

    lhs = Gamma(sqrt u)/u and
    rhs = (1/2)(1 - 2K I0) Delta u/u + (n/2)(I1 + K^2 I0 - K), u = P_t f,
    where I0 = int W^2, I1 = int W'^2. The default schedule is W = 1 - s/t.
    ``f`` may be a column stack; each column is handled separately.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    schedule = PowerSchedule(1.0) if schedule is None else schedule
    I0, I1 = w_integrals(schedule, t)
    u = _positive_flow(prop, f, t)
    lhs = ops.gamma(g, np.sqrt(u)) / u
    rhs = 0.5 * (1.0 - 2.0 * K * I0) * ops.laplacian(g, u) / u + 0.5 * n * (I1 + K * K * I0 - K)
    return LiYauSides(lhs, rhs)


def classical_liyau_lhs(g: WeightedGraph, prop: Propagator, f: np.ndarray, t: float) -> np.ndarray:
    """Gamma(sqrt u)/u - (d/dt sqrt u)/sqrt u, with d/dt sqrt u = Delta u / (2 sqrt u)."""
    u = _positive_flow(prop, f, t)
    r = np.sqrt(u)
    dt_sqrt = ops.laplacian(g, u) / (2.0 * r)
    return ops.gamma(g, r) / u - dt_sqrt / r


def classical_liyau_residual(g: WeightedGraph, prop: Propagator, f: np.ndarray, t: float, n: float) -> np.ndarray:
    """n/(2t) - [Gamma(sqrt u)/u - (d/dt sqrt u)/sqrt u]."""
    return n / (2.0 * t) - classical_liyau_lhs(g, prop, f, t)


def sqrt_time_derivative_fd(prop: Propagator, f: np.ndarray, t: float, h: float) -> np.ndarray:
    """Central difference of sqrt(P_t f) in t (test aid)."""
    return (np.sqrt(heat_apply(prop, f, t + h)) - np.sqrt(heat_apply(prop, f, t - h))) / (2.0 * h)


def _source_matrix(g: WeightedGraph, sources: Sequence[str] | None):
    sources = list(g.vertices) if sources is None else list(sources)
    F = np.zeros((g.n, len(sources)))
    for c, y in enumerate(sources):
        F[g.index(y), c] = 1.0
    return sources, F


def liyau_check(g: WeightedGraph, prop: Propagator, n: float, K: float = 0.0, bs=(1.0,),
                t_grid=None, vertices=None, sources=None, certified: bool | None = True,
                tol: float = DEFAULT_TOL, graph_name: str = "", schedule_factory=PowerSchedule) -> ViolationReport:
    """The power-family Li-Yau inequality for f = delta_y, over a (t, b) grid."""
    t_grid = default_t_grid() if t_grid is None else t_grid
    vertices = list(g.vertices) if vertices is None else list(vertices)
    rows = [g.index(x) for x in vertices]
    sources, F = _source_matrix(g, sources)
    rep = ViolationReport("liyau", graph_name, n, K, tol=tol, certified=certified,
                          provenance={"graph_hash": g.content_hash()},
                          extra={"param": "b", "f": "delta_y"})
    for b in bs:
        sched = schedule_factory(b)
        for t in t_grid:
            if not isinstance(sched, PowerSchedule) or K > 0:
                w_validate(sched, t, K)
            sides = liyau_sides(g, prop, F, t, n, K, sched)
            rep.extend(vertices, t, b, sources, sides.lhs[rows], sides.rhs[rows])
    return rep


def general_liyau_check(g: WeightedGraph, prop: Propagator, f: np.ndarray, t: float, n: float, K: float,
                        schedule, tol: float = DEFAULT_TOL, certified: bool | None = True,
                        graph_name: str = "") -> ViolationReport:
    """The Li-Yau estimate for an arbitrary admissible W at one time t."""
    w_validate(schedule, t, K)
    sides = liyau_sides(g, prop, f, t, n, K, schedule)
    rep = ViolationReport("liyau_general", graph_name, n, K, tol=tol, certified=certified,
                          provenance={"graph_hash": g.content_hash()},
                          extra={"param": "schedule"})
    label = getattr(schedule, "label", None) or f"power:{getattr(schedule, 'b', '?')}"
    for i, x in enumerate(g.vertices):
        rep.add(x, t, label, "f", sides.lhs[i], sides.rhs[i])
    return rep


def classical_liyau_check(g: WeightedGraph, prop: Propagator, n: float, t_grid=None, vertices=None,
                          sources=None, certified: bool | None = True, tol: float = DEFAULT_TOL,
                          graph_name: str = "") -> ViolationReport:
    """Gamma(sqrt u)/u - (d/dt sqrt u)/sqrt u <= n/(2t) for u = P_t delta_y."""
    t_grid = default_t_grid() if t_grid is None else t_grid
    vertices = list(g.vertices) if vertices is None else list(vertices)
    rows = [g.index(x) for x in vertices]
    sources, F = _source_matrix(g, sources)
    rep = ViolationReport("liyau_classical", graph_name, n, 0.0, tol=tol, certified=certified,
                          provenance={"graph_hash": g.content_hash()},
                          extra={"param": "b", "f": "delta_y"})
    for t in t_grid:
        lhs = classical_liyau_lhs(g, prop, F, t)
        rep.extend(vertices, t, 1.0, sources, lhs[rows], n / (2.0 * t))
    return rep


def recheck_liyau_row(g: WeightedGraph, n: float, K: float, row: dict) -> float:
    """Recompute the margin of one stored grid row from scratch (fresh propagator)."""
    from .heat import propagator_build

    prop = propagator_build(g)
    f = g.delta_function(row["source"])
    i = g.index(row["vertex"])
    sides = liyau_sides(g, prop, f, row["t"], n, K, PowerSchedule(row["b"]))
    return float(sides.margin[i])


# -- Harnack and heat kernel bounds ------------------------------------------------------


def harnack_bound(g: WeightedGraph, x: str, z: str, t: float, s: float, n: float) -> float:
    """(s/t)^n exp(4 m_max d(x,z)^2 / (w_min (s - t)))."""
    if not 0 < t < s:
        raise ValueError("Harnack needs 0 < t < s")
    d = graph_distance(g, x, z)
    return (s / t) ** n * math.exp(4.0 * g.m_max * d * d / (g.omega_min * (s - t)))


def harnack_check(g: WeightedGraph, prop: Propagator, f: np.ndarray, x: str, z: str, t: float, s: float,
                  n: float) -> float:
    """bound * P_s f(z) - P_t f(x)."""
    bound = harnack_bound(g, x, z, t, s, n)
    return bound * heat_apply(prop, f, s)[g.index(z)] - heat_apply(prop, f, t)[g.index(x)]


def harnack_grid(g: WeightedGraph, prop: Propagator, n: float, pairs, sources=None,
                 certified: bool | None = True, tol: float = DEFAULT_TOL, graph_name: str = "") -> ViolationReport:
    """All (x, z) pairs and f = delta_y; rows are keyed ``x>z`` with param s."""
    sources, F = _source_matrix(g, sources)
    dist = np.array([bfs_distances(g, i) for i in range(g.n)], dtype=float)
    rep = ViolationReport("harnack", graph_name, n, 0.0, tol=tol, certified=certified,
                          provenance={"graph_hash": g.content_hash()},
                          extra={"param": "s", "f": "delta_y"})
    for t, s in pairs:
        if not 0 < t < s:
            raise ValueError("Harnack needs 0 < t < s")
        Pt, Ps = heat_apply(prop, F, t), heat_apply(prop, F, s)
        logB = n * math.log(s / t) + 4.0 * g.m_max * dist**2 / (g.omega_min * (s - t))
        for i, x in enumerate(g.vertices):
            for j, z in enumerate(g.vertices):
                bound = np.exp(logB[i, j])
                rhs = bound * Ps[j]
                lhs = Pt[i]
                for c, y in enumerate(sources):
                    rep.add(f"{x}>{z}", t, s, y, lhs[c], rhs[c])
    return rep


def kernel_constant(g: WeightedGraph, n: float) -> float:
    """C = 2^n exp(4 m_max / w_min)."""
    return 2.0**n * math.exp(4.0 * g.m_max / g.omega_min)


def ball_volume_real(g: WeightedGraph, i: int, r: float) -> float:
    """V(x, r) for real r: mass of {y : d(x, y) <= r}."""
    return float(g.measure[ball_indices(g, i, r)].sum())


def kernel_upper_check(g: WeightedGraph, prop: Propagator, t: float, x: str, y: str, n: float) -> float:
    """C / V(x, sqrt t) - p(t, x, y)."""
    if not t > 0:
        raise ValueError("t must be positive")
    i, j = g.index(x), g.index(y)
    p = heat_kernel_matrix(prop, t)[i, j]
    return kernel_constant(g, n) / ball_volume_real(g, i, math.sqrt(t)) - p


def kernel_grid(g: WeightedGraph, prop: Propagator, n: float, t_grid=None, certified: bool | None = True,
                tol: float = DEFAULT_TOL, graph_name: str = "") -> ViolationReport:
    t_grid = default_t_grid() if t_grid is None else t_grid
    C = kernel_constant(g, n)
    rep = ViolationReport("kernel_upper", graph_name, n, 0.0, tol=tol, certified=certified,
                          provenance={"graph_hash": g.content_hash()},
                          extra={"param": "C", "C": C})
    for t in t_grid:
        p = heat_kernel_matrix(prop, t)
        vols = np.array([ball_volume_real(g, i, math.sqrt(t)) for i in range(g.n)])
        rep.extend(list(g.vertices), t, C, list(g.vertices), p, (C / vols)[:, None])
    return rep


# -- spectrum and Cheng's bound -------------------------------------------------------------------


def spectral_bottom(g: WeightedGraph, boundary: Sequence[str] | None = None) -> float:
    """Bottom of the spectrum of -Delta on l^2_m.

    With ``boundary``, functions are forced to vanish there (Dirichlet
    condition) and interior vertices keep their full degree.
    """
    W = g.weight_matrix.toarray()
    np.fill_diagonal(W, 0.0)
    deg = W.sum(axis=1)
    if boundary is None:
        keep = np.arange(g.n)
    else:
        dead = {g.index(v) for v in boundary}
        keep = np.array([i for i in range(g.n) if i not in dead], dtype=int)
        if keep.size == 0:
            raise ValueError("Dirichlet problem has an empty interior")
    H = np.diag(deg[keep]) - W[np.ix_(keep, keep)]
    r = np.sqrt(g.measure[keep])
    H = H / np.outer(r, r)
    lam = float(np.linalg.eigvalsh(0.5 * (H + H.T))[0])
    return max(lam, 0.0) if boundary is None else lam


def dirichlet_sequence(g: WeightedGraph, center: str, radii: Sequence[int]) -> list[tuple[int, float]]:
    """Bottom of the Dirichlet spectrum on growing balls B(center, r)."""
    out = []
    i = g.index(center)
    for r in radii:
        inside = set(ball_indices(g, i, r).tolist())
        boundary = [g.vertices[j] for j in range(g.n) if j not in inside]
        out.append((int(r), spectral_bottom(g, boundary) if boundary else spectral_bottom(g)))
    return out


def cheng_check(g: WeightedGraph, n: float, K: float, center: str | None = None, radii: Sequence[int] = (),
                certified: bool | None = True, tol: float = DEFAULT_TOL, graph_name: str = "") -> ViolationReport:
    """lambda* <= K n / 2 under CDE'(n, -K), K > 0."""
    if not K > 0:
        raise ValueError("Cheng's bound needs K > 0")
    rep = ViolationReport("cheng", graph_name, n, K, tol=tol, certified=certified,
                          provenance={"graph_hash": g.content_hash()}, extra={"param": "mode"})
    rep.add("*", math.nan, "full", "-", spectral_bottom(g), K * n / 2.0)
    if center is not None and radii:
        seq = dirichlet_sequence(g, center, radii)
        lams = [lam for _, lam in seq]
        rep.extra["dirichlet"] = [[r, lam] for r, lam in seq]
        rep.extra["dirichlet_monotone"] = bool(all(b <= a + 1e-12 for a, b in zip(lams, lams[1:])))
    return rep


# -- the Phi machinery -----------------------------------------------------------------------------


def _check_s(t: float, s: float, eps: float) -> None:
    if not 0 < s < t:
        raise ValueError(f"s must lie in (0, t), got s={s}, t={t}")
    if not eps > 0:
        raise ValueError("eps must be positive")


def phi_evaluate(g: WeightedGraph, prop: Propagator, f: np.ndarray, t: float, s: float, eps: float) -> np.ndarray:
    """phi(s, .) = P_s Gamma(sqrt(P_{t-s} f + eps))."""
    _check_s(t, s, eps)
    u = heat_apply(prop, f, t - s) + eps
    return heat_apply(prop, ops.gamma(g, np.sqrt(u)), s)


def phi_derivative(g: WeightedGraph, prop: Propagator, f: np.ndarray, t: float, s: float, eps: float) -> np.ndarray:
    """d/ds phi = -2 P_s Gamma(sqrt u, Delta u/(2 sqrt u)) + Delta P_s Gamma(sqrt u)."""
    _check_s(t, s, eps)
    u = heat_apply(prop, f, t - s) + eps
    r = np.sqrt(u)
    first = heat_apply(prop, ops.gamma(g, r, ops.laplacian(g, u) / (2.0 * r)), s)
    second = ops.laplacian(g, heat_apply(prop, ops.gamma(g, r), s))
    return -2.0 * first + second


def phi_derivative_residual(g: WeightedGraph, prop: Propagator, f: np.ndarray, t: float, s: float, eps: float,
                            h: float) -> float:
    """max |central difference of phi in s - analytic derivative|."""
    if not (0 < s - h and s + h < t):
        raise ValueError("s +- h must stay inside (0, t)")
    fd = (phi_evaluate(g, prop, f, t, s + h, eps) - phi_evaluate(g, prop, f, t, s - h, eps)) / (2.0 * h)
    return float(np.abs(fd - phi_derivative(g, prop, f, t, s, eps)).max())


def differential_inequality_check(g: WeightedGraph, prop: Propagator, f: np.ndarray, t: float, n: float,
                                  K: float, b: float, eps: float, s_grid=None, h: float | None = None,
                                  tol: float = 1e-5, certified: bool | None = True, graph_name: str = "",
                                  source: str = "f") -> ViolationReport:
    """Check (alpha phi)' >= (alpha' + 2 alpha K - 4 alpha gamma/n) phi
    + (2 alpha gamma/n) Delta P_t f - (2 alpha gamma^2/n)(P_t f + eps) on an s-grid.

    alpha = W^2 with W = (1 - s/t)^b and gamma chosen so the phi coefficient
    vanishes; the s-derivative is a central difference with step ``h``.
    Rows store lhs = right-hand expression, rhs = derivative.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    s_grid = np.linspace(0.0, t, 22)[1:-1] if s_grid is None else np.asarray(s_grid)
    h = 1e-4 * t if h is None else h
    sched = PowerSchedule(b)
    inv_n = 1.0 / n

    def alpha(s):
        return float(sched.W(s, t)) ** 2

    u_t = heat_apply(prop, f, t)
    lap_t = ops.laplacian(g, u_t)
    rep = ViolationReport("differential_inequality", graph_name, n, K, tol=tol, certified=certified,
                          provenance={"graph_hash": g.content_hash()},
                          extra={"param": "s", "b": b, "eps": eps, "h": h})
    for s in s_grid:
        W, dW = float(sched.W(s, t)), float(sched.dW(s, t))
        a = W * W
        da = 2.0 * W * dW
        gam = 0.5 * n * (dW / W + K)
        if gam > 0:
            raise InvalidSchedule(f"gamma(s) = {gam} > 0 at s = {s}; needs K <= b/(t - s)")
        phi = phi_evaluate(g, prop, f, t, s, eps)
        deriv = (alpha(s + h) * phi_evaluate(g, prop, f, t, s + h, eps)
                 - alpha(s - h) * phi_evaluate(g, prop, f, t, s - h, eps)) / (2.0 * h)
        coeff = da + 2.0 * a * K - 4.0 * a * gam * inv_n
        bound = coeff * phi + 2.0 * a * gam * inv_n * lap_t - 2.0 * a * gam * gam * inv_n * (u_t + eps)
        for i, x in enumerate(g.vertices):
            rep.add(x, s, s, source, bound[i], deriv[i])
    return rep
