import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from liyaulab import operators as ops
from liyaulab.curvature import (
    LocalPatch, cd_curvature_at, cd_dimension_hint, cd_form_matrix, cd_holds_at, cde_deficit,
    cde_search_counterexample, certify_cde_dimension, clear_cache, curvature_sweep,
)
from liyaulab.families import FamilySpec, generate, random_graph
from liyaulab.graph import WeightedGraph

from conftest import graphs

INF = math.inf


def _k2_cde_threshold():
    """Smallest n with CDE'(n, 0) on K2, from the closed form of the ratio.

    With f = (1, e^a): Gamma~_2 / Gamma - (1/n) f^2 (Delta log f)^2 / Gamma
    = (q + 1)^2 / (2q) - (2/n) a^2 / (q - 1)^2, q = e^a.
    """
    def neg(a):
        q = math.exp(a)
        return -4.0 * q * a * a / ((q - 1.0) ** 2 * (q + 1.0) ** 2)
    res = minimize_scalar(neg, bounds=(-10.0, -1e-3), method="bounded", options={"xatol": 1e-12})
    return -res.fun


@pytest.mark.parametrize("n, expected", [(1.0, 0.0), (2.0, 1.0), (10.0, 1.8), (INF, 2.0)])
def test_k2_cd_curvature(k2, n, expected):
    assert cd_curvature_at(k2, "0", n) == pytest.approx(expected, abs=1e-8)


def test_k2_cd_dimension_hint(k2):
    assert cd_dimension_hint(k2, "0") == pytest.approx(1.0, rel=1e-8)


def test_star_center_fails_cd_infinity():
    g = generate(FamilySpec("star", (6,)))
    assert cd_curvature_at(g, "0", INF) == pytest.approx(-1.0, abs=1e-10)
    assert cd_dimension_hint(g, "0") == INF


def test_vertex_transitive_families_have_equal_records():
    for spec in (FamilySpec("cycle", (7,)), FamilySpec("complete", (4,))):
        g = generate(spec)
        vals = [cd_curvature_at(g, x, 3.0) for x in g.vertices]
        assert max(vals) - min(vals) < 1e-12
        rep = curvature_sweep(g, 3.0, 0.0, starts=4)
        assert len({round(r.cde_best_K_upper, 9) for r in rep.records}) == 1


def _gauged_patch_function(g, x, rng):
    patch = LocalPatch(g, x)
    f = np.zeros(g.n)
    f[patch.global_index] = rng.normal(size=patch.size)
    return f


@given(graphs(n_max=9), st.integers(0, 2**31), st.floats(0.5, 20.0), st.floats(-2.0, 2.0))
@settings(max_examples=25)
def test_cd_matrix_matches_operators(g, seed, n, K):
    rng = np.random.default_rng(seed)
    x = g.vertices[int(rng.integers(g.n))]
    M, ids = cd_form_matrix(g, x, n, K)
    f = _gauged_patch_function(g, x, rng)
    i = g.index(x)
    direct = ops.gamma2(g, f)[i] - ops.laplacian(g, f)[i] ** 2 / n - K * ops.gamma(g, f)[i]
    local = np.array([f[g.index(v)] for v in ids])
    assert local @ M @ local == pytest.approx(direct, rel=1e-9, abs=1e-9 * (1 + abs(direct)))


def test_cd_curvature_against_brute_force(rng):
    """Random directions never beat the generalized eigenvalue, and the decision flips across it."""
    for _ in range(4):
        g = random_graph(rng, n_max=8, w_range=(0.5, 2.0), m_range=(0.5, 2.0))
        x = g.vertices[0]
        for n in (2.0, 5.0, INF):
            Kstar = cd_curvature_at(g, x, n)
            if not math.isfinite(Kstar):
                continue
            patch = LocalPatch(g, x)
            Nn, Gx = patch.cd_forms(n)
            F = rng.normal(size=(100_000, patch.size))
            num = np.einsum("ij,jk,ik->i", F, Nn, F)
            den = np.einsum("ij,jk,ik->i", F, Gx, F)
            keep = den > 1e-9
            brute = (num[keep] / den[keep]).min()
            assert brute >= Kstar - 1e-8
            assert brute <= Kstar + 0.5 * (1 + abs(Kstar))
            assert cd_holds_at(g, x, n, Kstar - 1e-6).holds
            assert not cd_holds_at(g, x, n, Kstar + 1e-4).holds


def test_curvature_is_local():
    """Changing the graph outside B_2(x) does not change anything at x."""
    base = [("a", "b", 1.0), ("b", "c", 2.0), ("c", "d", 0.5), ("d", "e", 3.0)]
    g1 = WeightedGraph.from_edges("abcde", base)
    g2 = WeightedGraph.from_edges("abcdef", base + [("e", "f", 7.0), ("d", "f", 1.0)], measure=[1, 1, 1, 5, 2, 3])
    for n in (2.0, INF):
        assert cd_curvature_at(g1, "a", n) == pytest.approx(cd_curvature_at(g2, "a", n), abs=1e-12)


def test_cde_gradient_against_finite_differences(rng):
    for _ in range(5):
        g = random_graph(rng, n_max=10, w_range=(0.5, 2.0), m_range=(0.5, 2.0))
        patch = LocalPatch(g, g.vertices[0])
        v = rng.normal(size=patch.size)
        for n in (3.0, INF):
            A, G, dA, dG = patch.cde_terms(v, n)
            h = 1e-6
            for j in range(patch.size):
                e = np.zeros(patch.size)
                e[j] = h
                Ap, Gp = patch.cde_terms(v + e, n, grad=False)
                Am, Gm = patch.cde_terms(v - e, n, grad=False)
                assert (Ap - Am) / (2 * h) == pytest.approx(dA[j], rel=1e-5, abs=1e-6 * (1 + abs(A)))
                assert (Gp - Gm) / (2 * h) == pytest.approx(dG[j], rel=1e-5, abs=1e-6 * (1 + abs(G)))


def test_patch_terms_equal_full_graph_deficit(rng):
    for _ in range(10):
        g = random_graph(rng, n_max=12)
        x = g.vertices[int(rng.integers(g.n))]
        patch = LocalPatch(g, x)
        v = rng.normal(size=patch.size)
        f = np.ones(g.n)
        f[patch.global_index] = np.exp(v)
        for n in (1.5, INF):
            A, G = patch.cde_terms(v, n, grad=False)
            K = 0.3
            assert A - K * G == pytest.approx(cde_deficit(g, x, f, n, K), rel=1e-9, abs=1e-9)


def test_k2_certified_dimension_matches_closed_form(k2):
    nstar = _k2_cde_threshold()
    assert nstar == pytest.approx(2.2643271274, abs=1e-9)
    n, ok = certify_cde_dimension(k2)
    assert ok and nstar <= n <= nstar * 1.001


def test_k2_witness_below_threshold_and_none_above(k2):
    clear_cache()
    w = cde_search_counterexample(k2, "0", 2.0, 0.0, starts=16)
    assert w is not None and w.deficit < -1e-7
    assert w.recheck(k2) == pytest.approx(w.deficit, rel=1e-12)
    f = w.as_array(k2)
    assert ops.gamma(k2, f)[0] == pytest.approx(1.0, rel=1e-12)
    assert cde_search_counterexample(k2, "0", 3.0, 0.0, starts=16) is None


@pytest.mark.parametrize("n", [2.3, 2.5, 4.0])
def test_k2_no_witness_above_threshold_random_perturbations(k2, n, rng):
    for _ in range(2000):
        f = np.exp(rng.uniform(-6, 6, size=2))
        assert cde_deficit(k2, "0", f, n, 0.0) >= -1e-9


def test_witnesses_are_sound_on_random_graphs(rng):
    """Any returned witness really violates the inequality when recomputed."""
    found = 0
    for _ in range(6):
        g = random_graph(rng, n_max=8)
        x = g.vertices[0]
        w = cde_search_counterexample(g, x, 1.0, 0.5, starts=4)
        if w is not None:
            found += 1
            assert w.recheck(g) < -1e-7
            assert np.all(w.as_array(g) > 0)
    assert found > 0


def test_cde_search_is_deterministic(k2):
    a = curvature_sweep(k2, 2.0, 0.0, starts=8, seed=3).to_json()
    clear_cache()
    b = curvature_sweep(k2, 2.0, 0.0, starts=8, seed=3).to_json()
    assert a == b


def test_isomorphic_patches_share_results():
    g = generate(FamilySpec("lattice_box", (2, 5)))
    clear_cache()
    w1 = cde_search_counterexample(g, "2,2", 3.0, 0.0, starts=4)
    w2 = cde_search_counterexample(g, "1,1", 3.0, 0.0, starts=4)
    for w, x in ((w1, "2,2"), (w2, "1,1")):
        if w is not None:
            assert w.vertex == x and w.recheck(g) < -1e-7


def test_invalid_dimension(k2):
    with pytest.raises(ValueError):
        cd_curvature_at(k2, "0", 0.0)
    with pytest.raises(ValueError):
        cde_search_counterexample(k2, "0", -1.0, 0.0)


def test_k2_cd_decisions(k2):
    d = cd_holds_at(k2, "0", 2.0, 1.0)
    assert d.holds and abs(d.min_eigenvalue) < 1e-12
    assert not cd_holds_at(k2, "0", 2.0, 1.1).holds


def test_cd_holds_for_very_negative_k(rng):
    g = random_graph(rng, n_max=10)
    for x in g.vertices[:3]:
        if math.isfinite(cd_curvature_at(g, x, INF)):
            assert cd_holds_at(g, x, INF, -1e6).holds


def test_cde_deficit_constants_and_scaling(rng):
    g = random_graph(rng, n_max=10)
    x = g.vertices[0]
    assert cde_deficit(g, x, np.full(g.n, 2.5), 3.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    f = np.exp(rng.normal(size=g.n))
    d = cde_deficit(g, x, f, 3.0, 0.5)
    assert cde_deficit(g, x, 4.0 * f, 3.0, 0.5) == pytest.approx(16.0 * d, rel=1e-9, abs=1e-12)


def test_k2_cde_deficit_symbolic(k2):
    # f = (1, 2) on K2 at x = 0: Gamma~_2 = 9/8, Gamma = 1/2, (Delta log f)^2 = log(2)^2
    f = np.array([1.0, 2.0])
    expected = 9 / 8 - math.log(2) ** 2 / 2.0 - 0.3 * 0.5
    assert cde_deficit(k2, "0", f, 2.0, 0.3) == pytest.approx(expected, rel=1e-14)


def test_k2_cde_above_cd_ceiling_has_witness(k2):
    w = cde_search_counterexample(k2, "0", 2.0, 2.5, starts=8)
    assert w is not None and w.recheck(k2) < -1e-7 / 2


def test_cde_upper_bounded_by_cd(rng):
    from liyaulab.curvature import cde_curvature_upper
    for _ in range(4):
        g = random_graph(rng, n_max=8, w_range=(0.5, 2.0), m_range=(0.5, 2.0))
        x = g.vertices[0]
        for n in (1.0, 3.0, 10.0, INF):
            assert cde_curvature_upper(g, x, n, starts=6) <= cd_curvature_at(g, x, n) + 1e-6


@pytest.mark.parametrize("spec, x", [(FamilySpec("complete", (2,)), "0"), (FamilySpec("complete", (5,)), "0"),
                                     (FamilySpec("lattice_box", (2, 5)), "2,2")])
def test_cde_upper_monotone_in_n(spec, x):
    # only meaningful where the search converges; on graphs whose CDE' curvature is
    # unbounded below, the value reached depends on where the search stops
    from liyaulab.curvature import cde_curvature_upper
    g = generate(spec)
    vals = [cde_curvature_upper(g, x, n, starts=8) for n in (1.0, 3.0, 10.0, INF)]
    assert vals == sorted(vals)


def test_more_starts_never_increase_the_bound(rng):
    from liyaulab.curvature import cde_curvature_upper
    g = random_graph(rng, n_max=8)
    x = g.vertices[1]
    vals = [cde_curvature_upper(g, x, 2.0, starts=s) for s in (2, 6, 12)]
    assert vals[0] >= vals[1] >= vals[2]


def test_k5_sweep_identical_records():
    g = generate(FamilySpec("complete", (5,)))
    rep = curvature_sweep(g, 3.0, 0.0, starts=4)
    rows = {(r.cd_K_star.__round__(12), round(r.cde_best_K_upper, 9), r.verdict) for r in rep.records}
    assert len(rows) == 1
    assert rep.to_csv().splitlines()[0] == "vertex,cd_K_star,cde_best_K_upper,verdict"
