"""Acceptance criteria 1-11, one summary line each (printed at the end of the pytest run).

Run alone with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from liyaulab import operators as ops
from liyaulab.curvature import cd_curvature_at, cde_search_counterexample
from liyaulab.families import FamilySpec, generate, liyau_corpus, random_graph
from liyaulab.heat import heat_kernel, propagator_build
from liyaulab.identities import green_relative, polarization_relative, semigroup_residuals, tilde_relative
from liyaulab.inequalities import (
    DEFAULT_BS, GeneralSchedule, PowerSchedule, cheng_check, classical_liyau_check,
    differential_inequality_check, harnack_grid, kernel_grid, liyau_check, phi_derivative_residual,
    recheck_liyau_row, w_integrals,
)
from liyaulab.pipeline import certify_corpus

SEED = 20240601


def record(log, key, ok, detail):
    log.setdefault(key, []).append((bool(ok), detail))
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="module")
def certified():
    t0 = time.perf_counter()
    entries = certify_corpus(liyau_corpus(), K=0.0, starts=64, seed=0)
    return entries, time.perf_counter() - t0


def _names(entries):
    return ", ".join(f"{e.name}: n={e.n:.4g}" if e.certified else f"{e.name}: uncertified" for e in entries)


# -- 1 ---------------------------------------------------------------------------------


def test_criterion_1_exact_identities(acceptance):
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    worst = {"green": 0.0, "polarization": 0.0, "tilde": 0.0}
    for _ in range(100):
        g = random_graph(rng, n_max=40, w_range=(0.1, 10.0), m_range=(0.1, 10.0))
        f, h = rng.normal(size=g.n), rng.normal(size=g.n)
        u = rng.uniform(0.1, 10.0, size=g.n)
        worst["green"] = max(worst["green"], green_relative(g, f, h))
        worst["polarization"] = max(worst["polarization"], polarization_relative(g, f))
        worst["tilde"] = max(worst["tilde"], tilde_relative(g, u))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-9 and elapsed < 10
    record(acceptance, "1", ok, "max relative residuals " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
           + f"; {elapsed:.2f}s")
    assert ok


# -- 2 ---------------------------------------------------------------------------------


def test_criterion_2_semigroup_axioms(acceptance):
    rng = np.random.default_rng(SEED + 1)
    t0 = time.perf_counter()
    worst: dict[str, float] = {}
    for _ in range(100):
        g = random_graph(rng, n_max=40, w_range=(0.1, 10.0), m_range=(0.1, 10.0))
        prop = propagator_build(g)
        f = rng.normal(size=g.n)
        for t in (0.01, 0.1, 1.0, 10.0):
            for k, v in semigroup_residuals(prop, t, f).items():
                worst[k] = max(worst.get(k, 0.0), v)
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-8 and elapsed < 30
    record(acceptance, "2", ok, f"max residual {max(worst.values()):.1e} "
           f"({max(worst, key=worst.get)}) over 100 graphs x 4 times; {elapsed:.2f}s")
    assert ok


# -- 3 ---------------------------------------------------------------------------------


def test_criterion_3_k2_closed_forms(acceptance):
    g = generate(FamilySpec("complete", (2,)))
    prop = propagator_build(g)
    kerr = max(abs(heat_kernel(prop, t, "0", "1").p - 0.5 * (1 - math.exp(-2 * t))) for t in (0.1, 0.5, 1, 5))
    cerr = max(abs(cd_curvature_at(g, "0", n) - (2.0 if math.isinf(n) else 2 * (1 - 1 / n)))
               for n in (1.0, 2.0, 10.0, math.inf))
    ok = kerr <= 1e-10 and cerr <= 1e-8
    record(acceptance, "3", ok, f"kernel error {kerr:.1e}, CD curvature error {cerr:.1e}")
    assert ok


# -- 4 ---------------------------------------------------------------------------------


def test_criterion_4_classical_liyau(certified, acceptance):
    entries, cert_time = certified
    t0 = time.perf_counter()
    mins = {}
    for e in entries:
        rep = classical_liyau_check(e.graph, e.prop, e.usable_n, vertices=e.vertices, certified=e.certified)
        mins[e.name] = (rep.min_margin, rep.verdict)
    elapsed = cert_time + time.perf_counter() - t0
    ok = all(m >= -1e-7 for m, _ in mins.values()) and elapsed < 60
    record(acceptance, "4", ok, f"certified {_names(entries)}; min margins "
           + ", ".join(f"{k}={m:.3g} [{v}]" for k, (m, v) in mins.items()) + f"; {elapsed:.1f}s incl. certification")
    assert ok


@pytest.mark.xfail(strict=True, reason="unattainable: certified n/4 still exceeds the n any corpus graph "
                                       "needs for the classical inequality (see README, acceptance notes)")
def test_criterion_4_falsification_control(certified, acceptance):
    entries, _ = certified
    fails = []
    detail = []
    for e in entries:
        n4 = e.usable_n / 4
        rep = classical_liyau_check(e.graph, e.prop, n4, vertices=e.vertices, certified=e.certified)
        detail.append(f"{e.name}: n/4={n4:.3g} -> {rep.verdict}")
        if rep.verdict == "fail":
            w = rep.witness
            again = recheck_liyau_row(e.graph, n4, 0.0, dict(w, b=1.0))
            fails.append(again < -rep.tol / 2)
    ok = any(fails)
    record(acceptance, "4", ok, "falsification control (n shrunk by 4): " + ", ".join(detail))
    assert ok


# -- 5 ---------------------------------------------------------------------------------


def test_criterion_5_liyau_family(certified, acceptance):
    entries, _ = certified
    parts, ok = [], True
    for e in entries:
        r0 = liyau_check(e.graph, e.prop, e.usable_n, 0.0, DEFAULT_BS, vertices=e.vertices, certified=e.certified)
        # CDE'(n, 0) implies CDE'(n, -1); the search at K = -1 confirms it independently
        cert_neg = e.certified and all(
            cde_search_counterexample(e.graph, x, e.n, -1.0, starts=64) is None for x in e.vertices)
        r1 = liyau_check(e.graph, e.prop, e.usable_n if cert_neg else math.inf, -1.0, DEFAULT_BS,
                         vertices=e.vertices, certified=cert_neg, tol=1e-6)
        ok &= r0.min_margin >= -1e-7 and r1.min_margin >= -1e-6
        parts.append(f"{e.name}: K=0 {r0.min_margin:.3g} [{r0.verdict}], K=-1 {r1.min_margin:.3g} [{r1.verdict}]")
    record(acceptance, "5", ok, "; ".join(parts))
    assert ok


# -- 6 ---------------------------------------------------------------------------------


def test_criterion_6_w_integrals(acceptance):
    ec = eq = 0.0
    for b in (0.75, 1.0, 2.0, 5.0):
        for t in (0.5, 1.0, 10.0):
            exact = (t / (2 * b + 1), b * b / ((2 * b - 1) * t))
            sched = PowerSchedule(b)
            closed = w_integrals(sched, t)
            quad = w_integrals(GeneralSchedule(sched.W, sched.dW), t)
            ec = max(ec, *(abs(a - c) for a, c in zip(closed, exact)))
            eq = max(eq, *(abs(a - c) for a, c in zip(quad, exact)))
    ok = ec <= 1e-10 and eq <= 1e-8
    record(acceptance, "6", ok, f"closed-form error {ec:.1e}, quadrature error {eq:.1e}")
    assert ok


# -- 7 ---------------------------------------------------------------------------------


def test_criterion_7_harnack_and_kernel(certified, acceptance):
    entries, _ = certified
    parts, ok = [], True
    for e in entries:
        h = harnack_grid(e.graph, e.prop, e.usable_n, [(0.5, 1.0), (1.0, 2.0), (0.1, 5.0)], certified=e.certified)
        k = kernel_grid(e.graph, e.prop, e.usable_n, certified=e.certified)
        ok &= h.min_margin >= 0 and k.min_margin >= 0
        parts.append(f"{e.name}: harnack {h.min_margin:.3g}, kernel {k.min_margin:.3g} [{h.verdict}/{k.verdict}]")
    record(acceptance, "7", ok, "; ".join(parts))
    assert ok


# -- 8 ---------------------------------------------------------------------------------


def test_criterion_8_phi_machinery(acceptance):
    rng = np.random.default_rng(SEED + 8)
    ratios = []
    for _ in range(10):
        g = random_graph(rng, n_max=12, w_range=(0.5, 2.0), m_range=(0.5, 2.0))
        prop = propagator_build(g)
        f = rng.uniform(0.0, 1.0, size=g.n)
        r1 = phi_derivative_residual(g, prop, f, 1.0, 0.5, 0.1, 1e-2)
        r2 = phi_derivative_residual(g, prop, f, 1.0, 0.5, 0.1, 5e-3)
        ratios.append(r2 / r1)
    margins = {}
    for spec in (FamilySpec("complete", (2,)), FamilySpec("lattice_box", (2, 4))):
        g = generate(spec)
        (e,) = certify_corpus(_single(spec, g), K=0.0)
        margins[spec.label()] = min(
            differential_inequality_check(g, e.prop, g.delta_function(y), 1.0, e.n, 0.0, 1.0, 0.1).min_margin
            for y in g.vertices)
    ok = all(0.2 <= r <= 0.3 for r in ratios) and all(m >= -1e-5 for m in margins.values())
    record(acceptance, "8", ok, f"h-halving ratios in [{min(ratios):.4f}, {max(ratios):.4f}]; differential "
           "inequality min margins " + ", ".join(f"{k}={v:.3g}" for k, v in margins.items()))
    assert ok


def _single(spec, g):
    from liyaulab.families import Corpus
    c = Corpus()
    c.graphs[spec.label()] = g
    c.check_vertices[spec.label()] = list(g.vertices)
    return c


# -- 9 ---------------------------------------------------------------------------------


def test_criterion_9_cheng(acceptance):
    corpus = liyau_corpus()
    g4 = generate(FamilySpec("lattice_box", (2, 4)))
    corpus.graphs["lattice_box(2,4)"] = g4
    corpus.check_vertices["lattice_box(2,4)"] = list(g4.vertices)
    parts, ok, checked = [], True, 0
    for K in (1.0, 2.0):
        for e in certify_corpus(corpus, K=-K):
            if not e.certified:
                parts.append(f"{e.name} K={K:g}: CDE'(n,-K) not certifiable, skipped")
                continue
            rep = cheng_check(e.graph, e.n, K)
            lam = rep.rows[0][4]
            ok &= rep.verdict == "pass" and abs(lam) < 1e-10
            checked += 1
    g9 = generate(FamilySpec("lattice_box", (2, 9)))
    seq = cheng_check(g9, 1.0, 1.0, "4,4", [1, 2, 3, 4]).extra
    lams = [lam for _, lam in seq["dirichlet"]]
    ok &= seq["dirichlet_monotone"] and checked > 0
    record(acceptance, "9", ok, f"{checked} certified (graph, K) pairs pass with lambda*=0; "
           f"Dirichlet sequence on lattice_box(2,9) radii 1..4: {', '.join(f'{x:.4f}' for x in lams)}; "
           + "; ".join(parts))
    assert ok


# -- 10 --------------------------------------------------------------------------------


CLI_FAILS = [
    ["liyau", "-g", "complete:2", "--n", "0.1"],
    ["liyau", "-g", "lattice_box:2,5", "--vertices", "interior", "--n", "0.5"],
    ["harnack", "-g", "complete:5", "--n", "0.01"],
    ["curvature", "-g", "complete:2", "--n", "2"],
    ["curvature", "-g", "star:6", "--n", "100"],
]


def test_criterion_10_witness_soundness(tmp_path, acceptance):
    checked, bad = 0, []
    for k, argv in enumerate(CLI_FAILS):
        out = tmp_path / f"r{k}.json"
        run = subprocess.run([sys.executable, "-m", "liyaulab", *argv, "--seed", "7", "--starts", "16",
                              "--out", str(out)], capture_output=True, text=True)
        assert run.returncode == 1, (argv, run.stderr)
        code = ("import json, sys; from liyaulab.cli import recheck_witness; "
                "print(json.dumps(recheck_witness(json.load(open(sys.argv[1])))))")
        fresh = subprocess.run([sys.executable, "-c", code, str(out)], capture_output=True, text=True, check=True)
        values = json.loads(fresh.stdout)
        tol = json.loads(out.read_text())["config"]["tol"]
        if not values or any(v >= -tol / 2 for v in values):
            bad.append(" ".join(argv))
        checked += len(values)
    ok = not bad and checked >= len(CLI_FAILS)
    record(acceptance, "10", ok, f"{checked} stored witnesses from {len(CLI_FAILS)} failing CLI runs recomputed "
           "in a fresh process below -tol/2" + (f"; unsound: {bad}" if bad else ""))
    assert ok


# -- 11 --------------------------------------------------------------------------------


def test_criterion_11_quotient_and_embedding_bounds(acceptance):
    rng = np.random.default_rng(SEED + 11)
    worst_q = worst_e = -math.inf
    for _ in range(100):
        g = random_graph(rng, n_max=30)
        B1, B2 = rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0)
        f = rng.uniform(-B1, B1, size=g.n)
        h = rng.choice([-1.0, 1.0], size=g.n) * rng.uniform(B2, 3 * B2, size=g.n)
        rhs = ops.quotient_gradient_bound(g, f, h, B1, B2)
        worst_q = max(worst_q, float(((ops.gamma(g, f / h) - rhs) / np.maximum(1.0, rhs)).max()))
    for _ in range(100):
        g = random_graph(rng, n_max=30)
        f = rng.normal(size=g.n)
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        q = float(rng.choice([p + 0.5, p + 4.0, math.inf]))
        C = ops.embedding_constant(float(g.measure.min()), p, q)
        lhs, rhs = ops.lp_norm(g, f, q), C * ops.lp_norm(g, f, p)
        worst_e = max(worst_e, (lhs - rhs) / max(1.0, rhs))
    ok = worst_q <= 1e-12 and worst_e <= 1e-12
    record(acceptance, "11", ok, f"max scaled excess: quotient bound {worst_q:.2e}, embedding {worst_e:.2e}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
