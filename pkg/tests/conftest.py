import numpy as np
import pytest
from hypothesis import settings, strategies as st

from liyaulab.families import FamilySpec, generate, random_graph
from liyaulab.graph import WeightedGraph

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@st.composite
def graphs(draw, n_max=12, w_range=(0.1, 10.0), m_range=(0.1, 10.0), loops=True):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_graph(np.random.default_rng(seed), n_max=n_max, w_range=w_range, m_range=m_range, loops=loops)


@st.composite
def graph_and_function(draw, n_max=12, positive=False):
    g = draw(graphs(n_max=n_max))
    lo, hi = (0.05, 5.0) if positive else (-5.0, 5.0)
    vals = draw(st.lists(st.floats(lo, hi), min_size=g.n, max_size=g.n))
    return g, np.array(vals)


@pytest.fixture
def k2():
    return generate(FamilySpec("complete", (2,)))


@pytest.fixture
def p3():
    return WeightedGraph.from_edges("abc", [("a", "b", 1.0), ("b", "c", 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ----------------------------------------------------------------

ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


@pytest.fixture(scope="session")
def acceptance():
    return ACCEPTANCE


def acceptance_lines() -> list[str]:
    lines = []
    for key in sorted(ACCEPTANCE, key=lambda k: int(k)):
        parts = ACCEPTANCE[key]
        ok = all(p for p, _ in parts)
        lines.append(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  " + "; ".join(d for _, d in parts))
    return lines


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines():
            terminalreporter.write_line(line)
