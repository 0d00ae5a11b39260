import numpy as np
import pytest

from liyaulab.families import FamilySpec, generate, interior, liyau_corpus, random_graph
from liyaulab.graph import dumps, validate


@pytest.mark.parametrize("spec, nv, ne", [
    (FamilySpec("complete", (2,)), 2, 1),
    (FamilySpec("complete", (5,)), 5, 10),
    (FamilySpec("path", (4,)), 4, 3),
    (FamilySpec("cycle", (6,)), 6, 6),
    (FamilySpec("star", (6,)), 6, 5),
    (FamilySpec("lattice_box", (2, 3)), 9, 12),
    (FamilySpec("lattice_box", (3, 2)), 8, 12),
    (FamilySpec("regular_tree", (3, 2)), 10, 9),
])
def test_sizes(spec, nv, ne):
    g = generate(spec)
    assert (g.n, len(g.edges)) == (nv, ne)
    validate(g)


def test_generation_is_deterministic():
    spec = FamilySpec("regular_tree", (3, 3), weight=2.0, measure="degree")
    assert dumps(generate(spec)) == dumps(generate(spec))


def test_tree_internal_degrees():
    g = generate(FamilySpec("regular_tree", (3, 3)))
    deg = dict(zip(g.vertices, g.degree))
    assert deg["r"] == 3 and deg["r.0"] == 3 and deg["r.0.1.1"] == 1


def test_measure_schemes():
    g = generate(FamilySpec("star", (4,), measure="degree"))
    assert g.measure.tolist() == [3.0, 1.0, 1.0, 1.0]
    g = generate(FamilySpec("path", (3,), measure={"0": 2.0, "1": 1.0, "2": 0.5}))
    assert g.measure.tolist() == [2.0, 1.0, 0.5]


@pytest.mark.parametrize("spec", [
    FamilySpec("cycle", (2,)), FamilySpec("lattice_box", (2,)), FamilySpec("nope", (3,)),
    FamilySpec("path", (3,), weight=0.0), FamilySpec("regular_tree", (0, 2)),
])
def test_invalid_specs(spec):
    with pytest.raises(ValueError):
        generate(spec)


def test_interior_of_lattice_box():
    spec = FamilySpec("lattice_box", (2, 5))
    assert len(interior(generate(spec), spec)) == 9


def test_corpus():
    c = liyau_corpus()
    assert list(c.graphs) == ["complete(2)", "complete(5)", "lattice_box(2,5)", "star(6)"]


def test_random_graphs_valid_and_seeded():
    a = random_graph(np.random.default_rng(1))
    b = random_graph(np.random.default_rng(1))
    assert a == b
    validate(a)
