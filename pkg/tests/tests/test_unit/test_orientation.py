import itertools
import pathlib

import pytest

from sepgraph import orientation as orient
from sepgraph.admissibility import (
    Symbol,
    enumerate_paths,
    is_cycle,
    path_from_literal,
)
from sepgraph.condition_n import check_condition_n, local_orientation
from sepgraph.decomposition import decompose
from sepgraph.dynamics import RulePattern, positive_ray, seeded_choice
from sepgraph.graph_core import (
    PreconditionError,
    SgrFormatError,
    quotient_graph,
    read_sgr,
)
from sepgraph.orientation import EdgeType, Orientation

sgr_dir = pathlib.Path(__file__).parent.parent.parent / "data" / "sgr"

POSITIVE = {"r7_3", "g11_3", "b2_1", "g12_3", "r8_3", "b6_1"}


def load(name):
    return read_sgr(sgr_dir / f"{name}.sgr")


@pytest.fixture
def branching_subgraph():
    return decompose(load("running_example")).branching_subgraph


def test_classify_edges(branching_subgraph):
    types = orient.classify_edges(branching_subgraph)
    assert len(types) == 17
    assert types["b2_3"] is EdgeType.T2
    assert types["g1_10"] is EdgeType.T3A
    assert types["b6_1"] is EdgeType.T3B
    others = set(types) - {"b2_3", "g1_10", "b6_1"}
    assert all(types[e] is EdgeType.T1 for e in others)


def test_classify_needs_branching_subgraph():
    with pytest.raises(PreconditionError):
        orient.classify_edges(load("running_example"))


def test_synthesize_orientation(branching_subgraph):
    o = orient.synthesize_orientation(branching_subgraph)
    assert o.kind == "proper"
    assert o.positive_edges == POSITIVE
    assert o.negative_edges == set(branching_subgraph.edge_map) - POSITIVE
    check = orient.verify_orientation(branching_subgraph, o.signs)
    assert check.kind == "proper"
    assert check.violations == {}
    assert check.cases["u3"] == "in-group"
    assert check.cases["u2"] == "one-out"


def test_cycle_signs_agree_with_synthesis(branching_subgraph):
    o = orient.synthesize_orientation(branching_subgraph)
    local = local_orientation(branching_subgraph, "u3")
    cycle = (Symbol("b7_3a", -1), Symbol("r7_3", 1))
    induced = orient.orientation_from_cycle(branching_subgraph, local, cycle)
    assert induced == {"b7_3a": -1, "r7_3": 1}
    assert all(o.sign(e) == s for e, s in induced.items())
    assert o.is_positive(Symbol("b7_3a", -1))
    assert not o.is_positive(Symbol("r7_3", -1))


def test_synthesis_fails_without_condition_n():
    with pytest.raises(PreconditionError):
        orient.synthesize_orientation(load("emn22"))


def test_local_sign(branching_subgraph):
    local = local_orientation(branching_subgraph, "u3")
    assert orient.local_sign(branching_subgraph, local, "b7_3a") == -1
    assert orient.local_sign(branching_subgraph, local, "r7_3") == 1
    local = local_orientation(branching_subgraph, "u7")
    assert orient.local_sign(branching_subgraph, local, "r7_3") == 1
    assert orient.local_sign(branching_subgraph, local, "b7_3b") == -1


def test_no_orientation_of_emn22():
    g = load("emn22")
    edges = sorted(g.edge_map)
    for signs in itertools.product((1, -1), repeat=len(edges)):
        check = orient.verify_orientation(g, dict(zip(edges, signs)))
        assert check.kind == "invalid"


def test_weak_orientation_becomes_proper_on_quotient():
    g = load("source")
    check = orient.verify_orientation(g, {"a": -1, "b": -1, "c": -1})
    assert check.kind == "weak"
    assert check.cases["s"] == "no-out"
    q = quotient_graph(g, {"s"})
    assert orient.verify_orientation(q, {"a": -1, "b": -1}).kind == "proper"


def test_verify_rejects_bad_sign_maps():
    g = load("loop")
    with pytest.raises(PreconditionError):
        orient.verify_orientation(g, {})
    with pytest.raises(PreconditionError):
        orient.verify_orientation(g, {"e": 0})
    emn22 = load("emn22")
    with pytest.raises(PreconditionError):
        orient.as_orientation(emn22, dict.fromkeys(emn22.edge_map, 1))


def test_read_orientation_file():
    g = load("loop")
    signs = orient.read_orientation(sgr_dir / "loop_negative.orient")
    assert signs == {"e": -1}
    o = orient.as_orientation(g, signs)
    assert o.kind == "proper"
    assert o.is_positive(Symbol("e", -1))
    assert orient.positive_continuations(g, o, "v") == (Symbol("e", -1),)


def test_orientation_file_round_trip(tmp_path):
    signs = {"b": -1, "a": 1}
    path = tmp_path / "signs.orient"
    orient.write_orientation(signs, path)
    assert path.read_text() == "orient a +1\norient b -1\n"
    assert orient.read_orientation(path) == signs


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("orient e +2\n", 1),
        ("orient e -1\n# again\norient e +1\n", 3),
        ("\nflip e\n", 2),
    ],
)
def test_parse_orientation_errors(text, lineno):
    with pytest.raises(SgrFormatError) as excinfo:
        orient.parse_orientation(text)
    assert excinfo.value.lineno == lineno


def test_decompose_oriented():
    g = load("loop")
    o = Orientation({"e": -1}, "proper")
    negative, positive = orient.decompose_oriented(
        g, o, path_from_literal(g, "e^-1.e^-1")
    )
    assert negative.word == ()
    assert len(positive) == 2
    negative, positive = orient.decompose_oriented(
        g, o, path_from_literal(g, "e.e")
    )
    assert positive.is_trivial
    assert positive.source == "v"
    assert len(negative) == 2


def test_decompose_oriented_needs_usable_orientation():
    g = load("loop")
    with pytest.raises(PreconditionError):
        orient.decompose_oriented(
            g, Orientation({"e": 1}, "invalid"), path_from_literal(g, "e")
        )


def properly_oriented(name):
    if name == "loop":
        g = load("loop")
        return g, orient.as_orientation(g, {"e": -1})
    if name == "source":
        g = quotient_graph(load("source"), {"s"})
        return g, orient.as_orientation(g, {"a": -1, "b": -1})
    g = decompose(load(name)).branching_subgraph
    return g, orient.synthesize_orientation(g)


@pytest.mark.parametrize("name", ["emn12", "running_example"])
def test_cycles_at_branching_vertices_are_uniformly_oriented(name):
    g, o = properly_oriented(name)
    report = check_condition_n(g)
    assert report.branching
    for vertex, row in report.branching.items():
        cycles = [p for p in enumerate_paths(g, vertex, 6) if is_cycle(g, p)]
        assert cycles
        for cycle in cycles:
            induced = orient.orientation_from_cycle(
                g, row.orientation, cycle.word
            )
            assert induced == {e: o.sign(e) for e in induced}
            assert len({o.is_positive(x) for x in cycle.word}) == 1


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize(
    "name", ["loop", "source", "emn12", "running_example"]
)
def test_one_positive_symbol_in_every_local_configuration(name, seed):
    g, o = properly_oriented(name)
    assert o.kind == "proper"
    for vertex in g.vertices:
        p = RulePattern(g, vertex, 4, seeded_choice(seed))
        for word in p.iter_members():
            if len(word) == p.depth:
                continue
            local = p.local_configuration(word)
            assert sum(o.is_positive(x) for x in local) == 1
        assert len(positive_ray(o, p, 4)) == 5


def test_emn12_orientation():
    g, o = properly_oriented("emn12")
    assert o.signs == {"e0": 1, "f0": -1, "f1": -1}
    assert orient.positive_continuations(g, o, "u") == (Symbol("e0", 1),)
    assert set(orient.positive_continuations(g, o, "w")) == {
        Symbol("f0", -1),
        Symbol("f1", -1),
    }
