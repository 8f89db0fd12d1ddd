import pathlib

import pytest

from sepgraph import graph_core
from sepgraph.graph_core import (
    PreconditionError,
    SgrFormatError,
    UnknownIdentifierError,
)

sgr_dir = pathlib.Path(__file__).parent.parent.parent / "data" / "sgr"


@pytest.fixture
def running_example():
    return graph_core.read_sgr(sgr_dir / "running_example.sgr")


def test_read_running_example(running_example):
    assert running_example.summary() == {
        "vertices": 13,
        "edges": 24,
        "groups": 9,
    }
    assert running_example.vertices[0] == "u1"
    assert running_example.vertices[1] == "u10"
    blue_at_u3 = [
        X for X in running_example.groups_at("u3") if X.label == "blue"
    ][0]
    assert len(blue_at_u3.members) == 9
    assert running_example.group_of("r7_3").members == ("r7_3", "r8_3")


def test_adjacency(running_example):
    assert running_example.out_edges("u2") == (
        "b2_1",
        "b2_3",
        "g2_1a",
        "g2_1b",
    )
    assert running_example.in_edges("u10") == ("g1_10",)
    assert running_example.source("l5") == "u5"
    assert running_example.range("g1_10") == "u10"


def test_unknown_identifiers(running_example):
    with pytest.raises(UnknownIdentifierError):
        running_example.edge("nope")
    with pytest.raises(KeyError):
        running_example.out_edges("u99")


def test_serialize_round_trip(running_example, tmp_path):
    path = tmp_path / "copy.sgr"
    graph_core.write_sgr(running_example, path)
    assert graph_core.read_sgr(path) == running_example


@pytest.mark.parametrize(
    "text, lineno",
    [
        ("vertex u\nvertex u\n", 2),
        ("vertex u\n\nedge e : u -> w @ red\n", 3),
        ("vertex u\nedge e : u -> u @ red\nedge e : u -> u @ red\n", 3),
        ("vertex u\nedge e : u => u @ red\n", 2),
        ("# comment\nvertex u-1\n", 2),
    ],
)
def test_parse_errors(text, lineno):
    with pytest.raises(SgrFormatError) as excinfo:
        graph_core.parse(text)
    assert excinfo.value.lineno == lineno
    assert str(excinfo.value).startswith(f"line {lineno}:")


def test_broken_file():
    with pytest.raises(SgrFormatError):
        graph_core.read_sgr(sgr_dir / "broken.sgr")


def test_empty_graph():
    g = graph_core.parse("# nothing here\n")
    assert g.vertices == ()
    assert g.summary()["groups"] == 0


def test_branch_free_part_is_hereditary_and_saturated(running_example):
    h = graph_core.vertex_set(running_example, ["u4", "u5", "u9", "u13"])
    assert h.hereditary
    assert h.c_saturated
    assert len(h) == 4


def test_not_hereditary(running_example):
    assert not graph_core.is_hereditary(running_example, ["u3"])
    assert graph_core.is_hereditary(running_example, [])


def test_c_saturation():
    g = graph_core.read_sgr(sgr_dir / "emn22.sgr")
    assert not graph_core.is_c_saturated(g, ["u"])
    assert graph_core.is_c_saturated(g, ["u", "w"])
    assert graph_core.is_c_saturated(g, [])


def test_full_subgraph(running_example):
    sub = graph_core.full_subgraph(running_example, ["u4", "u5", "u9"])
    assert sub.vertices == ("u4", "u5", "u9")
    assert {e.id for e in sub.edges} == {"b4_5", "l5", "b9_4a", "b9_4b"}
    assert [X.label for X in sub.groups_at("u4")] == ["blue"]


def test_quotient_graph(running_example):
    bf = ["u4", "u5", "u9", "u13"]
    q = graph_core.quotient_graph(running_example, bf)
    assert len(q.vertices) == 9
    assert "b4_3" not in q.edge_map
    empty = graph_core.quotient_graph(q, q.vertices)
    assert empty.vertices == ()


def test_quotient_needs_hereditary(running_example):
    with pytest.raises(PreconditionError):
        graph_core.quotient_graph(running_example, ["u3"])


def test_quotient_needs_c_saturated():
    g = graph_core.read_sgr(sgr_dir / "emn22.sgr")
    with pytest.raises(PreconditionError):
        graph_core.quotient_graph(g, ["u"])


def test_isolated_vertices():
    g = graph_core.parse("vertex a\nvertex b\nedge e : a -> a @ x\n")
    assert set(graph_core.isolated_vertices(g)) == {"b"}
