import pathlib

import pytest

from sepgraph import monoid
from sepgraph.graph_core import (
    SeparatedGraph,
    SgrFormatError,
    UnknownIdentifierError,
    parse,
    read_sgr,
)
from sepgraph.monoid import MonoidElement, TriBool, parse_element

sgr_dir = pathlib.Path(__file__).parent.parent.parent / "data" / "sgr"

THREE_A_IS_TWO_B = """\
vertex a
vertex b
vertex w
edge x0 : a -> w @ red
edge x1 : a -> w @ red
edge x2 : a -> w @ red
edge y0 : b -> w @ blue
edge y1 : b -> w @ blue
"""


def load_presentation(name):
    return monoid.presentation(read_sgr(sgr_dir / f"{name}.sgr"))


@pytest.fixture
def ex95():
    return load_presentation("ex95")


@pytest.mark.parametrize(
    "text, expected",
    [
        ("2*u+v", {"u": 2, "v": 1}),
        ("u + u + w", {"u": 2, "w": 1}),
        ("3 * v", {"v": 3}),
        ("0", {}),
    ],
)
def test_parse_element(text, expected):
    a = parse_element(text)
    assert a == MonoidElement.from_mapping(expected)
    assert parse_element(str(a)) == a


@pytest.mark.parametrize("text", ["", "2*", "u+", "-u", "2 u"])
def test_parse_element_malformed(text):
    with pytest.raises(SgrFormatError):
        parse_element(text)


def test_element_arithmetic():
    a = parse_element("2*u+v")
    assert str(a + parse_element("u+w")) == "3*u+v+w"
    assert str(a.scale(3)) == "6*u+3*v"
    assert a.scale(0).is_zero
    assert a.total == 3
    assert a.coefficient("w") == 0
    with pytest.raises(ValueError):
        MonoidElement.from_mapping({"u": -1})


def test_presentation(ex95):
    assert ex95.generators == ("u", "v", "w")
    assert [str(r) for r in ex95.relations] == ["w = 2*v", "w = 2*u"]
    with pytest.raises(UnknownIdentifierError):
        ex95.vector(parse_element("x"))


def test_congruence_class(ex95):
    found, saturated = monoid.congruence_class(ex95, parse_element("w"), 8)
    assert [str(a) for a in found] == ["w", "2*u", "2*v"]
    assert saturated


def test_equal_and_leq(ex95):
    u, v = parse_element("u"), parse_element("v")
    assert monoid.equal(ex95, u.scale(2), v.scale(2)) is TriBool.TRUE
    assert monoid.equal(ex95, u, v) is TriBool.FALSE
    assert monoid.leq(ex95, u, u + v) is TriBool.TRUE
    assert monoid.leq(ex95, u, v) is TriBool.FALSE
    assert monoid.leq(ex95, u.scale(2), parse_element("w")) is TriBool.TRUE


def test_leq_follows_relations():
    pres = load_presentation("pseudo21")
    u, v = parse_element("u"), parse_element("v")
    assert monoid.leq(pres, u.scale(2), u + v) is TriBool.TRUE


def test_ex95_is_perforated(ex95):
    result = monoid.check_unperforation(ex95, 8)
    assert result.verdict is TriBool.FALSE
    assert result.counterexample == {
        "n": 2,
        "a": parse_element("u"),
        "b": parse_element("v"),
    }


def test_ex95_is_separative(ex95):
    result = monoid.check_separation(ex95, 8)
    assert result.verdict is TriBool.TRUE
    assert result.counterexample is None
    assert result.checked > 0


@pytest.mark.parametrize("name", ["pseudo21", "pseudo32"])
def test_pseudo_cancellation_fails(name):
    pres = load_presentation(name)
    result = monoid.check_pseudo_cancellation(pres, 8)
    assert result.verdict is TriBool.FALSE
    u, v = parse_element("u"), parse_element("v")
    assert result.counterexample == {"a": u, "b": v, "c": u}


@pytest.mark.parametrize("name, m", [("pseudo21", 2), ("pseudo32", 3)])
def test_pseudo_cancellation_family(name, m):
    pres = load_presentation(name)
    u, v = parse_element("u"), parse_element("v")
    verdict = monoid.pseudo_cancellation_instance(pres, u.scale(m - 1), v, u)
    assert verdict is TriBool.FALSE
    assert monoid.leq(pres, u.scale(m), u + v) is TriBool.TRUE


def test_instance_holds_when_a_below_b(ex95):
    u = parse_element("u")
    verdict = monoid.pseudo_cancellation_instance(ex95, u, u.scale(2), u)
    assert verdict is TriBool.TRUE


def test_tiny_bound_checks_nothing(ex95):
    result = monoid.check_unperforation(ex95, 3)
    assert result.verdict is TriBool.TRUE
    assert result.checked == 0


def test_checks_registry():
    assert set(monoid.CHECKS) == {
        "unperforation",
        "pseudo-cancellation",
        "separation",
        "almost-unperforation",
    }
    assert TriBool.of(True) is TriBool.TRUE
    assert TriBool.FALSE.value == "false"


def test_free_monoid_passes_every_check():
    pres = monoid.presentation(SeparatedGraph(("u", "v"), ()))
    assert pres.relations == ()
    for name, check in monoid.CHECKS.items():
        result = check(pres, 12)
        assert result.verdict is TriBool.TRUE, name
        assert result.undecided == 0
        assert result.checked > 0


def test_almost_unperforation_fails_when_3a_equals_2b():
    pres = monoid.presentation(parse(THREE_A_IS_TWO_B))
    a, b = parse_element("a"), parse_element("b")
    assert monoid.equal(pres, a.scale(3), b.scale(2)) is TriBool.TRUE
    result = monoid.check_almost_unperforation(pres, 12)
    assert result.verdict is TriBool.FALSE
    assert result.counterexample == {"n": 2, "a": a, "b": b}


def test_ex95_at_default_bound(ex95):
    assert monoid.DEFAULT_BOUND == 12
    result = monoid.check_unperforation(ex95, 12)
    assert result.verdict is TriBool.FALSE
    assert result.counterexample["n"] == 2


@pytest.mark.parametrize("name, m", [("pseudo21", 2), ("pseudo32", 3)])
def test_pseudo_cancellation_at_default_bound(name, m):
    pres = load_presentation(name)
    u, v = parse_element("u"), parse_element("v")
    result = monoid.check_pseudo_cancellation(pres, 12)
    assert result.verdict is TriBool.FALSE
    assert result.counterexample == {"a": u, "b": v, "c": u}
    verdict = monoid.pseudo_cancellation_instance(
        pres, u.scale(m - 1), v, u, 12
    )
    assert verdict is TriBool.FALSE


def test_closure_cache_is_bounded(ex95):
    monoid._closure.cache_clear()
    monoid.congruence_class(ex95, parse_element("w"), 8)
    info = monoid._closure.cache_info()
    assert info.maxsize == 4096
    assert info.currsize >= 1
