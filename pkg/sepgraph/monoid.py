"""The graph monoid M(E,C) and bounded checks of its cancellation
properties.

M(E,C) is the commutative monoid generated by E⁰ with one relation
v = Σ_{e∈X} s(e) for every group X ∈ C_v. Equality is decided by a
breadth-first closure under the relations, read in both directions, that
stops at a total coefficient bound. A closure that never hits the bound is
the whole congruence class, so negative answers drawn from it are exact.
"""

import itertools
import logging
import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import (
    Dict,
    FrozenSet,
    Iterator,
    List,
    Mapping,
    Optional,
    Tuple,
)

import numpy as np

from sepgraph.graph_core import (
    IDENT,
    SeparatedGraph,
    SgrFormatError,
    UnknownIdentifierError,
)

logger = logging.getLogger(__name__)

DEFAULT_BOUND = 12

_TERM = re.compile(rf"^(?:(\d+)\s*\*\s*)?({IDENT})$")

Vector = Tuple[int, ...]


class TriBool(str, Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"

    @classmethod
    def of(cls, flag: bool) -> "TriBool":
        return cls.TRUE if flag else cls.FALSE


@dataclass(frozen=True)
class MonoidElement:
    """A finitely supported vector of natural numbers over the vertices."""

    terms: Tuple[Tuple[str, int], ...] = ()

    @classmethod
    def from_mapping(cls, coefficients: Mapping[str, int]) -> "MonoidElement":
        if any(c < 0 for c in coefficients.values()):
            raise ValueError("monoid coefficients must be non-negative")
        return cls(tuple(sorted((v, c) for v, c in coefficients.items() if c)))

    @cached_property
    def _coefficients(self) -> Dict[str, int]:
        return dict(self.terms)

    def coefficient(self, vertex: str) -> int:
        return self._coefficients.get(vertex, 0)

    @property
    def total(self) -> int:
        return sum(c for _, c in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "MonoidElement") -> "MonoidElement":
        summed = dict(self.terms)
        for v, c in other.terms:
            summed[v] = summed.get(v, 0) + c
        return MonoidElement.from_mapping(summed)

    def scale(self, n: int) -> "MonoidElement":
        return MonoidElement.from_mapping({v: n * c for v, c in self.terms})

    def __str__(self) -> str:
        return format_element(self)


def parse_element(text: str) -> MonoidElement:
    """Parse ``2*u+v``; ``0`` is the zero element."""
    text = text.strip()
    if text == "0":
        return MonoidElement()
    coefficients: Dict[str, int] = {}
    for token in text.split("+"):
        match = _TERM.match(token.strip())
        if match is None:
            raise SgrFormatError(f"malformed monoid element {text!r}")
        count, vertex = match.groups()
        coefficients[vertex] = coefficients.get(vertex, 0) + int(count or 1)
    return MonoidElement.from_mapping(coefficients)


def format_element(a: MonoidElement) -> str:
    if a.is_zero:
        return "0"
    return "+".join(v if c == 1 else f"{c}*{v}" for v, c in a.terms)


@dataclass(frozen=True)
class Relation:
    left: MonoidElement
    right: MonoidElement

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class MonoidPresentation:
    generators: Tuple[str, ...]
    relations: Tuple[Relation, ...]

    def vector(self, a: MonoidElement) -> Vector:
        unknown = sorted(v for v, _ in a.terms if v not in self.generators)
        if unknown:
            raise UnknownIdentifierError(f"unknown generators {unknown}")
        return tuple(a.coefficient(v) for v in self.generators)

    def element(self, vector: Vector) -> MonoidElement:
        return MonoidElement.from_mapping(dict(zip(self.generators, vector)))

    @cached_property
    def moves(self) -> Tuple[Tuple[np.ndarray, np.ndarray], ...]:
        """Rewrites (take, give) for every relation in both directions."""
        found = []
        for relation in self.relations:
            left = np.array(self.vector(relation.left), dtype=np.int64)
            right = np.array(self.vector(relation.right), dtype=np.int64)
            found += [(left, right), (right, left)]
        return tuple(found)

    def key(self, a: MonoidElement) -> Tuple:
        """Total coefficient first, then generators in order."""
        return (a.total, tuple(-c for c in self.vector(a)))


def presentation(g: SeparatedGraph) -> MonoidPresentation:
    relations = []
    for group in g.groups:
        sources: Dict[str, int] = {}
        for e in group.members:
            s = g.source(e)
            sources[s] = sources.get(s, 0) + 1
        relations.append(
            Relation(
                MonoidElement.from_mapping({group.range: 1}),
                MonoidElement.from_mapping(sources),
            )
        )
    return MonoidPresentation(tuple(g.vertices), tuple(relations))


@lru_cache(maxsize=4096)
def _closure(
    pres: MonoidPresentation, start: Vector, bound: int
) -> Tuple[FrozenSet[Vector], bool]:
    """Elements reachable from ``start`` through states of total at most
    ``bound``, and whether the search never had to stop at the bound."""
    if sum(start) > bound:
        return frozenset({start}), False
    seen = {start}
    frontier = [start]
    saturated = True
    while frontier:
        nxt = []
        for state in frontier:
            current = np.array(state, dtype=np.int64)
            for take, give in pres.moves:
                if np.any(current < take):
                    continue
                moved = current - take + give
                if moved.sum() > bound:
                    saturated = False
                    continue
                image = tuple(int(c) for c in moved)
                if image not in seen:
                    seen.add(image)
                    nxt.append(image)
        frontier = nxt
    logger.debug(
        "Closure of %s: %d elements, saturated=%s",
        start,
        len(seen),
        saturated,
    )
    return frozenset(seen), saturated


def congruence_class(
    pres: MonoidPresentation, a: MonoidElement, bound: int = DEFAULT_BOUND
) -> Tuple[List[MonoidElement], bool]:
    members, saturated = _closure(pres, pres.vector(a), bound)
    found = sorted((pres.element(v) for v in members), key=pres.key)
    return found, saturated


def equal(
    pres: MonoidPresentation,
    a: MonoidElement,
    b: MonoidElement,
    bound: int = DEFAULT_BOUND,
) -> TriBool:
    va, vb = pres.vector(a), pres.vector(b)
    if va == vb:
        return TriBool.TRUE
    class_a, saturated_a = _closure(pres, va, bound)
    if vb in class_a:
        return TriBool.TRUE
    if saturated_a:
        return TriBool.FALSE
    class_b, saturated_b = _closure(pres, vb, bound)
    if va in class_b:
        return TriBool.TRUE
    return TriBool.FALSE if saturated_b else TriBool.UNKNOWN


def leq(
    pres: MonoidPresentation,
    a: MonoidElement,
    b: MonoidElement,
    bound: int = DEFAULT_BOUND,
) -> TriBool:
    """a ≤ b, i.e. a + c = b for some c."""
    va = np.array(pres.vector(a))
    vb = pres.vector(b)
    if np.all(va <= np.array(vb)):
        return TriBool.TRUE
    class_b, saturated = _closure(pres, vb, bound)
    if any(np.all(va <= np.array(x)) for x in class_b):
        return TriBool.TRUE
    return TriBool.FALSE if saturated else TriBool.UNKNOWN


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a bounded property search.

    ``counterexample`` names the violating elements; ``undecided`` counts
    instances that the bound left open.
    """

    verdict: TriBool
    counterexample: Optional[Dict[str, object]] = None
    undecided: int = 0
    checked: int = 0


def _elements_by_total(
    pres: MonoidPresentation, limit: int
) -> Dict[int, List[MonoidElement]]:
    found: Dict[int, List[MonoidElement]] = {t: [] for t in range(limit + 1)}
    for total in range(1, limit + 1):
        slots = len(pres.generators)
        for bars in itertools.combinations_with_replacement(
            range(slots), total
        ):
            counts = [0] * slots
            for i in bars:
                counts[i] += 1
            found[total].append(pres.element(tuple(counts)))
        found[total].sort(key=pres.key)
    return found


def _tuples(
    pres: MonoidPresentation, arity: int, limit: int
) -> Iterator[Tuple[MonoidElement, ...]]:
    """Non-zero tuples in (sum of totals, then componentwise key) order."""
    by_total = _elements_by_total(pres, limit)
    for size in range(arity, arity * limit + 1):
        for totals in itertools.product(range(1, limit + 1), repeat=arity):
            if sum(totals) != size:
                continue
            yield from itertools.product(*(by_total[t] for t in totals))


def _finish(
    name: str,
    found: Optional[Dict[str, object]],
    undecided: int,
    checked: int,
) -> CheckResult:
    if found is not None:
        verdict = TriBool.FALSE
    elif undecided:
        verdict = TriBool.UNKNOWN
    else:
        verdict = TriBool.TRUE
    logger.debug(
        "%s: %s after %d instances (%d undecided)",
        name,
        verdict.value,
        checked,
        undecided,
    )
    return CheckResult(verdict, found, undecided, checked)


def check_unperforation(
    pres: MonoidPresentation, bound: int = DEFAULT_BOUND
) -> CheckResult:
    """n·a ≤ n·b implies a ≤ b, for all n ≥ 2."""
    half = bound // 2
    undecided = checked = 0
    for a, b in _tuples(pres, 2, half):
        n = 2
        while n * max(a.total, b.total) <= half:
            checked += 1
            premise = leq(pres, a.scale(n), b.scale(n), bound)
            if premise is TriBool.TRUE:
                conclusion = leq(pres, a, b, bound)
                if conclusion is TriBool.FALSE:
                    found = {"n": n, "a": a, "b": b}
                    return _finish("unperforation", found, undecided, checked)
                undecided += conclusion is TriBool.UNKNOWN
            else:
                undecided += premise is TriBool.UNKNOWN
            n += 1
    return _finish("unperforation", None, undecided, checked)


def check_almost_unperforation(
    pres: MonoidPresentation, bound: int = DEFAULT_BOUND
) -> CheckResult:
    """(n+1)·a ≤ n·b for some n ≥ 2 implies a ≤ b."""
    half = bound // 2
    undecided = checked = 0
    for a, b in _tuples(pres, 2, half):
        n = 2
        while max((n + 1) * a.total, n * b.total) <= half:
            checked += 1
            premise = leq(pres, a.scale(n + 1), b.scale(n), bound)
            if premise is TriBool.TRUE:
                conclusion = leq(pres, a, b, bound)
                if conclusion is TriBool.FALSE:
                    found = {"n": n, "a": a, "b": b}
                    return _finish(
                        "almost unperforation", found, undecided, checked
                    )
                undecided += conclusion is TriBool.UNKNOWN
            else:
                undecided += premise is TriBool.UNKNOWN
            n += 1
    return _finish("almost unperforation", None, undecided, checked)


def check_separation(
    pres: MonoidPresentation, bound: int = DEFAULT_BOUND
) -> CheckResult:
    """2a = a + b = 2b implies a = b."""
    half = bound // 2
    undecided = checked = 0
    for a, b in _tuples(pres, 2, half):
        if a == b or 2 * max(a.total, b.total) > half:
            continue
        checked += 1
        both = a + b
        first = equal(pres, a.scale(2), both, bound)
        second = equal(pres, both, b.scale(2), bound)
        if TriBool.FALSE in (first, second):
            continue
        if TriBool.UNKNOWN in (first, second):
            undecided += 1
            continue
        conclusion = equal(pres, a, b, bound)
        if conclusion is TriBool.FALSE:
            return _finish("separation", {"a": a, "b": b}, undecided, checked)
        undecided += conclusion is TriBool.UNKNOWN
    return _finish("separation", None, undecided, checked)


def pseudo_cancellation_instance(
    pres: MonoidPresentation,
    a: MonoidElement,
    b: MonoidElement,
    c: MonoidElement,
    bound: int = DEFAULT_BOUND,
) -> TriBool:
    """Whether (a, b, c) satisfies: a + c ≤ b + c implies a₁ + c ≤ c and
    a ≤ b + a₁ for some a₁.

    Candidates for a₁ are x − c for the x ≥ c in the class of c.
    """
    if leq(pres, a, b, bound) is TriBool.TRUE:
        return TriBool.TRUE
    premise = leq(pres, a + c, b + c, bound)
    if premise is not TriBool.TRUE:
        return TriBool.TRUE if premise is TriBool.FALSE else TriBool.UNKNOWN
    vc = np.array(pres.vector(c))
    class_c, saturated = _closure(pres, tuple(vc), bound)
    answers = []
    for x in sorted(class_c):
        rest = np.array(x) - vc
        if np.any(rest < 0):
            continue
        a1 = pres.element(tuple(int(r) for r in rest))
        answers.append(leq(pres, a, b + a1, bound))
    if TriBool.TRUE in answers:
        return TriBool.TRUE
    if saturated and TriBool.UNKNOWN not in answers:
        return TriBool.FALSE
    return TriBool.UNKNOWN


def check_pseudo_cancellation(
    pres: MonoidPresentation, bound: int = DEFAULT_BOUND
) -> CheckResult:
    half = bound // 2
    undecided = checked = 0
    for a, b, c in _tuples(pres, 3, half):
        if max(a.total, b.total) + c.total > half:
            continue
        checked += 1
        holds = pseudo_cancellation_instance(pres, a, b, c, bound)
        if holds is TriBool.FALSE:
            found = {"a": a, "b": b, "c": c}
            return _finish("pseudo-cancellation", found, undecided, checked)
        undecided += holds is TriBool.UNKNOWN
    return _finish("pseudo-cancellation", None, undecided, checked)


CHECKS = {
    "unperforation": check_unperforation,
    "pseudo-cancellation": check_pseudo_cancellation,
    "separation": check_separation,
    "almost-unperforation": check_almost_unperforation,
}
