"""Edge types, proper orientations and their synthesis.

An orientation assigns a sign to each edge. A symbol e^ε is positively
oriented when ε equals the sign of e. In a proper orientation every vertex
either receives exactly one of its groups negatively and sends nothing
positively, or receives nothing negatively and sends exactly one edge
positively.
"""

import logging
import os
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path as FilePath
from typing import Dict, FrozenSet, Mapping, Optional, Tuple

from sepgraph.admissibility import (
    Path,
    Symbol,
    TransitionDigraph,
    all_symbols,
    range_of,
    source_of,
    symbols_from,
    transition_digraph,
    trivial_path,
    word_key,
)
from sepgraph.condition_n import LocalOrientation, check_condition_n
from sepgraph.decomposition import decompose, weakly_branching
from sepgraph.graph_core import (
    IDENT,
    PreconditionError,
    SeparatedGraph,
    SeparatedGraphError,
    SgrFormatError,
)

logger = logging.getLogger(__name__)

_ORIENT_LINE = re.compile(rf"^orient\s+({IDENT})\s+([+-]1)$")


class OrientationError(SeparatedGraphError):
    """Edge classification or orientation synthesis broke an invariant."""


class EdgeType(str, Enum):
    T1 = "1"
    T2 = "2"
    T3A = "3a"
    T3B = "3b"


@dataclass(frozen=True)
class Orientation:
    signs: Dict[str, int] = field(default_factory=dict)
    kind: str = "proper"

    def sign(self, edge: str) -> int:
        return self.signs[edge]

    def is_positive(self, x: Symbol) -> bool:
        """e^ε is positively oriented iff ε = o(e)."""
        return x.sign == self.signs[x.edge]

    @property
    def positive_edges(self) -> FrozenSet[str]:
        return frozenset(e for e, s in self.signs.items() if s > 0)

    @property
    def negative_edges(self) -> FrozenSet[str]:
        return frozenset(e for e, s in self.signs.items() if s < 0)


@dataclass(frozen=True)
class OrientationCheck:
    """Per-vertex cases: ``in-group``, ``one-out``, ``no-out`` or the
    reason the vertex violates every case."""

    kind: str
    cases: Dict[str, str]

    @property
    def violations(self) -> Dict[str, str]:
        return {
            v: case
            for v, case in self.cases.items()
            if case not in ("in-group", "one-out", "no-out")
        }


def _require_own_branching_subgraph(g: SeparatedGraph):
    decomposition = decompose(g)
    if len(decomposition.branching_part) != len(g.vertices):
        inside = decomposition.branching_part.members
        outside = sorted(set(g.vertices) - inside)
        raise PreconditionError(
            f"graph is not its own branching subgraph, {outside} do not "
            "hook into a branching vertex"
        )
    return decomposition


def _initial_symbols(
    g: SeparatedGraph,
    td: TransitionDigraph,
    vertex: str,
    branching: FrozenSet[str],
) -> FrozenSet[Symbol]:
    """I_br(u): first symbols of closed paths at ``vertex`` that pass
    through a branching vertex."""
    found = set()
    for a in symbols_from(g, vertex):
        start = (a, source_of(g, a) in branching)
        seen = {start}
        queue = deque([start])
        while queue:
            node, visited = queue.popleft()
            if visited and range_of(g, node) == vertex:
                found.add(a)
                break
            for nxt in td.successors(node):
                state = (nxt, visited or source_of(g, nxt) in branching)
                if state not in seen:
                    seen.add(state)
                    queue.append(state)
    return frozenset(found)


def classify_edges(g: SeparatedGraph) -> Dict[str, EdgeType]:
    """Type of every edge of a graph equal to its own branching subgraph.

    Raises
    ------
    PreconditionError
        If some vertex does not hook into a branching vertex.
    OrientationError
        If an edge satisfies none or several of the types.
    """
    decomposition = _require_own_branching_subgraph(g)
    branching = frozenset(decomposition.branching_vertices)
    td = transition_digraph(g)
    through_branching = set()
    for i in td.cyclic_components:
        component = td.components[i]
        if any(source_of(g, x) in branching for x in component):
            through_branching |= component
    initials = {
        v: _initial_symbols(g, td, v, branching) for v in g.vertices
    }

    types = {}
    for edge in g.edges:
        group = g.group_of(edge.id)
        candidates = []
        if {Symbol(edge.id, 1), Symbol(edge.id, -1)} & through_branching:
            candidates.append(EdgeType.T1)
        if edge.id in decomposition.critical_edges:
            candidates.append(EdgeType.T2)
        inverse_group = {Symbol(f, -1) for f in group.members}
        if initials[edge.range] <= inverse_group:
            candidates.append(EdgeType.T3A)
        if initials[edge.source] <= {Symbol(edge.id, 1)}:
            candidates.append(EdgeType.T3B)
        if len(candidates) != 1:
            raise OrientationError(
                f"internal invariant failed: edge {edge.id} has types "
                f"{[t.value for t in candidates]}"
            )
        types[edge.id] = candidates[0]
    return types


def local_sign(g: SeparatedGraph, local: LocalOrientation, edge: str) -> int:
    """𝔬_v(e) for an edge incident to the branching vertex v."""
    e = g.edge(edge)
    v = local.vertex
    if local.kind == "type1":
        if e.source == v:
            return -1
        return -1 if e.group == local.group_label else 1
    if edge == local.edge or e.range == v:
        return 1
    return -1


def orientation_from_cycle(
    g: SeparatedGraph, local: LocalOrientation, cycle: Tuple[Symbol, ...]
) -> Dict[str, int]:
    """Signs induced on the edges of a cycle based at ``local.vertex``."""
    first = cycle[0]
    flip = 1 if local_sign(g, local, first.edge) == first.sign else -1
    signs: Dict[str, int] = {}
    for x in cycle:
        sign = flip * x.sign
        if signs.setdefault(x.edge, sign) != sign:
            raise OrientationError(
                f"internal invariant failed: edge {x.edge} is traversed in "
                "both directions along one cycle"
            )
    return signs


def _branching_cycle_through(
    g: SeparatedGraph,
    td: TransitionDigraph,
    edge: str,
    branching: FrozenSet[str],
) -> Optional[Tuple[Symbol, ...]]:
    """Shortest cycle based at a branching vertex that traverses ``edge``."""
    best = None
    starts = [x for x in all_symbols(g) if source_of(g, x) in branching]
    for a in starts:
        start = (a, a.edge == edge)
        parent = {start: None}
        queue = deque([start])
        while queue:
            state = queue.popleft()
            node, seen = state
            if seen and td.digraph.has_edge(node, a):
                walk = [state]
                while parent[walk[-1]] is not None:
                    walk.append(parent[walk[-1]])
                word = tuple(x for x, _ in reversed(walk))
                if best is None or word_key(word) < word_key(best):
                    best = word
                break
            for nxt in td.successors(node):
                nxt_state = (nxt, seen or nxt.edge == edge)
                if nxt_state not in parent:
                    parent[nxt_state] = state
                    queue.append(nxt_state)
    return best


def _assign(signs: Dict[str, int], edge: str, sign: int, why: str) -> None:
    if signs.setdefault(edge, sign) != sign:
        raise OrientationError(
            f"internal invariant failed: conflicting signs for {edge} ({why})"
        )


def synthesize_orientation(g: SeparatedGraph) -> Orientation:
    """Build the proper orientation of a Condition (N) branching subgraph.

    Raises
    ------
    PreconditionError
        If ``g`` is not its own branching subgraph or fails Condition (N).
    OrientationError
        If the synthesized signs do not form a proper orientation.
    """
    report = check_condition_n(g)
    if not report.verdict:
        raise PreconditionError(
            f"Condition (N) fails at {report.witness.vertex}"
        )
    types = classify_edges(g)
    locals_ = {v: r.orientation for v, r in report.branching.items()}
    branching = frozenset(locals_)
    td = transition_digraph(g)
    signs: Dict[str, int] = {}

    for v, local in locals_.items():
        for edge in g.out_edges(v) + g.in_edges(v):
            if types[edge] is EdgeType.T1:
                _assign(signs, edge, local_sign(g, local, edge), f"seed {v}")

    for edge in sorted(e for e, t in types.items() if t is EdgeType.T1):
        if edge in signs:
            continue
        cycle = _branching_cycle_through(g, td, edge, branching)
        if cycle is None:
            raise OrientationError(
                f"internal invariant failed: no branching cycle through {edge}"
            )
        base = source_of(g, cycle[0])
        induced = orientation_from_cycle(g, locals_[base], cycle)
        logger.debug("Propagated signs along cycle at %s: %s", base, induced)
        for other, sign in induced.items():
            if types[other] is EdgeType.T1:
                _assign(signs, other, sign, f"cycle at {base}")

    for edge, kind in types.items():
        if kind in (EdgeType.T2, EdgeType.T3A):
            signs[edge] = -1
        elif kind is EdgeType.T3B:
            signs[edge] = 1

    for u in sorted(weakly_branching(g, tuple(sorted(branching)))):
        receives = any(
            types[e] is EdgeType.T1 and signs[e] < 0 for e in g.in_edges(u)
        )
        sends = any(
            types[e] is EdgeType.T1 and signs[e] > 0 for e in g.out_edges(u)
        )
        if receives == sends:
            raise OrientationError(
                f"internal invariant failed: weakly branching vertex {u} "
                "matches neither or both cases"
            )

    check = verify_orientation(g, signs)
    if check.kind != "proper":
        raise OrientationError(
            "internal invariant failed: synthesized orientation is "
            f"{check.kind}: {check.violations}"
        )
    return Orientation(dict(sorted(signs.items())), "proper")


def _vertex_case(
    g: SeparatedGraph, signs: Mapping[str, int], vertex: str
) -> str:
    negative_in = {e for e in g.in_edges(vertex) if signs[e] < 0}
    positive_out = [e for e in g.out_edges(vertex) if signs[e] > 0]
    groups = [set(X.members) for X in g.groups_at(vertex)]
    if negative_in and negative_in in groups:
        if not positive_out:
            return "in-group"
        return f"receives a group but sends {positive_out}"
    if negative_in:
        return f"negative in-edges {sorted(negative_in)} are not one group"
    if len(positive_out) == 1:
        return "one-out"
    if not positive_out:
        return "no-out"
    return f"sends {positive_out} positively"


def verify_orientation(
    g: SeparatedGraph, signs: Mapping[str, int]
) -> OrientationCheck:
    """Classify a sign map as a proper, weak or invalid orientation."""
    missing = sorted(set(g.edge_map) - set(signs))
    if missing:
        raise PreconditionError(f"no sign given for edges {missing}")
    for edge, sign in signs.items():
        g.edge(edge)
        if sign not in (1, -1):
            raise PreconditionError(f"sign of {edge} must be +1 or -1")
    cases = {v: _vertex_case(g, signs, v) for v in g.vertices}
    values = set(cases.values())
    if not values <= {"in-group", "one-out", "no-out"}:
        kind = "invalid"
    elif "no-out" in values:
        kind = "weak"
    else:
        kind = "proper"
    return OrientationCheck(kind, cases)


def as_orientation(
    g: SeparatedGraph, signs: Mapping[str, int]
) -> Orientation:
    """Validate a sign map and wrap it as an :class:`Orientation`."""
    check = verify_orientation(g, signs)
    if check.kind == "invalid":
        raise PreconditionError(
            f"sign map is not an orientation: {check.violations}"
        )
    return Orientation(dict(sorted(signs.items())), check.kind)


def decompose_oriented(
    g: SeparatedGraph, o: Orientation, p: Path
) -> Tuple[Path, Path]:
    """Split p = α₋α₊ with α₊ positively and α₋ negatively oriented.

    Returns
    -------
    (negative part, positive part)
        α₊ is applied first; either part may be trivial.
    """
    if o.kind not in ("proper", "weak"):
        raise PreconditionError(f"orientation kind {o.kind} is not usable")
    k = 0
    while k < len(p) and o.is_positive(p.word[k]):
        k += 1
    if any(o.is_positive(x) for x in p.word[k:]):
        raise OrientationError(
            f"internal invariant failed: {p} switches back to positive"
        )
    positive = Path(p.word[:k], p.vertices[: k + 1])
    negative = Path(p.word[k:], p.vertices[k:])
    if positive.is_trivial:
        positive = trivial_path(g, p.source)
    return negative, positive


def positive_continuations(
    g: SeparatedGraph, o: Orientation, vertex: str
) -> Tuple[Symbol, ...]:
    """Positively oriented symbols based at ``vertex``."""
    return tuple(
        x
        for x in all_symbols(g)
        if source_of(g, x) == vertex and o.is_positive(x)
    )


def parse_orientation(text: str) -> Dict[str, int]:
    """Parse ``orient <edge> <+1|-1>`` lines into a sign map."""
    signs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _ORIENT_LINE.match(line)
        if match is None:
            raise SgrFormatError(f"cannot parse {line!r}", lineno)
        edge, sign = match.groups()
        if edge in signs:
            raise SgrFormatError(f"duplicate orientation for {edge}", lineno)
        signs[edge] = int(sign)
    return signs


def serialize_orientation(signs: Mapping[str, int]) -> str:
    return "".join(
        f"orient {edge} {'+1' if sign > 0 else '-1'}\n"
        for edge, sign in sorted(signs.items())
    )


def read_orientation(path: os.PathLike) -> Dict[str, int]:
    return parse_orientation(FilePath(path).read_text(encoding="utf-8"))


def write_orientation(signs: Mapping[str, int], path: os.PathLike) -> None:
    FilePath(path).write_text(serialize_orientation(signs), encoding="utf-8")
