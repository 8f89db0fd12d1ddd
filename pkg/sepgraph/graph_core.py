"""Finitely separated graphs: data model, ``.sgr`` format and full subgraphs.

A separated graph is a directed graph whose incoming edges at each vertex
are partitioned into finite groups. Groups are identified by their range
vertex together with a label, so the same label may be reused at different
vertices.
"""

import logging
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

logger = logging.getLogger(__name__)

IDENT = r"[A-Za-z0-9_]+"
_VERTEX_LINE = re.compile(rf"^vertex\s+({IDENT})$")
_EDGE_LINE = re.compile(
    rf"^edge\s+({IDENT})\s*:\s*({IDENT})\s*->\s*({IDENT})\s*@\s*({IDENT})$"
)


class SeparatedGraphError(Exception):
    """Base class for errors raised by sepgraph."""


class SgrFormatError(SeparatedGraphError, ValueError):
    """Malformed input text (graph files, paths, orientations, elements)."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class UnknownIdentifierError(SeparatedGraphError, KeyError):
    """A vertex or edge identifier that the graph does not declare."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class PreconditionError(SeparatedGraphError, ValueError):
    """An operation was called outside of its domain."""


@dataclass(frozen=True, order=True)
class Edge:
    id: str
    source: str
    range: str
    group: str


@dataclass(frozen=True)
class Group:
    """An element X of C_v: edges with range ``range`` and label ``label``."""

    range: str
    label: str
    members: Tuple[str, ...]

    @property
    def key(self) -> Tuple[str, str]:
        return (self.range, self.label)


@dataclass(frozen=True)
class SeparatedGraph:
    """Immutable finitely separated graph.

    Vertices and edges are stored in lexicographic order of their
    identifiers, so every derived iteration order is deterministic.
    """

    vertices: Tuple[str, ...] = ()
    edges: Tuple[Edge, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(sorted(self.vertices)))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        declared = set(self.vertices)
        for edge in self.edges:
            for end in (edge.source, edge.range):
                if end not in declared:
                    raise UnknownIdentifierError(
                        f"edge {edge.id} uses undeclared vertex {end}"
                    )

    @cached_property
    def edge_map(self) -> Dict[str, Edge]:
        return {edge.id: edge for edge in self.edges}

    @cached_property
    def groups(self) -> Tuple[Group, ...]:
        members = defaultdict(list)
        for edge in self.edges:
            members[(edge.range, edge.group)].append(edge.id)
        return tuple(
            Group(rng, label, tuple(sorted(ids)))
            for (rng, label), ids in sorted(members.items())
        )

    @cached_property
    def _groups_at(self) -> Dict[str, Tuple[Group, ...]]:
        at = defaultdict(list)
        for group in self.groups:
            at[group.range].append(group)
        return {v: tuple(at[v]) for v in self.vertices}

    @cached_property
    def _group_of(self) -> Dict[str, Group]:
        return {e: group for group in self.groups for e in group.members}

    @cached_property
    def _out_edges(self) -> Dict[str, Tuple[str, ...]]:
        out = defaultdict(list)
        for edge in self.edges:
            out[edge.source].append(edge.id)
        return {v: tuple(out[v]) for v in self.vertices}

    @cached_property
    def _in_edges(self) -> Dict[str, Tuple[str, ...]]:
        into = defaultdict(list)
        for edge in self.edges:
            into[edge.range].append(edge.id)
        return {v: tuple(into[v]) for v in self.vertices}

    def edge(self, edge_id: str) -> Edge:
        try:
            return self.edge_map[edge_id]
        except KeyError:
            raise UnknownIdentifierError(f"unknown edge {edge_id}") from None

    def check_vertex(self, vertex: str) -> str:
        if vertex not in self._out_edges:
            raise UnknownIdentifierError(f"unknown vertex {vertex}")
        return vertex

    def source(self, edge_id: str) -> str:
        return self.edge(edge_id).source

    def range(self, edge_id: str) -> str:
        return self.edge(edge_id).range

    def group_of(self, edge_id: str) -> Group:
        """The group [e] containing the edge."""
        self.edge(edge_id)
        return self._group_of[edge_id]

    def groups_at(self, vertex: str) -> Tuple[Group, ...]:
        """C_v, ordered by label."""
        return self._groups_at[self.check_vertex(vertex)]

    def out_edges(self, vertex: str) -> Tuple[str, ...]:
        """s⁻¹(v), ordered by edge id."""
        return self._out_edges[self.check_vertex(vertex)]

    def in_edges(self, vertex: str) -> Tuple[str, ...]:
        """r⁻¹(v), ordered by edge id."""
        return self._in_edges[self.check_vertex(vertex)]

    def summary(self) -> Dict[str, int]:
        return {
            "vertices": len(self.vertices),
            "edges": len(self.edges),
            "groups": len(self.groups),
        }


@dataclass(frozen=True)
class VertexSet:
    """A set of vertices of a graph with its cached structural flags."""

    members: FrozenSet[str]
    hereditary: bool = field(compare=False)
    c_saturated: bool = field(compare=False)

    def __contains__(self, vertex) -> bool:
        return vertex in self.members

    def __iter__(self):
        return iter(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)


def _members(g: SeparatedGraph, h: Iterable[str]) -> FrozenSet[str]:
    if isinstance(h, VertexSet):
        return h.members
    members = frozenset(h)
    for vertex in members:
        g.check_vertex(vertex)
    return members


def is_hereditary(g: SeparatedGraph, h: Iterable[str]) -> bool:
    """Whether r(e) ∈ H implies s(e) ∈ H for every edge e."""
    members = _members(g, h)
    return all(
        edge.source in members for edge in g.edges if edge.range in members
    )


def is_c_saturated(g: SeparatedGraph, h: Iterable[str]) -> bool:
    """Whether s(X) ⊆ H implies v ∈ H for every v and every X ∈ C_v."""
    members = _members(g, h)
    for group in g.groups:
        if group.range in members:
            continue
        if all(g.source(e) in members for e in group.members):
            return False
    return True


def vertex_set(g: SeparatedGraph, h: Iterable[str]) -> VertexSet:
    members = _members(g, h)
    return VertexSet(
        members=members,
        hereditary=is_hereditary(g, members),
        c_saturated=is_c_saturated(g, members),
    )


def full_subgraph(g: SeparatedGraph, h: Iterable[str]) -> SeparatedGraph:
    """The full subgraph E_H with the restricted separation C^H.

    Groups of the subgraph are the non-empty intersections X ∩ E_H¹; since
    groups are keyed by (range, label), restricting the edge list is enough.
    """
    members = _members(g, h)
    return SeparatedGraph(
        vertices=tuple(members),
        edges=tuple(
            edge
            for edge in g.edges
            if edge.source in members and edge.range in members
        ),
    )


def quotient_graph(g: SeparatedGraph, h: Iterable[str]) -> SeparatedGraph:
    """The quotient (E/H, C/H), i.e. the full subgraph on E⁰ ∖ H.

    Raises
    ------
    PreconditionError
        If ``h`` is not hereditary and C-saturated.
    """
    members = _members(g, h)
    if not is_hereditary(g, members):
        raise PreconditionError(
            f"{sorted(members)} is not hereditary, cannot form a quotient"
        )
    if not is_c_saturated(g, members):
        raise PreconditionError(
            f"{sorted(members)} is not C-saturated, cannot form a quotient"
        )
    return full_subgraph(g, set(g.vertices) - members)


def isolated_vertices(g: SeparatedGraph) -> VertexSet:
    """Vertices with no incident edge, E⁰_iso."""
    return vertex_set(
        g,
        (
            v
            for v in g.vertices
            if not g.out_edges(v) and not g.in_edges(v)
        ),
    )


def parse(text: str) -> SeparatedGraph:
    """Parse a graph description in ``.sgr`` format.

    Parameters
    ----------
    text : str
        Lines of ``vertex <id>`` and ``edge <id> : <src> -> <rng> @ <label>``.
        ``#`` starts a comment; blank lines are ignored.

    Returns
    -------
    SeparatedGraph

    Raises
    ------
    SgrFormatError
        On a malformed line, a duplicate identifier or an edge referencing
        a vertex that has not been declared yet.
    """
    vertices = []
    edges = []
    seen_vertices = set()
    seen_edges = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if match := _VERTEX_LINE.match(line):
            (name,) = match.groups()
            if name in seen_vertices:
                raise SgrFormatError(f"duplicate vertex {name}", lineno)
            seen_vertices.add(name)
            vertices.append(name)
        elif match := _EDGE_LINE.match(line):
            name, source, rng, label = match.groups()
            if name in seen_edges:
                raise SgrFormatError(f"duplicate edge {name}", lineno)
            for end in (source, rng):
                if end not in seen_vertices:
                    raise SgrFormatError(
                        f"edge {name} references undeclared vertex {end}",
                        lineno,
                    )
            seen_edges.add(name)
            edges.append(Edge(name, source, rng, label))
        else:
            raise SgrFormatError(f"cannot parse {line!r}", lineno)
    graph = SeparatedGraph(vertices=tuple(vertices), edges=tuple(edges))
    logger.debug("Parsed separated graph %s", graph.summary())
    return graph


def serialize(g: SeparatedGraph) -> str:
    lines = [f"vertex {v}" for v in g.vertices]
    lines += [
        f"edge {e.id} : {e.source} -> {e.range} @ {e.group}" for e in g.edges
    ]
    return "\n".join(lines) + "\n"


def read_sgr(path: os.PathLike) -> SeparatedGraph:
    path = Path(path)
    logger.debug("Reading %s", path)
    return parse(path.read_text(encoding="utf-8"))


def write_sgr(g: SeparatedGraph, path: os.PathLike) -> None:
    Path(path).write_text(serialize(g), encoding="utf-8")
