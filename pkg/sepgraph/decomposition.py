"""The hook relation ⊸ and the branching / branch-free / acyclic split.

``u ⊸ v`` holds when an admissible path α from u to v and a cycle β at v
make α⁻¹βα admissible (α may be trivial). Vertices hooking into a
branching vertex form the branching part; the rest is branch-free and is
stratified further into pieces with at most one cycle class each.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import networkx as nx
import numpy as np

from sepgraph.admissibility import (
    Path,
    Symbol,
    TransitionDigraph,
    allows_return,
    all_symbols,
    make_path,
    range_of,
    source_of,
    symbols_from,
    transition_digraph,
)
from sepgraph.condition_n import branching_vertices
from sepgraph.graph_core import (
    PreconditionError,
    SeparatedGraph,
    SeparatedGraphError,
    VertexSet,
    full_subgraph,
    quotient_graph,
    vertex_set,
)

logger = logging.getLogger(__name__)


class DecompositionError(SeparatedGraphError):
    """A split that should be hereditary, C-saturated and return-free is
    not; this is an internal invariant failure."""


@dataclass(frozen=True, eq=False)
class HookRelation:
    """Boolean matrix with ``matrix[i, j]`` true when vertex i ⊸ vertex j."""

    vertices: Tuple[str, ...]
    matrix: np.ndarray

    def _index(self, vertex: str) -> int:
        return self.vertices.index(vertex)

    def hooks(self, u: str, v: str) -> bool:
        return bool(self.matrix[self._index(u), self._index(v)])

    def targets(self, u: str) -> FrozenSet[str]:
        row = self.matrix[self._index(u)]
        return frozenset(v for v, hit in zip(self.vertices, row) if hit)

    def pairs(self) -> List[Tuple[str, str]]:
        rows, cols = np.nonzero(self.matrix)
        return [
            (self.vertices[int(i)], self.vertices[int(j)])
            for i, j in zip(rows, cols)
        ]


def _reach0(td: TransitionDigraph, a: Symbol) -> FrozenSet[Symbol]:
    return td.descendants(a) | {a}


def _cycle_ends(
    g: SeparatedGraph, td: TransitionDigraph, vertex: str
) -> List[Tuple[Symbol, Symbol]]:
    """Pairs (first, last) of cycles based at ``vertex``."""
    ends = []
    for c in symbols_from(g, vertex):
        for d in _reach0(td, c):
            if range_of(g, d) == vertex and td.digraph.has_edge(d, c):
                ends.append((c, d))
    return ends


def hook_relation(g: SeparatedGraph) -> HookRelation:
    td = transition_digraph(g)
    index = {v: i for i, v in enumerate(g.vertices)}
    matrix = np.zeros((len(g.vertices), len(g.vertices)), dtype=bool)
    cycle_ends = {v: _cycle_ends(g, td, v) for v in g.vertices}
    for v, ends in cycle_ends.items():
        matrix[index[v], index[v]] = bool(ends)

    conjugates: Dict[Symbol, bool] = {}
    for b in all_symbols(g):
        conjugates[b] = any(
            td.digraph.has_edge(b, c) and td.digraph.has_edge(d, b.inverse())
            for c, d in cycle_ends[range_of(g, b)]
        )
    for a in all_symbols(g):
        u = index[source_of(g, a)]
        for b in _reach0(td, a):
            if conjugates[b]:
                matrix[u, index[range_of(g, b)]] = True
    logger.debug("Hook relation has %d pairs", int(matrix.sum()))
    return HookRelation(g.vertices, matrix)


def cycle_classes(g: SeparatedGraph) -> Tuple[FrozenSet[str], ...]:
    """V/~: vertices admitting a cycle, joined when a cycle passes both."""
    td = transition_digraph(g)
    linked = nx.Graph()
    for i in td.cyclic_components:
        based = {source_of(g, x) for x in td.components[i]}
        linked.add_nodes_from(based)
        linked.add_edges_from((min(based), v) for v in based)
    classes = [frozenset(c) for c in nx.connected_components(linked)]
    return tuple(sorted(classes, key=min))


def weakly_branching(
    g: SeparatedGraph, branching: Optional[Tuple[str, ...]] = None
) -> FrozenSet[str]:
    """Vertices sharing a cycle with a branching vertex."""
    if branching is None:
        branching = branching_vertices(g)
    td = transition_digraph(g)
    found: Set[str] = set()
    for i in td.cyclic_components:
        based = {source_of(g, x) for x in td.components[i]}
        if based & set(branching):
            found |= based
    return frozenset(found)


def critical_edges(
    g: SeparatedGraph, weak: Optional[FrozenSet[str]] = None
) -> FrozenSet[str]:
    """Edges that allow no return and end at a weakly branching vertex."""
    if weak is None:
        weak = weakly_branching(g)
    return frozenset(
        e.id
        for e in g.edges
        if e.range in weak
        and not allows_return(g, make_path(g, (Symbol(e.id, 1),)))
    )


@dataclass(frozen=True)
class ReturnFreeCheck:
    return_free: bool
    counterexample: Optional[Path] = None

    def __bool__(self) -> bool:
        return self.return_free


def is_return_free(g: SeparatedGraph, h) -> ReturnFreeCheck:
    """Whether every admissible path with both ends in H stays in E_H.

    On failure the shortest, then lexicographically least, path leaving
    and re-entering H is returned as the counterexample.

    Raises
    ------
    PreconditionError
        If ``h`` is not hereditary and C-saturated.
    """
    hs = h if isinstance(h, VertexSet) else vertex_set(g, h)
    if not (hs.hereditary and hs.c_saturated):
        raise PreconditionError(
            f"{sorted(hs.members)} is not hereditary and C-saturated"
        )
    td = transition_digraph(g)

    def outside(x: Symbol) -> bool:
        edge = g.edge(x.edge)
        return edge.source not in hs or edge.range not in hs

    starts = sorted(
        (x for x in all_symbols(g) if source_of(g, x) in hs),
        key=lambda x: x.sort_key,
    )
    parent = {(x, outside(x)): None for x in starts}
    queue = deque(parent)
    while queue:
        state = queue.popleft()
        node, left = state
        if left and range_of(g, node) in hs:
            walk = [state]
            while parent[walk[-1]] is not None:
                walk.append(parent[walk[-1]])
            word = tuple(x for x, _ in reversed(walk))
            return ReturnFreeCheck(False, make_path(g, word))
        for nxt in td.successors(node):
            nxt_state = (nxt, left or outside(nxt))
            if nxt_state not in parent:
                parent[nxt_state] = state
                queue.append(nxt_state)
    return ReturnFreeCheck(True)


@dataclass(frozen=True)
class Decomposition:
    graph: SeparatedGraph
    branching_vertices: Tuple[str, ...]
    branching_part: VertexSet
    branch_free_part: VertexSet
    acyclic_part: VertexSet
    weakly_branching: VertexSet
    critical_edges: FrozenSet[str]

    @property
    def branching_subgraph(self) -> SeparatedGraph:
        return full_subgraph(self.graph, self.branching_part)

    @property
    def branch_free_subgraph(self) -> SeparatedGraph:
        return full_subgraph(self.graph, self.branch_free_part)

    @property
    def acyclic_subgraph(self) -> SeparatedGraph:
        return full_subgraph(self.graph, self.acyclic_part)


def _check_split(g: SeparatedGraph, h, what: str) -> None:
    hs = vertex_set(g, h)
    if not hs.hereditary or not hs.c_saturated:
        raise DecompositionError(
            f"internal invariant failed: {what} {sorted(hs.members)} is not "
            "hereditary and C-saturated"
        )
    check = is_return_free(g, hs)
    if not check:
        raise DecompositionError(
            f"internal invariant failed: {what} is not return-free, "
            f"witness {check.counterexample}"
        )


def decompose(g: SeparatedGraph) -> Decomposition:
    branching = branching_vertices(g)
    hook = hook_relation(g)
    br = {u for u in g.vertices if hook.targets(u) & set(branching)}
    bf = set(g.vertices) - br
    ac = {u for u in g.vertices if not hook.targets(u)}
    _check_split(g, bf, "branch-free part")
    _check_split(g, ac, "acyclic part")
    weak = weakly_branching(g, branching)
    logger.debug(
        "Decomposed %d vertices: %d branching, %d branch-free, %d acyclic",
        len(g.vertices),
        len(br),
        len(bf),
        len(ac),
    )
    return Decomposition(
        graph=g,
        branching_vertices=branching,
        branching_part=vertex_set(g, br),
        branch_free_part=vertex_set(g, bf),
        acyclic_part=vertex_set(g, ac),
        weakly_branching=vertex_set(g, weak),
        critical_edges=critical_edges(g, weak),
    )


@dataclass(frozen=True)
class Stratification:
    """Vertex sets of a branch-free graph, innermost first."""

    strata: Tuple[FrozenSet[str], ...]

    def __len__(self) -> int:
        return len(self.strata)

    def subgraphs(self, g: SeparatedGraph) -> List[SeparatedGraph]:
        return [full_subgraph(g, s) for s in self.strata]


def _stratify(g: SeparatedGraph, strata: List[FrozenSet[str]]) -> None:
    if not g.vertices:
        return
    hook = hook_relation(g)
    acyclic = {u for u in g.vertices if not hook.targets(u)}
    if acyclic and len(acyclic) < len(g.vertices):
        _check_split(g, acyclic, "acyclic part")
        strata.append(frozenset(acyclic))
        _stratify(quotient_graph(g, acyclic), strata)
        return
    classes = cycle_classes(g)
    if len(classes) <= 1:
        strata.append(frozenset(g.vertices))
        return
    for top in classes:
        hooked = any(
            hook.hooks(u, v)
            for other in classes
            if other != top
            for u in other
            for v in top
        )
        if not hooked:
            break
    else:
        raise DecompositionError(
            "internal invariant failed: every cycle class is hooked into"
        )
    h = {u for u in g.vertices if not hook.targets(u) & top}
    logger.debug("Splitting off %s below class %s", sorted(h), sorted(top))
    _check_split(g, h, "stratum")
    _stratify(full_subgraph(g, h), strata)
    _stratify(quotient_graph(g, h), strata)


def stratify_branch_free(g: SeparatedGraph) -> Stratification:
    """Split a graph without branching vertices into strata.

    Raises
    ------
    PreconditionError
        If ``g`` has a branching vertex.
    """
    branching = branching_vertices(g)
    if branching:
        raise PreconditionError(
            f"graph has branching vertices {list(branching)}"
        )
    strata: List[FrozenSet[str]] = []
    _stratify(g, strata)
    return Stratification(tuple(strata))
