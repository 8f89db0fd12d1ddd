"""Branching vertices, local orientations and Condition (N).

Closed paths at a vertex v are summarised by the pair of ports they leave
and re-enter through. A port is either an out-edge ``Out(e)`` or an incoming
group ``In(X)``. A branching vertex admits a local orientation exactly when
one port occurs in every realizable pair. Otherwise three pairs with
distinct first and distinct second ports combine into two cycles that
generate a free subgroup.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from sepgraph.admissibility import (
    Path,
    Symbol,
    allows_return,
    invert,
    is_cycle,
    make_path,
    meet,
    multiply,
    range_of,
    shortest_walk,
    symbols_from,
    transition_digraph,
    word_key,
)
from sepgraph.graph_core import PreconditionError, SeparatedGraph

logger = logging.getLogger(__name__)

BRANCHING_THRESHOLD = 3


class Port(NamedTuple):
    kind: str
    ident: str

    def __str__(self) -> str:
        return f"{'Out' if self.kind == 'out' else 'In'}({self.ident})"


def port_of(g: SeparatedGraph, x: Symbol) -> Port:
    """π(e) = Out(e) and π(e⁻¹) = In([e])."""
    if x.positive:
        return Port("out", x.edge)
    return Port("in", g.group_of(x.edge).label)


PortPair = Tuple[Port, Port]


@dataclass(frozen=True)
class RealizablePairs:
    """Port pairs (ι(α), τ(α)) over all closed paths α at ``vertex``.

    Each pair maps to a shortest, then lexicographically least, witness.
    """

    vertex: str
    pairs: Dict[PortPair, Path] = field(default_factory=dict)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class LocalOrientation:
    vertex: str
    port: Port

    @property
    def kind(self) -> str:
        return "type1" if self.port.kind == "in" else "type2"

    @property
    def group_label(self) -> Optional[str]:
        """Label of X_v for a type (1) orientation."""
        return self.port.ident if self.port.kind == "in" else None

    @property
    def edge(self) -> Optional[str]:
        """e_v for a type (2) orientation."""
        return self.port.ident if self.port.kind == "out" else None


@dataclass(frozen=True)
class FailureWitness:
    """Cycles α = δγ and β = εγ at ``vertex`` with γ = α ∧ β."""

    vertex: str
    alpha: Path
    beta: Path
    gamma: Path


@dataclass(frozen=True)
class VertexReport:
    vertex: str
    return_count: int
    orientation: Optional[LocalOrientation] = None
    witness: Optional[FailureWitness] = None

    @property
    def branching(self) -> bool:
        return self.return_count >= BRANCHING_THRESHOLD


@dataclass(frozen=True)
class ConditionNReport:
    verdict: bool
    vertices: Dict[str, VertexReport]

    @property
    def branching(self) -> Dict[str, VertexReport]:
        return {v: r for v, r in self.vertices.items() if r.branching}

    @property
    def witness(self) -> Optional[FailureWitness]:
        for report in self.vertices.values():
            if report.witness is not None:
                return report.witness
        return None


def realizable_pairs(g: SeparatedGraph, vertex: str) -> RealizablePairs:
    g.check_vertex(vertex)
    td = transition_digraph(g)
    best: Dict[PortPair, Tuple] = {}
    for a in symbols_from(g, vertex):
        targets = {
            b
            for b in td.descendants(a) | {a}
            if range_of(g, b) == vertex
        }
        for b in targets:
            walk = shortest_walk(td, [a], lambda x, b=b: x == b)
            pair = (port_of(g, a), port_of(g, b.inverse()))
            if pair not in best or word_key(walk) < word_key(best[pair]):
                best[pair] = walk
    pairs = {pair: make_path(g, best[pair]) for pair in sorted(best)}
    logger.debug("%d realizable port pairs at %s", len(pairs), vertex)
    return RealizablePairs(vertex, pairs)


def return_count(
    g: SeparatedGraph, vertex: str, allow_trivial: bool = True
) -> int:
    """Number of out-edges and incoming groups at ``vertex`` that allow a
    return."""
    count = 0
    for e in g.out_edges(vertex):
        path = make_path(g, (Symbol(e, 1),))
        count += allows_return(g, path, allow_trivial=allow_trivial)
    for group in g.groups_at(vertex):
        paths = [make_path(g, (Symbol(e, -1),)) for e in group.members]
        count += any(
            allows_return(g, path, allow_trivial=allow_trivial)
            for path in paths
        )
    return count


def is_branching(
    g: SeparatedGraph, vertex: str, allow_trivial: bool = True
) -> Tuple[bool, int]:
    count = return_count(g, vertex, allow_trivial=allow_trivial)
    return count >= BRANCHING_THRESHOLD, count


def branching_vertices(
    g: SeparatedGraph, allow_trivial: bool = True
) -> Tuple[str, ...]:
    return tuple(
        v
        for v in g.vertices
        if is_branching(g, v, allow_trivial=allow_trivial)[0]
    )


def covering_ports(pairs: RealizablePairs) -> List[Port]:
    """Ports occurring in every realizable pair."""
    ports = sorted({p for pair in pairs.pairs for p in pair})
    return [p for p in ports if all(p in pair for pair in pairs.pairs)]


def _bad_triple(pairs: RealizablePairs) -> Optional[Tuple[PortPair, ...]]:
    """Three pairs with pairwise distinct ι's and pairwise distinct τ's,
    preferring short witnesses."""
    candidates = []
    for triple in itertools.combinations(sorted(pairs.pairs), 3):
        if len({p[0] for p in triple}) < 3:
            continue
        if len({p[1] for p in triple}) < 3:
            continue
        length = sum(len(pairs.pairs[p]) for p in triple)
        candidates.append((length, triple))
    if not candidates:
        return None
    return min(candidates)[1]


def local_orientation(
    g: SeparatedGraph, vertex: str
) -> Union[LocalOrientation, FailureWitness]:
    """The local orientation of a branching vertex, or a witness that none
    exists.

    Raises
    ------
    PreconditionError
        If ``vertex`` is not branching.
    """
    branching, count = is_branching(g, vertex)
    if not branching:
        raise PreconditionError(
            f"{vertex} is not branching (return count {count})"
        )
    pairs = realizable_pairs(g, vertex)
    ports = covering_ports(pairs)
    if ports:
        return LocalOrientation(vertex, ports[0])
    triple = _bad_triple(pairs)
    if triple is None:
        raise PreconditionError(
            f"no covering port and no bad triple at {vertex}"
        )
    first, second, third = (pairs.pairs[p].word for p in triple)
    alpha = make_path(g, multiply(invert(second), first))
    beta = make_path(g, multiply(invert(third), first))
    return FailureWitness(vertex, alpha, beta, meet(alpha, beta))


def verify_failure_witness(g: SeparatedGraph, fw: FailureWitness) -> bool:
    """Re-check that α, β, βα and β·α⁻¹ are cycles and α ∧ β < α, β."""
    alpha, beta = fw.alpha, fw.beta
    if alpha.source != fw.vertex or beta.source != fw.vertex:
        return False
    products = []
    for word in (
        alpha.word + beta.word,
        multiply(beta.word, invert(alpha.word)),
    ):
        try:
            products.append(make_path(g, word))
        except PreconditionError:
            return False
    if not all(is_cycle(g, p) for p in [alpha, beta] + products):
        return False
    gamma = meet(alpha, beta)
    return len(gamma) < len(alpha) and len(gamma) < len(beta)


def check_condition_n(
    g: SeparatedGraph, allow_trivial: bool = True
) -> ConditionNReport:
    reports = {}
    for vertex in g.vertices:
        count = return_count(g, vertex, allow_trivial=allow_trivial)
        report = VertexReport(vertex, count)
        if report.branching:
            found = local_orientation(g, vertex)
            if isinstance(found, LocalOrientation):
                report = VertexReport(vertex, count, orientation=found)
            else:
                report = VertexReport(vertex, count, witness=found)
            logger.debug("Branching vertex %s: %s", vertex, found)
        reports[vertex] = report
    verdict = all(r.witness is None for r in reports.values())
    return ConditionNReport(verdict, reports)
