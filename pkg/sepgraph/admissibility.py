"""Symbols of the double graph, admissible paths and the transition digraph.

Words are tuples of :class:`Symbol`, with index 0 applied first. Path
literals are written the other way round, rightmost symbol first, so the
literal ``f^-1.e`` is the word ``(e, f^-1)``.

Every existential question about admissible paths is answered by
reachability in the transition digraph, whose nodes are the symbols and
whose arcs are the admissible two-symbol words.
"""

import logging
import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import (
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Tuple,
)

import networkx as nx

from sepgraph.graph_core import (
    IDENT,
    PreconditionError,
    SeparatedGraph,
    SgrFormatError,
)

logger = logging.getLogger(__name__)

_SYMBOL_TOKEN = re.compile(rf"^({IDENT})(\^-1)?$")


class InadmissiblePathError(PreconditionError):
    """A word that is not an admissible path."""


class Symbol(NamedTuple):
    """An edge e (sign +1) or its formal inverse e⁻¹ (sign -1)."""

    edge: str
    sign: int

    @property
    def sort_key(self) -> Tuple[str, int]:
        return (self.edge, 0 if self.sign > 0 else 1)

    @property
    def positive(self) -> bool:
        return self.sign > 0

    def inverse(self) -> "Symbol":
        return Symbol(self.edge, -self.sign)

    def __str__(self) -> str:
        return self.edge if self.sign > 0 else f"{self.edge}^-1"


Word = Tuple[Symbol, ...]


def word_key(word: Word) -> Tuple:
    """Sort key ordering words by length, then symbol by symbol."""
    return (len(word), tuple(x.sort_key for x in word))


def parse_word(text: str) -> Word:
    """Parse a path literal such as ``f^-1.e``; ``1`` is the trivial word."""
    text = text.strip()
    if text == "1":
        return ()
    word = []
    for token in reversed(text.split(".")):
        match = _SYMBOL_TOKEN.match(token.strip())
        if match is None:
            raise SgrFormatError(f"malformed path literal {text!r}")
        edge, inverse = match.groups()
        word.append(Symbol(edge, -1 if inverse else 1))
    return tuple(word)


def format_word(word: Iterable[Symbol]) -> str:
    """Inverse of :func:`parse_word`: rightmost symbol first, ``1`` for the
    trivial word."""
    word = tuple(word)
    if not word:
        return "1"
    return ".".join(str(x) for x in reversed(word))


def invert(word: Word) -> Word:
    """The formal inverse, read back to front with every sign flipped."""
    return tuple(x.inverse() for x in reversed(word))


def multiply(beta: Word, alpha: Word) -> Word:
    """The free group product β·α (α applied first), freely reduced."""
    reduced: List[Symbol] = []
    for x in alpha + beta:
        if reduced and reduced[-1] == x.inverse():
            reduced.pop()
        else:
            reduced.append(x)
    return tuple(reduced)


def is_reduced(word: Word) -> bool:
    """Whether no symbol is directly followed by its inverse."""
    return all(b != a.inverse() for a, b in zip(word, word[1:]))


def source_of(g: SeparatedGraph, x: Symbol) -> str:
    """s(x): s(e) for x = e, r(e) for x = e⁻¹.

    Raises
    ------
    UnknownIdentifierError
        If the graph has no edge ``x.edge``.
    """
    edge = g.edge(x.edge)
    return edge.source if x.positive else edge.range


def range_of(g: SeparatedGraph, x: Symbol) -> str:
    """r(x), the vertex reached after traversing ``x``."""
    edge = g.edge(x.edge)
    return edge.range if x.positive else edge.source


def all_symbols(g: SeparatedGraph) -> Tuple[Symbol, ...]:
    """Every e and e⁻¹ of the double, in edge order."""
    return tuple(
        Symbol(edge.id, sign) for edge in g.edges for sign in (1, -1)
    )


def symbols_from(g: SeparatedGraph, vertex: str) -> Tuple[Symbol, ...]:
    """Symbols x with s(x) = vertex, in symbol order."""
    found = [Symbol(e, 1) for e in g.out_edges(vertex)]
    found += [Symbol(e, -1) for e in g.in_edges(vertex)]
    return tuple(sorted(found, key=lambda x: x.sort_key))


def symbols_into(g: SeparatedGraph, vertex: str) -> Tuple[Symbol, ...]:
    """Symbols x with r(x) = vertex, in symbol order."""
    return tuple(
        sorted(
            (x.inverse() for x in symbols_from(g, vertex)),
            key=lambda x: x.sort_key,
        )
    )


def allowed(g: SeparatedGraph, a: Symbol, b: Symbol) -> bool:
    """Whether the two-symbol word "b after a" is admissible."""
    if source_of(g, b) != range_of(g, a):
        return False
    if not a.positive and b.positive and a.edge == b.edge:
        return False
    if a.positive and not b.positive:
        if g.group_of(a.edge) == g.group_of(b.edge):
            return False
    return True


def is_admissible(g: SeparatedGraph, word: Word) -> bool:
    """Whether ``word`` is a non-trivial admissible path of ``g``.

    Raises
    ------
    UnknownIdentifierError
        If a symbol names an edge the graph does not have.
    """
    for x in word:
        g.edge(x.edge)
    if not word:
        return False
    return all(allowed(g, a, b) for a, b in zip(word, word[1:]))


@dataclass(frozen=True)
class Path:
    """An admissible path together with the vertices it visits.

    ``vertices[0]`` is the source and ``vertices[-1]`` the range; a trivial
    path has an empty word and a single vertex.
    """

    word: Word
    vertices: Tuple[str, ...]

    @property
    def source(self) -> str:
        return self.vertices[0]

    @property
    def range(self) -> str:
        return self.vertices[-1]

    @property
    def initial(self) -> Optional[Symbol]:
        return self.word[0] if self.word else None

    @property
    def terminal(self) -> Optional[Symbol]:
        return self.word[-1] if self.word else None

    @property
    def is_trivial(self) -> bool:
        return not self.word

    @property
    def is_closed(self) -> bool:
        return self.source == self.range

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        if self.is_trivial:
            return f"1@{self.source}"
        return format_word(self.word)


def trivial_path(g: SeparatedGraph, vertex: str) -> Path:
    """The length-zero path at ``vertex``."""
    return Path((), (g.check_vertex(vertex),))


def make_path(g: SeparatedGraph, word: Word) -> Path:
    """Wrap an admissible non-trivial word as a :class:`Path`."""
    if not is_admissible(g, word):
        raise InadmissiblePathError(
            f"{format_word(word)} is not an admissible path"
        )
    vertices = [source_of(g, word[0])]
    vertices += [range_of(g, x) for x in word]
    return Path(tuple(word), tuple(vertices))


def path_from_literal(g: SeparatedGraph, text: str) -> Path:
    """Parse a literal such as ``f^-1.e`` and check it is admissible.

    Parameters
    ----------
    g : SeparatedGraph
    text : str
        Rightmost symbol first; ``1`` is the trivial path, which needs a
        vertex and is therefore rejected.

    Returns
    -------
    Path

    Raises
    ------
    SgrFormatError
        If the literal is malformed.
    InadmissiblePathError
        If the word is not an admissible path of ``g``.
    """
    return make_path(g, parse_word(text))


def meet(a: Path, b: Path) -> Path:
    """α ∧ β, the longest common initial subpath."""
    if a.source != b.source:
        raise PreconditionError(
            f"paths start at {a.source} and {b.source}, no common prefix"
        )
    k = 0
    while k < min(len(a), len(b)) and a.word[k] == b.word[k]:
        k += 1
    return Path(a.word[:k], a.vertices[: k + 1])


def is_cycle(g: SeparatedGraph, p: Path) -> bool:
    """Whether p is closed and pp is admissible."""
    if p.is_trivial or not p.is_closed:
        return False
    return allowed(g, p.terminal, p.initial)


def is_base_simple(g: SeparatedGraph, p: Path) -> bool:
    """Whether the closed path ``p`` visits its base only at both ends."""
    if not p.is_closed:
        return False
    return p.source not in p.vertices[1:-1]


class TransitionDigraph:
    """Digraph on all symbols with an arc a -> b when "b after a" is allowed.

    Walks of length n - 1 are exactly the admissible paths of length n.
    Instances are shared through :func:`transition_digraph` and must be
    treated as read-only.
    """

    def __init__(self, g: SeparatedGraph):
        self.graph = g
        self.digraph = nx.DiGraph()
        nodes = all_symbols(g)
        self.digraph.add_nodes_from(nodes)
        for a in nodes:
            for b in symbols_from(g, range_of(g, a)):
                if allowed(g, a, b):
                    self.digraph.add_edge(a, b)
        self._descendants: Dict[Symbol, FrozenSet[Symbol]] = {}
        logger.debug(
            "Built transition digraph with %d symbols and %d arcs",
            self.digraph.number_of_nodes(),
            self.digraph.number_of_edges(),
        )

    def successors(self, a: Symbol) -> List[Symbol]:
        return sorted(self.digraph.successors(a), key=lambda x: x.sort_key)

    def descendants(self, a: Symbol) -> FrozenSet[Symbol]:
        """Symbols reachable from ``a`` by a walk with at least one arc."""
        if a not in self._descendants:
            found = set()
            for b in self.digraph.successors(a):
                found.add(b)
                found |= nx.descendants(self.digraph, b)
            self._descendants[a] = frozenset(found)
        return self._descendants[a]

    @cached_property
    def components(self) -> Tuple[FrozenSet[Symbol], ...]:
        """Strongly connected components in a deterministic order."""
        found = [
            frozenset(c)
            for c in nx.strongly_connected_components(self.digraph)
        ]
        return tuple(
            sorted(found, key=lambda c: min(x.sort_key for x in c))
        )

    @cached_property
    def component_of(self) -> Dict[Symbol, int]:
        return {x: i for i, c in enumerate(self.components) for x in c}

    @cached_property
    def cyclic_components(self) -> Tuple[int, ...]:
        """Indices of components that carry a directed cycle."""
        return tuple(
            i
            for i, c in enumerate(self.components)
            if len(c) > 1
            or any(self.digraph.has_edge(x, x) for x in c)
        )

    @cached_property
    def cycle_nodes(self) -> FrozenSet[Symbol]:
        return frozenset(
            x for i in self.cyclic_components for x in self.components[i]
        )


@lru_cache(maxsize=64)
def transition_digraph(g: SeparatedGraph) -> TransitionDigraph:
    return TransitionDigraph(g)


def reachable(td: TransitionDigraph, a: Symbol, b: Symbol) -> bool:
    """a ⇝ b, including the empty walk when a == b."""
    return a == b or b in td.descendants(a)


def cycle_nodes(td: TransitionDigraph) -> FrozenSet[Symbol]:
    """Symbols lying on a directed cycle of the transition digraph, i.e.
    first symbols of cycles."""
    return td.cycle_nodes


def shortest_walk(
    td: TransitionDigraph,
    starts: Iterable[Symbol],
    accept: Callable[[Symbol], bool],
    through: Optional[Callable[[Symbol], bool]] = None,
) -> Optional[Word]:
    """Shortest, then lexicographically least, walk from one of ``starts``
    to a symbol satisfying ``accept``.

    Only symbols satisfying ``through`` are entered after the start.
    """
    starts = sorted(set(starts), key=lambda x: x.sort_key)
    parent: Dict[Symbol, Optional[Symbol]] = {x: None for x in starts}
    queue = deque(starts)
    while queue:
        node = queue.popleft()
        if accept(node):
            walk = [node]
            while parent[walk[-1]] is not None:
                walk.append(parent[walk[-1]])
            return tuple(reversed(walk))
        for nxt in td.successors(node):
            if nxt in parent or (through is not None and not through(nxt)):
                continue
            parent[nxt] = node
            queue.append(nxt)
    return None


def find_return(
    g: SeparatedGraph, p: Path, allow_trivial: bool = True
) -> Optional[Path]:
    """A shortest admissible β such that βp is a closed path.

    Parameters
    ----------
    g : SeparatedGraph
    p : Path
        A non-trivial admissible path.
    allow_trivial : bool, optional
        Whether a closed ``p`` already counts as returning (β trivial).

    Returns
    -------
    Path or None
        The return path β, trivial when allowed and ``p`` is closed.
    """
    if p.is_trivial:
        raise PreconditionError("a trivial path cannot allow a return")
    if allow_trivial and p.is_closed:
        return trivial_path(g, p.range)
    td = transition_digraph(g)
    walk = shortest_walk(
        td,
        td.successors(p.terminal),
        lambda x: range_of(g, x) == p.source,
    )
    return None if walk is None else make_path(g, walk)


def allows_return(
    g: SeparatedGraph, p: Path, allow_trivial: bool = True
) -> bool:
    """Whether some admissible β makes βp a closed path."""
    return find_return(g, p, allow_trivial=allow_trivial) is not None


def enumerate_paths(
    g: SeparatedGraph, vertex: str, max_len: int
) -> List[Path]:
    """All admissible paths from ``vertex`` of length at most ``max_len``.

    The trivial path comes first; the rest follow in lexicographic order.
    """
    results = [trivial_path(g, vertex)]

    def extend(word: Word, vertices: Tuple[str, ...]):
        if len(word) == max_len:
            return
        for x in symbols_from(g, vertices[-1]):
            if word and not allowed(g, word[-1], x):
                continue
            new_word = word + (x,)
            new_vertices = vertices + (range_of(g, x),)
            results.append(Path(new_word, new_vertices))
            extend(new_word, new_vertices)

    extend((), (vertex,))
    return results
