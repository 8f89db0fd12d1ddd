"""Finite-depth configurations, the partial action and Følner sets.

A configuration ξ based at v is a right-convex set of admissible paths
from v. At each member α it contains exactly the one-step extensions
s⁻¹(r(α)) together with one inverse e_X⁻¹ for every X ∈ C_{r(α)}. A
pattern is the truncation of a configuration to the members of length at
most ``depth``.

Patterns come in three kinds sharing one interface:

* :class:`Pattern` stores its members explicitly.
* :class:`RulePattern` evaluates members lazily from a choice rule.
* :class:`TranslatedPattern` is a lazily translated pattern ξ·w⁻¹.

Everything else is derived from :meth:`BasePattern.local_configuration`.
"""

import itertools
import logging
import zlib
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import (
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Optional,
    Tuple,
)

import numpy as np

from sepgraph.admissibility import (
    Symbol,
    Word,
    format_word,
    invert,
    is_admissible,
    is_reduced,
    multiply,
    range_of,
    source_of,
    word_key,
)
from sepgraph.condition_n import FailureWitness, branching_vertices
from sepgraph.decomposition import cycle_classes
from sepgraph.graph_core import Group, PreconditionError, SeparatedGraph
from sepgraph.orientation import Orientation

logger = logging.getLogger(__name__)

DEFAULT_DEPTH = 4

ChoiceRule = Callable[[Word, Group], str]


class DomainError(PreconditionError):
    """A word outside the domain of the partial action."""


def first_choice(word: Word, group: Group) -> str:
    return group.members[0]


def seeded_choice(seed: int) -> ChoiceRule:
    """A reproducible pseudo-random choice rule."""

    def choose(word: Word, group: Group) -> str:
        key = f"{seed}|{format_word(word)}|{group.range}|{group.label}"
        return group.members[zlib.crc32(key.encode()) % len(group.members)]

    return choose


def rule_configuration(
    g: SeparatedGraph, base: str, word: Word, choose: ChoiceRule
) -> FrozenSet[Symbol]:
    """ξ_α at the member ``word``: out-edges plus one e_X⁻¹ per group.

    The group of a positive last symbol is forced to that symbol.
    """
    vertex = range_of(g, word[-1]) if word else base
    last = word[-1] if word else None
    local = {Symbol(e, 1) for e in g.out_edges(vertex)}
    for group in g.groups_at(vertex):
        if last is not None and last.positive and last.edge in group.members:
            local.add(Symbol(last.edge, -1))
        else:
            local.add(Symbol(choose(word, group), -1))
    return frozenset(local)


class BasePattern(ABC):
    base: str
    depth: int

    @abstractmethod
    def local_configuration(self, word: Word) -> FrozenSet[Symbol]:
        """Symbols x with x·word a member; ``word`` must be a member of
        length less than ``depth``."""

    @abstractmethod
    def vertex_of(self, word: Word) -> str:
        """r(word) for a member ``word``."""

    def contains(self, word: Word) -> bool:
        if len(word) > self.depth or not is_reduced(word):
            return False
        return all(
            x in self.local_configuration(word[:i])
            for i, x in enumerate(word)
        )

    def __contains__(self, word) -> bool:
        return self.contains(tuple(word))

    def children(self, word: Word) -> Tuple[Symbol, ...]:
        if len(word) >= self.depth:
            return ()
        local = set(self.local_configuration(word))
        if word:
            local.discard(word[-1].inverse())
        return tuple(sorted(local, key=lambda x: x.sort_key))

    def iter_members(self) -> Iterator[Word]:
        stack = [()]
        while stack:
            word = stack.pop()
            yield word
            stack.extend(word + (x,) for x in reversed(self.children(word)))

    def materialize(self) -> "Pattern":
        members = sorted(
            ((w, self.vertex_of(w)) for w in self.iter_members()),
            key=lambda m: word_key(m[0]),
        )
        return Pattern(self.base, self.depth, tuple(members))


@dataclass(frozen=True)
class Pattern(BasePattern):
    """A pattern with explicitly stored members and their range vertices."""

    base: str
    depth: int
    members: Tuple[Tuple[Word, str], ...]

    @cached_property
    def _vertex(self) -> Dict[Word, str]:
        return dict(self.members)

    @cached_property
    def _children(self) -> Dict[Word, FrozenSet[Symbol]]:
        found: Dict[Word, set] = {w: set() for w, _ in self.members}
        for word, _ in self.members:
            if word:
                found[word[:-1]].add(word[-1])
        return {w: frozenset(xs) for w, xs in found.items()}

    @property
    def words(self) -> Tuple[Word, ...]:
        return tuple(w for w, _ in self.members)

    def contains(self, word: Word) -> bool:
        return tuple(word) in self._vertex

    def vertex_of(self, word: Word) -> str:
        return self._vertex[tuple(word)]

    def local_configuration(self, word: Word) -> FrozenSet[Symbol]:
        local = set(self._children[word])
        if word:
            local.add(word[-1].inverse())
        return frozenset(local)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class RulePattern(BasePattern):
    graph: SeparatedGraph
    base: str
    depth: int
    choose: ChoiceRule = first_choice

    def vertex_of(self, word: Word) -> str:
        return range_of(self.graph, word[-1]) if word else self.base

    def local_configuration(self, word: Word) -> FrozenSet[Symbol]:
        return rule_configuration(self.graph, self.base, word, self.choose)


@dataclass(frozen=True, eq=False)
class TranslatedPattern(BasePattern):
    """θ_w(ξ) = ξ·w⁻¹ evaluated on demand."""

    source: BasePattern
    offset: Word

    @property
    def base(self) -> str:
        return self.source.vertex_of(self.offset)

    @property
    def depth(self) -> int:
        return self.source.depth - len(self.offset)

    def vertex_of(self, word: Word) -> str:
        return self.source.vertex_of(multiply(word, self.offset))

    def local_configuration(self, word: Word) -> FrozenSet[Symbol]:
        return self.source.local_configuration(multiply(word, self.offset))


def _child_options(
    g: SeparatedGraph, word: Word, vertex: str
) -> Tuple[Tuple[Symbol, ...], List[List[Symbol]]]:
    parent = word[-1].inverse() if word else None
    fixed = tuple(
        Symbol(e, 1) for e in g.out_edges(vertex) if Symbol(e, 1) != parent
    )
    options = []
    for group in g.groups_at(vertex):
        if parent is not None and parent.edge in group.members:
            if not parent.positive:
                continue
        options.append([Symbol(e, -1) for e in group.members])
    return fixed, options


def _grow(
    g: SeparatedGraph,
    base: str,
    depth: int,
    members: Dict[Word, str],
    pending: List[Word],
) -> Iterator[Pattern]:
    if not pending:
        ordered = sorted(members.items(), key=lambda m: word_key(m[0]))
        yield Pattern(base, depth, tuple(ordered))
        return
    word, rest = pending[0], pending[1:]
    fixed, options = _child_options(g, word, members[word])
    for picks in itertools.product(*options):
        grown = dict(members)
        queue = list(rest)
        for x in fixed + picks:
            child = word + (x,)
            grown[child] = range_of(g, x)
            if len(child) < depth:
                queue.append(child)
        yield from _grow(g, base, depth, grown, queue)


def iter_patterns(g: SeparatedGraph, vertex: str, depth: int):
    """Lazily generate all patterns of the given depth based at ``vertex``."""
    g.check_vertex(vertex)
    if depth < 0:
        raise PreconditionError("depth must be non-negative")
    yield from _grow(g, vertex, depth, {(): vertex}, [()] if depth else [])


def enumerate_patterns(
    g: SeparatedGraph, vertex: str, depth: int
) -> List[Pattern]:
    patterns = list(iter_patterns(g, vertex, depth))
    logger.debug(
        "%d patterns of depth %d at %s", len(patterns), depth, vertex
    )
    return patterns


def truncate(p: BasePattern, depth: int) -> Pattern:
    if depth > p.depth:
        raise PreconditionError(f"cannot extend depth {p.depth} to {depth}")
    return RestrictedPattern(p, depth).materialize()


@dataclass(frozen=True, eq=False)
class RestrictedPattern(BasePattern):
    source: BasePattern
    depth: int

    @property
    def base(self) -> str:
        return self.source.base

    def vertex_of(self, word: Word) -> str:
        return self.source.vertex_of(word)

    def local_configuration(self, word: Word) -> FrozenSet[Symbol]:
        return self.source.local_configuration(word)


def is_valid_pattern(g: SeparatedGraph, p: Pattern) -> bool:
    """Check right-convexity and the local rule at every interior member."""
    for word, vertex in p.members:
        if word and not p.contains(word[:-1]):
            return False
        if word and range_of(g, word[-1]) != vertex:
            return False
        if len(word) >= p.depth:
            continue
        local = p.local_configuration(word)
        positive = {x for x in local if x.positive}
        if positive != {Symbol(e, 1) for e in g.out_edges(vertex)}:
            return False
        negative = [x for x in local if not x.positive]
        if any(range_of(g, x.inverse()) != vertex for x in negative):
            return False
        labels = sorted(g.group_of(x.edge).label for x in negative)
        if labels != [X.label for X in g.groups_at(vertex)]:
            return False
    return True


def act(g: SeparatedGraph, p: BasePattern, w: Word) -> BasePattern:
    """θ_w(ξ) = ξ·w⁻¹, defined when w is a member of ξ.

    Explicit patterns yield explicit patterns; lazy ones stay lazy.

    Raises
    ------
    DomainError
        If ``w`` is longer than the depth or not a member of ``p``.
    """
    w = tuple(w)
    if len(w) > p.depth:
        raise DomainError(
            f"{format_word(w)} is longer than the pattern depth {p.depth}"
        )
    if not p.contains(w):
        raise DomainError(f"{format_word(w)} is not a member of the pattern")
    if not isinstance(p, Pattern):
        return TranslatedPattern(p, w)
    depth = p.depth - len(w)
    w_inverse = invert(w)
    moved = {}
    for word, vertex in p.members:
        image = multiply(word, w_inverse)
        if len(image) <= depth:
            moved[image] = vertex
    ordered = sorted(moved.items(), key=lambda m: word_key(m[0]))
    return Pattern(p.vertex_of(w), depth, tuple(ordered))


def _forced_choices(
    g: SeparatedGraph, words: Iterable[Word]
) -> Optional[Dict[Tuple[Word, Tuple[str, str]], str]]:
    forced = {}
    for word in words:
        for i, x in enumerate(word):
            if x.positive:
                continue
            key = (word[:i], g.group_of(x.edge).key)
            if forced.setdefault(key, x.edge) != x.edge:
                return None
    return forced


def pattern_containing(
    g: SeparatedGraph, words: Iterable[Word], depth: int
) -> Optional[RulePattern]:
    """A pattern of the given depth containing all ``words``, or None.

    All words must start at a common vertex.
    """
    words = [tuple(w) for w in words if w]
    if not words:
        return None
    bases = {source_of(g, w[0]) for w in words}
    if len(bases) != 1:
        return None
    forced = _forced_choices(g, words)
    if forced is None:
        return None

    def choose(word: Word, group: Group) -> str:
        return forced.get((word, group.key), group.members[0])

    pattern = RulePattern(g, bases.pop(), depth, choose)
    if all(pattern.contains(w) for w in words):
        return pattern
    return None


def domain_nonempty(g: SeparatedGraph, w: Word) -> bool:
    """Whether some configuration contains w⁻¹."""
    w = tuple(w)
    if not w:
        return True
    for x in w:
        g.edge(x.edge)
    return pattern_containing(g, [invert(w)], len(w)) is not None


@dataclass(frozen=True)
class Animal:
    members: FrozenSet[Word]

    def __contains__(self, word) -> bool:
        return tuple(word) in self.members

    def __len__(self) -> int:
        return len(self.members)


def animal_closure(g: SeparatedGraph, words: Iterable[Word]) -> Animal:
    """⟨S⟩: the right-convex closure of S ∪ {1}.

    Raises
    ------
    PreconditionError
        If S adds nothing to {1} or some quotient α·β⁻¹ is inadmissible.
    """
    generators = {tuple(w) for w in words} | {()}
    if len(generators) < 2:
        raise PreconditionError("an animal must strictly contain {1}")
    for a, b in itertools.permutations(sorted(generators, key=word_key), 2):
        if not is_admissible(g, multiply(a, invert(b))):
            raise PreconditionError(
                f"{format_word(a)}·({format_word(b)})⁻¹ is not admissible"
            )
    closure = {w[:k] for w in generators for k in range(len(w) + 1)}
    return Animal(frozenset(closure))


@dataclass(frozen=True)
class FolnerSet:
    pattern: BasePattern = field(compare=False)
    n: int
    members: Tuple[Word, ...]

    def __len__(self) -> int:
        return len(self.members)


def _require_proper(o: Orientation) -> None:
    if o.kind != "proper":
        raise PreconditionError(
            f"Følner sets need a proper orientation, got {o.kind}"
        )


def positive_ray(o: Orientation, p: BasePattern, n: int) -> List[Word]:
    """ξ_0 = 1, ξ_1, ..., ξ_n: the positively oriented members of ξ."""
    ray = [()]
    for _ in range(n):
        word = ray[-1]
        step = [x for x in p.children(word) if o.is_positive(x)]
        if len(step) != 1:
            raise PreconditionError(
                f"{len(step)} positive continuations after "
                f"{format_word(word)}, orientation is not proper here"
            )
        ray.append(word + (step[0],))
    return ray


def folner_set(
    g: SeparatedGraph,
    o: Orientation,
    p: BasePattern,
    n: int,
    include_identity: bool = False,
) -> FolnerSet:
    """F_n^ξ = {ξ_k | 1 ≤ k ≤ n}, with ξ_0 = 1 added on request."""
    _require_proper(o)
    if n > p.depth:
        raise PreconditionError(f"n = {n} exceeds pattern depth {p.depth}")
    ray = positive_ray(o, p, n)
    members = tuple(ray if include_identity else ray[1:])
    return FolnerSet(p, n, members)


def folner_ratio(
    g: SeparatedGraph,
    o: Orientation,
    p: BasePattern,
    n: int,
    w: Word,
    include_identity: bool = False,
) -> float:
    """|F^ξ·w⁻¹ ∖ F^{θ_w(ξ)}| / |F^ξ|."""
    w = tuple(w)
    here = folner_set(g, o, p, n, include_identity)
    there = folner_set(g, o, act(g, p, w), n, include_identity)
    moved = {multiply(m, invert(w)) for m in here.members}
    return len(moved - set(there.members)) / len(here.members)


def folner_mean_check(
    g: SeparatedGraph,
    o: Orientation,
    p: BasePattern,
    n: int,
    w: Word,
    include_identity: bool = False,
) -> Tuple[float, float]:
    """ℓ¹ distance between the translated uniform mean at ξ and the mean at
    θ_w(ξ), together with the bound 2·r₁ + 2·r₂ from the two Følner
    ratios."""
    w = tuple(w)
    here = folner_set(g, o, p, n, include_identity)
    moved_pattern = act(g, p, w)
    there = folner_set(g, o, moved_pattern, n, include_identity)
    moved = [multiply(m, invert(w)) for m in here.members]
    support = sorted(set(moved) | set(there.members), key=word_key)
    index = {word: i for i, word in enumerate(support)}
    translated = np.zeros(len(support))
    translated[[index[m] for m in moved]] = 1.0 / len(moved)
    target = np.zeros(len(support))
    target[[index[m] for m in there.members]] = 1.0 / len(there.members)
    lhs = float(np.abs(translated - target).sum())
    r1 = folner_ratio(g, o, p, n, w, include_identity)
    r2 = folner_ratio(g, o, moved_pattern, n, invert(w), include_identity)
    return lhs, 2 * r1 + 2 * r2


@dataclass(frozen=True, eq=False)
class StabilizedPattern(BasePattern):
    """The configuration ⊔_σ χ·σ built from a fundamental domain χ of a
    configuration η, with σ ranging over the group generated by α, β.

    Members are mapped back to χ by following the walk from the root and
    jumping to a new copy whenever an exit α, β, t(α)⁻¹ or t(β)⁻¹ of χ
    is reached.
    """

    graph: SeparatedGraph
    base: str
    depth: int
    alpha: Word
    beta: Word
    choose: ChoiceRule
    _reps: Dict[Word, Tuple[Word, Word]] = field(
        default_factory=dict, init=False, repr=False
    )

    @cached_property
    def _jumps(self) -> Dict[Word, Tuple[Word, Word]]:
        """Exit of χ mapped to (representative, group factor)."""
        alpha, beta = self.alpha, self.beta
        return {
            alpha: ((), alpha),
            beta: ((), beta),
            (alpha[-1].inverse(),): (alpha[:-1], invert(alpha)),
            (beta[-1].inverse(),): (beta[:-1], invert(beta)),
        }

    def representative(self, word: Word) -> Tuple[Word, Word]:
        """(c, σ) with word = c·σ and c ∈ χ."""
        if word in self._reps:
            return self._reps[word]
        if not word:
            rep = ((), ())
        else:
            c, sigma = self.representative(word[:-1])
            c = multiply((word[-1],), c)
            if c in self._jumps:
                c, factor = self._jumps[c]
                sigma = multiply(factor, sigma)
            rep = (c, sigma)
        self._reps[word] = rep
        return rep

    def vertex_of(self, word: Word) -> str:
        return range_of(self.graph, word[-1]) if word else self.base

    def local_configuration(self, word: Word) -> FrozenSet[Symbol]:
        c, _ = self.representative(word)
        return rule_configuration(self.graph, self.base, c, self.choose)


@dataclass(frozen=True)
class StabilizerWitness:
    pattern: Pattern
    alpha: Word
    beta: Word
    verified: bool
    free: bool


def _reduced_products(
    alpha: Word, beta: Word, length: int
) -> List[Tuple[Tuple[int, ...], Word]]:
    letters = [alpha, invert(alpha), beta, invert(beta)]
    found = []
    for k in range(length + 1):
        for combo in itertools.product(range(4), repeat=k):
            if any(a ^ 1 == b for a, b in zip(combo, combo[1:])):
                continue
            word: Word = ()
            for letter in combo:
                word = multiply(letters[letter], word)
            found.append((combo, word))
    return found


def stabilizer_witness(
    g: SeparatedGraph, fw: FailureWitness, depth: int
) -> StabilizerWitness:
    """A pattern fixed by the free subgroup generated by a failure witness.

    Raises
    ------
    PreconditionError
        If ``depth`` is smaller than the length of α or β, or η cannot be
        chosen through the exits.
    """
    alpha, beta = fw.alpha.word, fw.beta.word
    if depth < max(len(alpha), len(beta)):
        raise PreconditionError(
            f"depth {depth} cannot hold cycles of length "
            f"{len(alpha)} and {len(beta)}"
        )
    exits = [alpha, beta, (alpha[-1].inverse(),), (beta[-1].inverse(),)]
    forced = _forced_choices(g, exits)
    if forced is None:
        raise PreconditionError(
            "exits of the witness force conflicting choices"
        )

    def choose(word: Word, group: Group) -> str:
        return forced.get((word, group.key), group.members[0])

    lazy = StabilizedPattern(g, fw.vertex, depth, alpha, beta, choose)
    pattern = lazy.materialize()
    verified = True
    for generator in (alpha, beta):
        if not pattern.contains(generator):
            verified = False
            break
        moved = act(g, pattern, generator)
        if moved != truncate(pattern, moved.depth) or (
            moved.base != pattern.base
        ):
            verified = False
    products = _reduced_products(alpha, beta, 3)
    free = len({word for _, word in products}) == len(products)
    logger.debug(
        "Stabilizer witness at %s: %d members, verified=%s, free=%s",
        fw.vertex,
        len(pattern),
        verified,
        free,
    )
    return StabilizerWitness(pattern, alpha, beta, verified, free)


def linear_folner(g: SeparatedGraph, p: BasePattern) -> FrozenSet[Word]:
    """Members of ξ ending at a vertex that admits a cycle.

    Raises
    ------
    PreconditionError
        If ``g`` has a branching vertex or more than one cycle class.
    """
    if branching_vertices(g):
        raise PreconditionError("graph has branching vertices")
    classes = cycle_classes(g)
    if len(classes) > 1:
        raise PreconditionError(
            f"graph has {len(classes)} cycle classes, expected one"
        )
    cyclic = classes[0] if classes else frozenset()
    return frozenset(
        w for w in p.iter_members() if p.vertex_of(w) in cyclic
    )


@dataclass(frozen=True)
class LinearProfile:
    distance: Optional[int]
    irregular: Tuple[Word, ...]


def linear_folner_profile(g: SeparatedGraph, p: BasePattern) -> LinearProfile:
    """Distance of F^ξ to 1 and the interior members of F^ξ whose number of
    tree neighbours inside F^ξ is not two."""
    members = linear_folner(g, p)
    if not members:
        return LinearProfile(None, ())
    irregular = []
    for word in sorted(members, key=word_key):
        if len(word) >= p.depth:
            continue
        neighbours = [word + (x,) for x in p.children(word)]
        if word:
            neighbours.append(word[:-1])
        if sum(n in members for n in neighbours) != 2:
            irregular.append(word)
    distance = min(len(w) for w in members)
    return LinearProfile(distance, tuple(irregular))


def dump_pattern(p: BasePattern) -> str:
    materialized = p if isinstance(p, Pattern) else p.materialize()
    lines = [f"pattern base={p.base} depth={p.depth}"]
    lines += [
        f"{format_word(word)} @ {vertex}"
        for word, vertex in materialized.members
    ]
    return "\n".join(lines) + "\n"
