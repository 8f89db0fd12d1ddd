"""Command-line interface: ``sepgraph <command> GRAPH.sgr [options]``.

Every command prints one JSON report on stdout. Exit codes are 0 on
success, 1 when ``check-n`` finds Condition (N) violated and 2 for input
errors.
"""

import argparse
import json
import logging
import sys
from typing import Callable, Dict, List, Optional, Tuple

from sepgraph import __version__
from sepgraph.admissibility import (
    format_word,
    make_path,
    parse_word,
)
from sepgraph.condition_n import (
    FailureWitness,
    check_condition_n,
    verify_failure_witness,
)
from sepgraph.decomposition import decompose, stratify_branch_free
from sepgraph.dynamics import (
    DEFAULT_DEPTH,
    DomainError,
    RulePattern,
    act,
    dump_pattern,
    first_choice,
    folner_mean_check,
    folner_ratio,
    folner_set,
    iter_patterns,
    seeded_choice,
    stabilizer_witness,
)
from sepgraph.graph_core import (
    PreconditionError,
    SeparatedGraph,
    SeparatedGraphError,
    read_sgr,
)
from sepgraph.monoid import (
    CHECKS,
    DEFAULT_BOUND,
    equal,
    leq,
    parse_element,
    presentation,
)
from sepgraph.orientation import (
    Orientation,
    as_orientation,
    classify_edges,
    read_orientation,
    synthesize_orientation,
    verify_orientation,
    write_orientation,
)

logger = logging.getLogger(__name__)

Payload = Dict[str, object]


def _witness_payload(g: SeparatedGraph, fw: FailureWitness) -> Payload:
    return {
        "vertex": fw.vertex,
        "alpha": format_word(fw.alpha.word),
        "beta": format_word(fw.beta.word),
        "gamma": format_word(fw.gamma.word),
        "verified": verify_failure_witness(g, fw),
    }


def cmd_validate(g: SeparatedGraph, args) -> Tuple[Payload, int]:
    """Report success once the graph file has parsed."""
    return {"verdict": True}, 0


def cmd_analyze(g: SeparatedGraph, args) -> Tuple[Payload, int]:
    """Per-vertex table of return counts, branching and local orientations.

    Parameters
    ----------
    g : SeparatedGraph
    args : argparse.Namespace
        Uses ``strict_returns``.

    Returns
    -------
    (payload, exit code)
        The exit code is always 0, whatever the verdict.
    """
    report = check_condition_n(g, allow_trivial=not args.strict_returns)
    table = []
    for vertex, row in report.vertices.items():
        local = row.orientation
        table.append(
            {
                "vertex": vertex,
                "return_count": row.return_count,
                "branching": row.branching,
                "local_orientation": (
                    None
                    if local is None
                    else {"kind": local.kind, "port": str(local.port)}
                ),
                "witness": row.witness is not None,
            }
        )
    return {"verdict": report.verdict, "branching": table}, 0


def cmd_check_n(g: SeparatedGraph, args) -> Tuple[Payload, int]:
    """Decide Condition (N); exit code 1 when it fails.

    With ``--witness`` the payload carries the cycles α, β and their meet
    γ at the first failing vertex, re-verified independently.
    """
    report = check_condition_n(g, allow_trivial=not args.strict_returns)
    payload: Payload = {
        "verdict": report.verdict,
        "branching": sorted(report.branching),
    }
    if args.witness:
        fw = report.witness
        payload["witness"] = None if fw is None else _witness_payload(g, fw)
    return payload, 0 if report.verdict else 1


def cmd_decompose(g: SeparatedGraph, args) -> Tuple[Payload, int]:
    """Branching, branch-free and acyclic parts, edge types of the
    branching subgraph and the strata of the branch-free subgraph."""
    d = decompose(g)
    subgraphs: Payload = {
        "branching": sorted(d.branching_part.members),
        "branch_free": sorted(d.branch_free_part.members),
        "acyclic": sorted(d.acyclic_part.members),
        "branching_vertices": list(d.branching_vertices),
        "weakly_branching": sorted(d.weakly_branching.members),
        "critical_edges": sorted(d.critical_edges),
    }
    if d.branching_part.members:
        types = classify_edges(d.branching_subgraph)
        subgraphs["edge_types"] = {e: t.value for e, t in types.items()}
    strata = stratify_branch_free(d.branch_free_subgraph)
    return {
        "subgraphs": subgraphs,
        "strata": [sorted(s) for s in strata.strata],
    }, 0


def _orientation_payload(o: Orientation) -> Payload:
    return {"kind": o.kind, "signs": dict(sorted(o.signs.items()))}


def cmd_orient(g: SeparatedGraph, args) -> Tuple[Payload, int]:
    """Verify an orientation file, or synthesize the proper orientation of
    the branching subgraph.

    Parameters
    ----------
    g : SeparatedGraph
    args : argparse.Namespace
        ``verify`` names an orientation file to classify; otherwise the
        synthesized signs are reported and written to ``output`` if given.

    Returns
    -------
    (payload, exit code)
    """
    payload: Payload = {}
    if args.verify:
        signs = read_orientation(args.verify)
        check = verify_orientation(g, signs)
        payload["verdict"] = check.kind != "invalid"
        payload["orientation"] = {
            "kind": check.kind,
            "cases": dict(sorted(check.cases.items())),
        }
        return payload, 0
    sub = decompose(g).branching_subgraph
    o = synthesize_orientation(sub)
    if args.output:
        write_orientation(o.signs, args.output)
        logger.info("Wrote orientation to %s", args.output)
    payload["orientation"] = dict(
        _orientation_payload(o), subgraph=list(sub.vertices)
    )
    return payload, 0


def _load_orientation(g: SeparatedGraph, args) -> Orientation:
    if args.orientation:
        return as_orientation(g, read_orientation(args.orientation))
    return synthesize_orientation(g)


def _folner_payload(g: SeparatedGraph, args, word) -> Payload:
    """Følner set of size n at the base vertex and one ratio row per word.

    For a word w and a set of size n = |w| + k the translate ratio is at
    most |w| / (|w| + k), i.e. |w| / n, which is reported as ``bound``
    together with the offset k.
    """
    n = args.folner
    o = _load_orientation(g, args)
    words = [word] if word else None
    depth = max(args.depth, n + 2 * max(len(word), 1))
    choose = first_choice if args.seed is None else seeded_choice(args.seed)
    p = RulePattern(g, args.at, depth, choose)
    if words is None:
        words = [(x,) for x in p.children(())]
    fs = folner_set(g, o, p, n, include_identity=args.include_identity)
    checks = []
    for w in words:
        if len(w) > n:
            raise PreconditionError(
                f"Følner size {n} is smaller than |{format_word(w)}|"
            )
        lhs, rhs = folner_mean_check(
            g, o, p, n, w, include_identity=args.include_identity
        )
        checks.append(
            {
                "word": format_word(w),
                "ratio": folner_ratio(
                    g, o, p, n, w, include_identity=args.include_identity
                ),
                "bound": len(w) / n,
                "offset": n - len(w),
                "mean_distance": lhs,
                "mean_bound": rhs,
            }
        )
    return {
        "n": n,
        "members": [format_word(m) for m in fs.members],
        "translates": checks,
    }


def cmd_dynamics(g: SeparatedGraph, args) -> Tuple[Payload, int]:
    """Enumerate patterns at ``--at``, optionally acting on them and
    reporting Følner sets and a stabilizer witness.

    Parameters
    ----------
    g : SeparatedGraph
    args : argparse.Namespace
        ``folner`` is the Følner set size n. Each translate row reports
        the measured ratio next to ``bound`` = |w| / n and ``offset`` =
        n - |w|, so the bound reads |w| / (|w| + offset).

    Returns
    -------
    (payload, exit code)

    Raises
    ------
    DomainError
        If no pattern of the requested depth contains ``--act``.
    """
    if args.at is None:
        if not g.vertices:
            raise PreconditionError("graph has no vertices")
        args.at = g.vertices[0]
    g.check_vertex(args.at)
    word = parse_word(args.act) if args.act else ()
    if word:
        make_path(g, word)
    patterns: Payload = {"base": args.at, "depth": args.depth}
    dumps, count, acted = [], 0, None
    for p in iter_patterns(g, args.at, args.depth):
        count += 1
        if len(dumps) < args.limit:
            dumps.append(dump_pattern(p))
        if word and acted is None and p.contains(word):
            acted = act(g, p, word)
    patterns.update(count=count, dumps=dumps)
    if word:
        if acted is None:
            raise DomainError(
                f"no depth-{args.depth} pattern at {args.at} contains "
                f"{format_word(word)}"
            )
        patterns["act"] = {
            "word": format_word(word),
            "result": dump_pattern(acted),
        }
    payload: Payload = {"patterns": patterns}
    if args.folner is not None:
        payload["folner"] = _folner_payload(g, args, word)
    if args.stabilizer_witness:
        fw = check_condition_n(g).witness
        if fw is None:
            payload["witness"] = None
        else:
            sw = stabilizer_witness(g, fw, args.depth)
            payload["witness"] = dict(
                _witness_payload(g, fw),
                members=len(sw.pattern),
                stabilized=sw.verified,
                free=sw.free,
            )
    return payload, 0


def cmd_monoid(g: SeparatedGraph, args) -> Tuple[Payload, int]:
    """Presentation of M(E, C) and bounded cancellation checks.

    Verdicts are ``true``, ``false`` or ``unknown``; ``unknown`` means the
    search hit ``--bound`` before deciding some instance.
    """
    pres = presentation(g)
    result: Payload = {
        "generators": list(pres.generators),
        "relations": [str(r) for r in pres.relations],
        "bound": args.bound,
    }
    names = list(CHECKS) if args.check == "all" else [args.check]
    checks = {}
    for name in names:
        found = CHECKS[name](pres, args.bound)
        checks[name] = {
            "verdict": found.verdict.value,
            "counterexample": (
                None
                if found.counterexample is None
                else {k: str(v) for k, v in found.counterexample.items()}
            ),
            "undecided": found.undecided,
        }
    result["checks"] = checks
    if args.equal:
        a, b = (parse_element(x) for x in args.equal)
        result["equal"] = equal(pres, a, b, args.bound).value
    if args.leq:
        a, b = (parse_element(x) for x in args.leq)
        result["leq"] = leq(pres, a, b, args.bound).value
    return {"monoid": result}, 0


COMMANDS: Dict[str, Callable] = {
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "check-n": cmd_check_n,
    "decompose": cmd_decompose,
    "orient": cmd_orient,
    "dynamics": cmd_dynamics,
    "monoid": cmd_monoid,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepgraph",
        description="Analyse finitely separated graphs",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Log debug output"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        sub = subparsers.add_parser(name, help=help)
        sub.add_argument("graph", help="Path to a .sgr file")
        return sub

    add("validate", "Parse and validate a graph")
    analyze = add("analyze", "Per-vertex branching and local orientations")
    check_n = add("check-n", "Decide Condition (N)")
    check_n.add_argument(
        "--witness",
        action="store_true",
        help="Include a failure witness when Condition (N) fails",
    )
    for sub in (analyze, check_n):
        sub.add_argument(
            "--strict-returns",
            action="store_true",
            help="Require a non-trivial closing path when counting returns",
        )
    add("decompose", "Branching, branch-free and acyclic parts")

    orient = add("orient", "Synthesize or verify an orientation")
    orient.add_argument(
        "--synthesize",
        action="store_true",
        help="Synthesize a proper orientation (default)",
    )
    orient.add_argument("--verify", metavar="FILE", help="Orientation file")
    orient.add_argument(
        "--output", metavar="FILE", help="Write the synthesized orientation"
    )

    dynamics = add("dynamics", "Patterns, partial action and Følner sets")
    dynamics.add_argument("--at", metavar="VERTEX", help="Base vertex")
    dynamics.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    dynamics.add_argument("--act", metavar="PATH", help="Path literal")
    dynamics.add_argument(
        "--folner",
        type=int,
        metavar="N",
        help="Følner set size; each ratio is reported with the bound |w|/N",
    )
    dynamics.add_argument("--orientation", metavar="FILE")
    dynamics.add_argument(
        "--include-identity",
        action="store_true",
        help="Add the trivial path to Følner sets",
    )
    dynamics.add_argument("--stabilizer-witness", action="store_true")
    dynamics.add_argument(
        "--limit", type=int, default=1, help="Number of pattern dumps"
    )
    dynamics.add_argument(
        "--seed", type=int, help="Seeded choice rule for Følner patterns"
    )

    monoid = add("monoid", "Graph monoid cancellation properties")
    monoid.add_argument(
        "--check", choices=sorted(CHECKS) + ["all"], default="all"
    )
    monoid.add_argument("--bound", type=int, default=DEFAULT_BOUND)
    monoid.add_argument("--equal", nargs=2, metavar=("A", "B"))
    monoid.add_argument("--leq", nargs=2, metavar=("A", "B"))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        g = read_sgr(args.graph)
        payload, code = COMMANDS[args.command](g, args)
    except (SeparatedGraphError, OSError) as exc:
        print(f"sepgraph: error: {exc}", file=sys.stderr)
        return 2
    report = {
        "command": args.command,
        "graph": g.summary(),
        "version": __version__,
        **payload,
    }
    print(json.dumps(report, sort_keys=True, indent=2))
    return code
