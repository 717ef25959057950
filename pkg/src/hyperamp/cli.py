"""Command-line surface: maf, search, first, reduce, components, classify,
oracle.

Exit codes: 0 on success, 2 when the answer is "nothing" (no self-sufficient
subnetwork, no self-amplifying hit, reduction removed everything), 1 on
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from hyperamp.classify import (
    UnclassifiableNode,
    classify_nodes,
    format_taxonomy,
    taxonomy_to_json,
)
from hyperamp.hypergraph import Hypergraph
from hyperamp.io import (
    NetworkDocument,
    ParseError,
    RunRecord,
    document_from_payload,
    document_to_payload,
    load_network,
    record_run,
    save_network,
)
from hyperamp.lp import NumericalError
from hyperamp.maf import (
    MafConfig,
    NotSelfSufficient,
    ZeroDenominator,
    bisection_maf,
    classify_amplification,
    compute_maf,
    write_trace,
)
from hyperamp.preprocess import components, reduce, solve_by_components
from hyperamp.subnet import (
    EPSILON_X,
    FeatureSpec,
    NoSelfSufficientSubnet,
    SubnetSolution,
    find_max_subnet,
    first_self_amplifying,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOTHING = 2


class _Parser(argparse.ArgumentParser):
    """Parser whose usage errors exit 1; exit 2 is reserved for empty results."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _split_labels(raw: str | None) -> list[str]:
    if not raw:
        return []
    return [part for part in (piece.strip() for piece in raw.split(","))
            if part]


def _feature_doc(doc: NetworkDocument, args) -> NetworkDocument:
    """The document with any --food/--waste/--nonamp labels folded in."""
    food = frozenset(_split_labels(getattr(args, "food", None)))
    waste = frozenset(_split_labels(getattr(args, "waste", None)))
    nonamp = frozenset(_split_labels(getattr(args, "nonamp", None)))
    if not (food or waste or nonamp):
        return doc
    merged = replace(doc, sources=doc.sources | food, sinks=doc.sinks | waste,
                     non_amplifying=doc.non_amplifying | nonamp)
    merged.validate()
    return merged


def _config(args) -> MafConfig:
    return MafConfig(epsilon_rho=args.eps, max_iterations=args.max_iter,
                     delta=args.delta)


def _config_dict(args) -> dict:
    return {"epsilon_rho": args.eps, "max_iterations": args.max_iter,
            "delta": args.delta, "seed": args.seed}


def _print_pairs(pairs: list[tuple[str, str]]) -> None:
    width = max(len(key) for key, _ in pairs)
    for key, value in pairs:
        print(f"{key.ljust(width)}  {value}")


def _print_intensity(labels: list[str], values: list[float]) -> None:
    if not labels:
        return
    width = max(len("arc"), max(len(name) for name in labels))
    print(f"{'arc'.ljust(width)}  intensity")
    for name, value in zip(labels, values):
        print(f"{name.ljust(width)}  {value!r}")


def _solution_result(doc: NetworkDocument, sol: SubnetSolution) -> dict:
    h = sol.hypergraph
    arcs = sorted(sol.active_arcs)
    return {
        "alpha": sol.alpha,
        "m": sorted(h.nodes[v] for v in sorted(sol.m)),
        "arcs": [h.arcs[j] for j in arcs],
        "intensity": {h.arcs[j]: float(sol.intensity[j]) for j in arcs},
        "converged": sol.converged,
        "iterations": sol.iterations,
        "network": document_to_payload(doc),
    }


def _print_solution(sol: SubnetSolution) -> None:
    h = sol.hypergraph
    arcs = sorted(sol.active_arcs)
    _print_pairs([
        ("alpha", repr(sol.alpha)),
        ("class", classify_amplification(sol.alpha).value),
        ("converged", "yes" if sol.converged else "no"),
        ("iterations", str(sol.iterations)),
        ("M", ", ".join(sorted(h.nodes[v] for v in sorted(sol.m)))),
        ("arcs", ", ".join(h.arcs[j] for j in arcs)),
    ])
    _print_intensity([h.arcs[j] for j in arcs],
                     [float(sol.intensity[j]) for j in arcs])


def _finish(args, record: RunRecord | None, trace) -> None:
    if record is not None and args.json:
        record.save(args.json)
    if args.trace:
        write_trace(trace, args.trace)


def _cmd_maf(args) -> int:
    h, doc = load_network(args.network)
    m = h.node_set(_split_labels(args.m))
    if not m:
        raise ValueError("--m must name at least one node")
    res = compute_maf(h, m, _config(args))
    active = [j for j in range(h.n_arcs) if res.certificate[j] > EPSILON_X]
    _print_pairs([
        ("alpha", repr(res.alpha)),
        ("class", classify_amplification(res.alpha).value),
        ("converged", "yes" if res.converged else "no"),
        ("iterations", str(res.iterations)),
        ("M", ", ".join(sorted(h.nodes[v] for v in sorted(m)))),
    ])
    _print_intensity([h.arcs[j] for j in active],
                     [float(res.certificate[j]) for j in active])
    record = record_run(
        "maf", doc, _config_dict(args), alpha=res.alpha,
        extra={
            "m": sorted(h.nodes[v] for v in sorted(m)),
            "arcs": [h.arcs[j] for j in active],
            "intensity": {h.arcs[j]: float(res.certificate[j])
                          for j in active},
            "converged": res.converged,
            "iterations": res.iterations,
            "network": document_to_payload(doc),
        },
        timings_ms=[rec.millis for rec in res.trace])
    _finish(args, record, res.trace)
    return EXIT_OK


def _run_search(args, doc: NetworkDocument, h: Hypergraph) -> SubnetSolution:
    feats = FeatureSpec(*doc.feature_indices(h))
    if args.parallel and args.parallel > 1:
        return solve_by_components(h, feats, _config(args),
                                   workers=args.parallel)
    return find_max_subnet(h, feats, _config(args))


def _cmd_search(args) -> int:
    h, doc = load_network(args.network)
    doc = _feature_doc(doc, args)
    sol = _run_search(args, doc, h)
    _print_solution(sol)
    record = record_run("search", doc, _config_dict(args), alpha=sol.alpha,
                        extra=_solution_result(doc, sol),
                        timings_ms=[rec.millis for rec in sol.trace])
    _finish(args, record, sol.trace)
    return EXIT_OK


def _cmd_first(args) -> int:
    h, doc = load_network(args.network)
    doc = _feature_doc(doc, args)
    feats = FeatureSpec(*doc.feature_indices(h))
    sol = first_self_amplifying(h, feats, _config(args))
    if sol is None:
        print("no self-amplifying subnetwork")
        _finish(args, None, [])
        return EXIT_NOTHING
    _print_solution(sol)
    record = record_run("first", doc, _config_dict(args), alpha=sol.alpha,
                        extra=_solution_result(doc, sol),
                        timings_ms=[rec.millis for rec in sol.trace])
    _finish(args, record, sol.trace)
    return EXIT_OK


def _cmd_reduce(args) -> int:
    h, doc = load_network(args.network)
    reduced, report = reduce(h)
    by_round: dict[int, tuple[list[str], list[str]]] = {}
    for v, rnd in report.removed_nodes:
        by_round.setdefault(rnd, ([], []))[0].append(h.nodes[v])
    for j, rnd in report.removed_arcs:
        by_round.setdefault(rnd, ([], []))[1].append(h.arcs[j])
    for rnd in sorted(by_round):
        nodes, arcs = by_round[rnd]
        parts = []
        if nodes:
            parts.append("nodes " + ", ".join(nodes))
        if arcs:
            parts.append("arcs " + ", ".join(arcs))
        print(f"round {rnd}: removed " + "; ".join(parts))
    print(f"reduced: {reduced.n_nodes} nodes, {reduced.n_arcs} arcs "
          f"(from {h.n_nodes}, {h.n_arcs})")
    if args.json:
        survivors = frozenset(reduced.nodes)
        out = replace(NetworkDocument.from_hypergraph(reduced, doc.name),
                      sources=doc.sources & survivors,
                      sinks=doc.sinks & survivors,
                      non_amplifying=doc.non_amplifying & survivors)
        save_network(out, args.json, fmt="json")
    if args.trace:
        write_trace([], args.trace)
    if reduced.n_arcs == 0:
        print("nothing left: no node can belong to a self-sufficient set")
        return EXIT_NOTHING
    return EXIT_OK


def _cmd_components(args) -> int:
    h, doc = load_network(args.network)
    doc = _feature_doc(doc, args)
    comps = components(h)
    for idx, comp in enumerate(comps, start=1):
        nodes = ", ".join(h.nodes[v] for v in sorted(comp.nodes))
        arcs = ", ".join(h.arcs[j] for j in sorted(comp.arcs))
        print(f"component {idx}: {len(comp.nodes)} nodes, "
              f"{len(comp.arcs)} arcs")
        print(f"  nodes: {nodes}")
        if arcs:
            print(f"  arcs: {arcs}")
    if not args.solve and not args.parallel:
        if args.json:
            payload = [{"nodes": sorted(h.nodes[v] for v in comp.nodes),
                        "arcs": sorted(h.arcs[j] for j in comp.arcs)}
                       for comp in comps]
            Path(args.json).write_text(
                json.dumps({"components": payload}, indent=2) + "\n",
                encoding="utf-8")
        if args.trace:
            write_trace([], args.trace)
        return EXIT_OK
    feats = FeatureSpec(*doc.feature_indices(h))
    sol = solve_by_components(h, feats, _config(args),
                              workers=args.parallel or 1)
    print("best component solution:")
    _print_solution(sol)
    record = record_run("components", doc, _config_dict(args), alpha=sol.alpha,
                        extra=_solution_result(doc, sol),
                        timings_ms=[rec.millis for rec in sol.trace])
    _finish(args, record, sol.trace)
    return EXIT_OK


def _solution_from_record(record: RunRecord) -> SubnetSolution:
    """Rebuild the solved subnetwork a record describes (for classification)."""
    result = record.result
    try:
        doc = document_from_payload(result["network"])
    except KeyError:
        raise ValueError(
            "the run record does not embed its network; re-run the solve "
            "with --json to produce a classifiable record") from None
    h = doc.to_hypergraph()
    m = h.node_set(result["m"])
    arcs = frozenset(h.arc_index(name) for name in result["arcs"])
    intensity = np.zeros(h.n_arcs)
    for name, value in result["intensity"].items():
        intensity[h.arc_index(name)] = float(value)
    cols = sorted(arcs)
    touched = ((h.input_matrix[:, cols] > 0)
               | (h.output_matrix[:, cols] > 0)).any(axis=1)
    return SubnetSolution(
        hypergraph=h, m=m, active_arcs=arcs,
        active_nodes=frozenset(int(v) for v in np.flatnonzero(touched)) | m,
        alpha=float(result["alpha"]), intensity=intensity,
        converged=bool(result.get("converged", True)),
        iterations=int(result.get("iterations", 0)), gap=None, trace=())


def _cmd_classify(args) -> int:
    record = RunRecord.load(args.record)
    tax = classify_nodes(_solution_from_record(record))
    print(format_taxonomy(tax))
    if args.json:
        Path(args.json).write_text(taxonomy_to_json(tax), encoding="utf-8")
    if args.trace:
        write_trace([], args.trace)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    h, doc = load_network(args.network)
    m = h.node_set(_split_labels(args.m))
    if not m:
        raise ValueError("--m must name at least one node")
    alpha = bisection_maf(h, m, tol=args.eps, delta=args.delta)
    _print_pairs([
        ("alpha", repr(alpha)),
        ("class", classify_amplification(alpha).value),
        ("M", ", ".join(sorted(h.nodes[v] for v in sorted(m)))),
    ])
    record = record_run(
        "oracle", doc, _config_dict(args), alpha=alpha,
        extra={"m": sorted(h.nodes[v] for v in sorted(m)),
               "network": document_to_payload(doc)})
    _finish(args, record, [])
    return EXIT_OK


def _add_shared(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--delta", type=float, default=1e4,
                     help="intensity upper bound (default 1e4)")
    sub.add_argument("--eps", type=float, default=1e-8,
                     help="convergence slack / oracle tolerance (default 1e-8)")
    sub.add_argument("--max-iter", type=int, default=1000,
                     help="iteration budget (default 1000)")
    sub.add_argument("--json", metavar="OUT.json",
                     help="write a JSON artifact (run record, reduced "
                          "network, component list, or taxonomy)")
    sub.add_argument("--trace", metavar="OUT.jsonl",
                     help="write the iteration trace as JSON lines")
    sub.add_argument("--seed", type=int, default=0,
                     help="recorded in artifacts; every computation is "
                          "deterministic (default 0)")


def _add_features(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--food", metavar="IDS",
                     help="comma-separated nodes that must only be consumed")
    sub.add_argument("--waste", metavar="IDS",
                     help="comma-separated nodes that must only be produced")
    sub.add_argument("--nonamp", metavar="IDS",
                     help="comma-separated nodes kept at nonpositive net "
                          "production")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hyperamp",
                     description="Detect and quantify self-amplifying "
                                 "subnetworks of directed hypergraphs.")
    subs = parser.add_subparsers(dest="command", required=True)

    maf = subs.add_parser("maf", help="amplification factor of a given M")
    maf.add_argument("network")
    maf.add_argument("--m", required=True, metavar="IDS",
                     help="comma-separated node labels forming M")
    _add_shared(maf)
    maf.set_defaults(func=_cmd_maf)

    search = subs.add_parser(
        "search", help="find the subnetwork maximizing the MAF")
    search.add_argument("network")
    _add_features(search)
    search.add_argument("--parallel", type=int, metavar="N",
                        help="solve components in N worker processes")
    _add_shared(search)
    search.set_defaults(func=_cmd_search)

    first = subs.add_parser(
        "first", help="stop at the first self-amplifying subnetwork")
    first.add_argument("network")
    _add_features(first)
    _add_shared(first)
    first.set_defaults(func=_cmd_first)

    red = subs.add_parser("reduce", help="remove nodes/arcs that can never "
                                         "be part of a self-sufficient set")
    red.add_argument("network")
    _add_shared(red)
    red.set_defaults(func=_cmd_reduce)

    comp = subs.add_parser("components",
                           help="weakly connected components; optionally "
                                "search each")
    comp.add_argument("network")
    comp.add_argument("--solve", action="store_true",
                      help="also search every component")
    comp.add_argument("--parallel", type=int, metavar="N",
                      help="search components in N worker processes")
    _add_features(comp)
    _add_shared(comp)
    comp.set_defaults(func=_cmd_components)

    cls = subs.add_parser("classify",
                          help="node taxonomy of a recorded solution")
    cls.add_argument("record", metavar="run.json")
    _add_shared(cls)
    cls.set_defaults(func=_cmd_classify)

    oracle = subs.add_parser("oracle",
                             help="bisection cross-check of the MAF")
    oracle.add_argument("network")
    oracle.add_argument("--m", required=True, metavar="IDS",
                        help="comma-separated node labels forming M")
    _add_shared(oracle)
    oracle.set_defaults(func=_cmd_oracle)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NotSelfSufficient, NoSelfSufficientSubnet) as err:
        print(f"nothing to report: {err}", file=sys.stderr)
        return EXIT_NOTHING
    except (ParseError, UnclassifiableNode, ZeroDenominator, NumericalError,
            ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
