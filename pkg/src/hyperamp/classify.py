"""Taxonomy of a solution's nodes: source, sink, non-amplifying, amplifying.

Within the active subnetwork, nodes outside the amplifying set M either only
feed arcs (sources), only receive from them (sinks), or sit on both sides
while being net-consumed (non-amplifying).  Sources and non-amplifying nodes
together form the drains: every one of them is net-consumed by the solution
intensity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from hyperamp.hypergraph import NodeSet
from hyperamp.io import format_reaction
from hyperamp.subnet import SubnetSolution

__all__ = [
    "UnclassifiableNode",
    "NodeTaxonomy",
    "classify_nodes",
    "taxonomy_to_json",
    "format_taxonomy",
]

_BALANCE_TOL = 1e-9


class UnclassifiableNode(ValueError):
    """A non-M node that both feeds and receives active arcs yet is not
    net-consumed — it behaves like an amplifying node and belongs in M."""

    def __init__(self, node: int, label: str, balance: float):
        super().__init__(
            f"node {label!r} lies outside the amplifying set but has net "
            f"balance {balance:g} >= 0 under the solution intensity")
        self.node = node
        self.label = label
        self.balance = balance


@dataclass(frozen=True)
class NodeTaxonomy:
    """The four-way partition of a solution's active nodes.

    ``amplifying`` is the solution's M.  ``drains`` (sources plus
    non-amplifying) and ``producers`` (sinks) are the derived groupings of
    the remaining nodes by the sign of their net balance.
    """

    solution: SubnetSolution
    sources: NodeSet
    sinks: NodeSet
    non_amplifying: NodeSet
    amplifying: NodeSet

    @property
    def drains(self) -> NodeSet:
        return self.sources | self.non_amplifying

    @property
    def producers(self) -> NodeSet:
        return self.sinks


def classify_nodes(sol: SubnetSolution) -> NodeTaxonomy:
    """Partition the active nodes of ``sol`` into the four taxonomy sets.

    A node outside M is a source if the active arcs never target it, a sink
    if they never draw from it, and non-amplifying if both happen and its
    net balance under the solution intensity is negative.  A non-M node on
    both sides with balance above ``-1e-9`` raises
    :class:`UnclassifiableNode` instead of being bucketed silently.
    """
    h = sol.hypergraph
    arcs = sorted(sol.active_arcs)
    s = h.input_matrix[:, arcs]
    t = h.output_matrix[:, arcs]
    balance = (t - s).astype(float) @ sol.intensity[arcs]
    sources, sinks, non_amp = set(), set(), set()
    for v in sorted(sol.active_nodes - sol.m):
        feeds = bool((s[v] > 0).any())
        receives = bool((t[v] > 0).any())
        if feeds and not receives:
            sources.add(v)
        elif receives and not feeds:
            sinks.add(v)
        elif balance[v] < -_BALANCE_TOL:
            non_amp.add(v)
        else:
            raise UnclassifiableNode(v, h.nodes[v], float(balance[v]))
    return NodeTaxonomy(sol, frozenset(sources), frozenset(sinks),
                        frozenset(non_amp), sol.m)


def _labels(tax: NodeTaxonomy, nodes: NodeSet) -> list[str]:
    return sorted(tax.solution.hypergraph.nodes[v] for v in nodes)


def taxonomy_to_json(tax: NodeTaxonomy) -> str:
    """The four sets, alpha, and the active reactions as a JSON document."""
    h = tax.solution.hypergraph
    payload = {
        "sources": _labels(tax, tax.sources),
        "sinks": _labels(tax, tax.sinks),
        "non_amplifying": _labels(tax, tax.non_amplifying),
        "amplifying": _labels(tax, tax.amplifying),
        "alpha": tax.solution.alpha,
        "reactions": {
            h.arcs[a]: float(tax.solution.intensity[a])
            for a in sorted(tax.solution.active_arcs)
        },
    }
    return json.dumps(payload, indent=2) + "\n"


def format_taxonomy(tax: NodeTaxonomy) -> str:
    """An aligned two-column summary table of the taxonomy.

    Lists the four sets (source, sink, non-amplifying, amplifying), the
    amplification factor, then each active reaction as an equation.
    """
    sol = tax.solution
    h = sol.hypergraph
    rows = [
        ("Source Set", ", ".join(_labels(tax, tax.sources)) or "-"),
        ("Sink Set", ", ".join(_labels(tax, tax.sinks)) or "-"),
        ("Non-amplifying Set",
         ", ".join(_labels(tax, tax.non_amplifying)) or "-"),
        ("Amplifying Set", ", ".join(_labels(tax, tax.amplifying)) or "-"),
        ("Amplification Factor", repr(sol.alpha)),
        ("Reactions", ""),
    ]
    for a in sorted(sol.active_arcs):
        source = {h.nodes[i]: int(h.input_matrix[i, a])
                  for i in np.flatnonzero(h.input_matrix[:, a])}
        target = {h.nodes[i]: int(h.output_matrix[i, a])
                  for i in np.flatnonzero(h.output_matrix[:, a])}
        rows.append((h.arcs[a], format_reaction(source, target)))
    width = max(len(label) for label, _ in rows)
    return "\n".join(
        f"{label:<{width}}  {text}".rstrip() for label, text in rows) + "\n"
