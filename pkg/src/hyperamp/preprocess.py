"""Reduction and weakly-connected-component decomposition.

Reduction repeatedly removes nodes that can never belong to a self-sufficient
M (all-zero input row or all-zero output row) and then arcs whose source or
target support emptied, until a fixpoint.  Components are computed on the
bipartite node-arc projection; the best subnetwork of the whole hypergraph is
the best over its components, so they can be searched independently.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from hyperamp.hypergraph import Hypergraph, NodeSet
from hyperamp.maf import MafConfig

if TYPE_CHECKING:
    from hyperamp.subnet import FeatureSpec, SubnetSolution


@dataclass(frozen=True)
class ReductionReport:
    """Which nodes/arcs reduction removed, as (index, round) pairs in removal
    order; replayable: reducing the same hypergraph again gives an identical
    report."""

    removed_nodes: tuple[tuple[int, int], ...]
    removed_arcs: tuple[tuple[int, int], ...]
    rounds: int

    @property
    def removed_node_indices(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.removed_nodes)

    @property
    def removed_arc_indices(self) -> tuple[int, ...]:
        return tuple(a for a, _ in self.removed_arcs)


def reduce(h: Hypergraph) -> tuple[Hypergraph, ReductionReport]:
    """Remove everything that cannot take part in a self-sufficient (M, A').

    Each round removes every node whose input row or output row is all zero
    over the remaining arcs, then every arc whose source or target support
    became empty.  Repeats to fixpoint; may return an empty hypergraph.
    """
    return reduce_protected(h, frozenset())


def reduce_protected(h: Hypergraph,
                     protected: NodeSet) -> tuple[Hypergraph, ReductionReport]:
    """Like :func:`reduce` but never removes the ``protected`` nodes (their
    incident arcs remain subject to removal)."""
    keep_n = np.ones(h.n_nodes, dtype=bool)
    keep_a = np.ones(h.n_arcs, dtype=bool)
    prot = np.zeros(h.n_nodes, dtype=bool)
    prot[sorted(protected)] = True
    removed_nodes: list[tuple[int, int]] = []
    removed_arcs: list[tuple[int, int]] = []
    rounds = 0
    while True:
        s = h.input_matrix[:, keep_a]
        t = h.output_matrix[:, keep_a]
        dead = keep_n & ~prot & (~(s > 0).any(axis=1) | ~(t > 0).any(axis=1))
        if not dead.any():
            break
        rounds += 1
        removed_nodes.extend((int(v), rounds) for v in np.flatnonzero(dead))
        keep_n &= ~dead
        s_rows = h.input_matrix[keep_n]
        t_rows = h.output_matrix[keep_n]
        dead_a = keep_a & (~(s_rows > 0).any(axis=0) | ~(t_rows > 0).any(axis=0))
        if dead_a.any():
            removed_arcs.extend((int(j), rounds) for j in np.flatnonzero(dead_a))
            keep_a &= ~dead_a
    rows = np.flatnonzero(keep_n)
    cols = np.flatnonzero(keep_a)
    reduced = Hypergraph(tuple(h.nodes[i] for i in rows),
                         tuple(h.arcs[j] for j in cols),
                         h.input_matrix[np.ix_(rows, cols)],
                         h.output_matrix[np.ix_(rows, cols)])
    return reduced, ReductionReport(tuple(removed_nodes), tuple(removed_arcs),
                                    rounds)


@dataclass(frozen=True)
class Component:
    """One weakly connected component: its node and arc index sets."""

    nodes: NodeSet
    arcs: frozenset[int]


ComponentSet = tuple[Component, ...]


def components(h: Hypergraph) -> ComponentSet:
    """Weakly connected components of the bipartite node-arc projection.

    Nodes untouched by any arc form singleton components.  Components are
    ordered by their smallest node index.
    """
    n, a = h.n_nodes, h.n_arcs
    parent = list(range(n + a))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    touched = (h.input_matrix > 0) | (h.output_matrix > 0)
    for j in range(a):
        for v in np.flatnonzero(touched[:, j]):
            union(int(v), n + j)
    groups: dict[int, tuple[set[int], set[int]]] = {}
    for v in range(n):
        groups.setdefault(find(v), (set(), set()))[0].add(v)
    for j in range(a):
        groups.setdefault(find(n + j), (set(), set()))[1].add(j)
    comps = [Component(frozenset(nodes), frozenset(arcs))
             for nodes, arcs in groups.values()]
    comps.sort(key=lambda c: min(c.nodes))
    return tuple(comps)


def component_hypergraph(h: Hypergraph, comp: Component) -> Hypergraph:
    """The component as a standalone hypergraph with original labels."""
    rows = sorted(comp.nodes)
    cols = sorted(comp.arcs)
    return Hypergraph(tuple(h.nodes[i] for i in rows),
                      tuple(h.arcs[j] for j in cols),
                      h.input_matrix[np.ix_(rows, cols)],
                      h.output_matrix[np.ix_(rows, cols)])


def _solve_one(args):
    from hyperamp.subnet import find_max_subnet

    hc, features, cfg = args
    return find_max_subnet(hc, features, cfg)


def solve_by_components(h: Hypergraph, features: FeatureSpec | None = None,
                        config: MafConfig | None = None,
                        workers: int | None = None) -> SubnetSolution:
    """Run :func:`hyperamp.subnet.find_max_subnet` per component and return
    the best solution (largest alpha; ties: fewest active arcs, then lowest
    component index), re-expressed in ``h``'s indices.

    With nonempty features only the component containing every feature node
    is eligible.  ``workers`` > 1 solves components in separate processes.
    Raises :class:`hyperamp.subnet.NoSelfSufficientSubnet` when every
    component fails.
    """
    from hyperamp.subnet import (
        FeatureSpec,
        NoSelfSufficientSubnet,
        find_max_subnet,
        lift_solution,
    )

    feats = features or FeatureSpec()
    comps = components(h)
    tasks: list[tuple[int, Hypergraph, FeatureSpec]] = []
    for idx, comp in enumerate(comps):
        if not comp.arcs:
            continue
        if feats and not feats.all_nodes <= comp.nodes:
            continue
        hc = component_hypergraph(h, comp)
        local = FeatureSpec(
            frozenset(hc.node_index(h.nodes[v]) for v in feats.sources),
            frozenset(hc.node_index(h.nodes[v]) for v in feats.sinks),
            frozenset(hc.node_index(h.nodes[v]) for v in feats.non_amplifying))
        tasks.append((idx, hc, local))
    if not tasks:
        raise NoSelfSufficientSubnet(
            "no component can satisfy the requested constraints")
    results = []
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(idx, pool.submit(_solve_one, (hc, local, config)))
                       for idx, hc, local in tasks]
            for idx, fut in futures:
                try:
                    results.append((idx, fut.result()))
                except NoSelfSufficientSubnet:
                    pass
    else:
        for idx, hc, local in tasks:
            try:
                results.append((idx, find_max_subnet(hc, local, config)))
            except NoSelfSufficientSubnet:
                pass
    if not results:
        raise NoSelfSufficientSubnet(
            "every component is infeasible for the requested constraints")
    idx, best = min(results,
                    key=lambda r: (-r[1].alpha, len(r[1].active_arcs), r[0]))
    return lift_solution(best, h)
