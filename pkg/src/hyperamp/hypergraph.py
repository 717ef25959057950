"""Directed multihypergraphs with integer incidence matrices.

A hypergraph couples an ordered node list with an ordered arc list and two
nonnegative integer matrices: ``input_matrix`` (S) holds the multiplicity of
each node in each arc's source multiset, ``output_matrix`` (T) the multiplicity
in the target multiset.  Node sets are plain ``frozenset`` objects of node
indices; intensity vectors are nonnegative float arrays with one entry per arc.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

NodeSet = frozenset[int]
IntensityVector = np.ndarray


def as_node_set(indices: Iterable[int]) -> NodeSet:
    """Normalize an iterable of node indices to a ``frozenset``."""
    return frozenset(int(i) for i in indices)


@dataclass(frozen=True)
class Hypergraph:
    """A multi-directed hypergraph (nodes, arcs, S and T incidence matrices).

    Parameters
    ----------
    nodes : sequence of str
        Node identifiers; row i of the matrices belongs to ``nodes[i]``.
    arcs : sequence of str
        Arc identifiers; column j belongs to ``arcs[j]``.
    input_matrix, output_matrix : array-like of nonnegative int
        Source / target multiplicities, shape ``(len(nodes), len(arcs))``.
        Every arc must have at least one source and one target node.
    """

    nodes: tuple[str, ...]
    arcs: tuple[str, ...]
    input_matrix: np.ndarray
    output_matrix: np.ndarray
    _node_pos: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        nodes = tuple(str(v) for v in self.nodes)
        arcs = tuple(str(a) for a in self.arcs)
        s = np.asarray(self.input_matrix)
        t = np.asarray(self.output_matrix)
        if s.dtype.kind == "f" or t.dtype.kind == "f":
            for m in (s, t):
                if not np.equal(np.mod(m, 1), 0).all():
                    raise ValueError("incidence multiplicities must be integers")
        s = s.astype(np.int64).reshape(len(nodes), len(arcs))
        t = t.astype(np.int64).reshape(len(nodes), len(arcs))
        if (s < 0).any() or (t < 0).any():
            raise ValueError("incidence multiplicities must be nonnegative")
        if len(set(nodes)) != len(nodes):
            raise ValueError("duplicate node identifiers")
        if len(set(arcs)) != len(arcs):
            raise ValueError("duplicate arc identifiers")
        empty_src = np.flatnonzero(~(s > 0).any(axis=0))
        if empty_src.size:
            raise ValueError(f"arc {arcs[empty_src[0]]!r} has an empty source set")
        empty_tgt = np.flatnonzero(~(t > 0).any(axis=0))
        if empty_tgt.size:
            raise ValueError(f"arc {arcs[empty_tgt[0]]!r} has an empty target set")
        s.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "arcs", arcs)
        object.__setattr__(self, "input_matrix", s)
        object.__setattr__(self, "output_matrix", t)
        object.__setattr__(self, "_node_pos", {v: i for i, v in enumerate(nodes)})

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def node_index(self, label: str) -> int:
        try:
            return self._node_pos[label]
        except KeyError:
            raise KeyError(f"unknown node {label!r}") from None

    def node_set(self, labels: Iterable[str]) -> NodeSet:
        """Node indices for the given labels."""
        return frozenset(self.node_index(v) for v in labels)

    def arc_index(self, label: str) -> int:
        try:
            return self.arcs.index(label)
        except ValueError:
            raise KeyError(f"unknown arc {label!r}") from None

    def as_subhypergraph(self) -> Subhypergraph:
        """The whole hypergraph viewed as a subhypergraph of itself."""
        return Subhypergraph(self, frozenset(range(self.n_nodes)),
                             frozenset(range(self.n_arcs)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hypergraph):
            return NotImplemented
        return (self.nodes == other.nodes and self.arcs == other.arcs
                and np.array_equal(self.input_matrix, other.input_matrix)
                and np.array_equal(self.output_matrix, other.output_matrix))

    def __hash__(self) -> int:
        return hash((self.nodes, self.arcs, self.input_matrix.tobytes(),
                     self.output_matrix.tobytes()))


@dataclass(frozen=True)
class Subhypergraph:
    """An arc subset of a parent hypergraph together with its incident nodes.

    The node set must be closed under incidence: every node that an included
    arc touches (as source or target) belongs to ``node_indices``.
    """

    parent: Hypergraph
    node_indices: NodeSet
    arc_indices: NodeSet

    def __post_init__(self) -> None:
        nodes = as_node_set(self.node_indices)
        arcs = as_node_set(self.arc_indices)
        n, a = self.parent.n_nodes, self.parent.n_arcs
        if nodes and (min(nodes) < 0 or max(nodes) >= n):
            raise ValueError("node index out of range")
        if arcs and (min(arcs) < 0 or max(arcs) >= a):
            raise ValueError("arc index out of range")
        object.__setattr__(self, "node_indices", nodes)
        object.__setattr__(self, "arc_indices", arcs)
        cols = self.arc_order
        touched = ((self.parent.input_matrix[:, cols] > 0)
                   | (self.parent.output_matrix[:, cols] > 0)).any(axis=1)
        missing = set(np.flatnonzero(touched)) - nodes
        if missing:
            v = min(missing)
            raise ValueError(
                f"node {self.parent.nodes[v]!r} is incident to an included arc "
                "but missing from node_indices")

    @property
    def arc_order(self) -> np.ndarray:
        """Included arc indices in ascending order (intensity vector order)."""
        return np.fromiter(sorted(self.arc_indices), dtype=np.intp,
                           count=len(self.arc_indices))

    @property
    def input_columns(self) -> np.ndarray:
        """S restricted to the included arcs (all parent rows kept)."""
        return self.parent.input_matrix[:, self.arc_order]

    @property
    def output_columns(self) -> np.ndarray:
        """T restricted to the included arcs (all parent rows kept)."""
        return self.parent.output_matrix[:, self.arc_order]

    @property
    def n_arcs(self) -> int:
        return len(self.arc_indices)


def _as_sub(h: Hypergraph | Subhypergraph) -> Subhypergraph:
    return h.as_subhypergraph() if isinstance(h, Hypergraph) else h


def net_matrix(h: Hypergraph) -> np.ndarray:
    """The net incidence matrix Q = T - S."""
    return h.output_matrix - h.input_matrix


def apply_intensity(h: Hypergraph | Subhypergraph, x: IntensityVector) -> np.ndarray:
    """Net production per node, ``Q x``, for an intensity vector ``x``.

    ``x`` has one entry per arc of ``h`` (for a subhypergraph: per included
    arc, in ascending arc-index order); the result always has one entry per
    node of the parent hypergraph.  Positive entries are amplified nodes,
    negative entries are drained nodes.
    """
    sub = _as_sub(h)
    x = np.asarray(x, dtype=float)
    if x.shape != (sub.n_arcs,):
        raise ValueError(f"intensity vector has {x.size} entries, "
                         f"expected {sub.n_arcs}")
    if (x < 0).any():
        raise ValueError("intensity entries must be nonnegative")
    return (sub.output_columns - sub.input_columns) @ x


@dataclass(frozen=True)
class SelfSufficiencyReport:
    """Outcome of a self-sufficiency check; truthy iff all conditions hold.

    ``arcs_missing_source`` / ``arcs_missing_target`` list arcs with no source
    (resp. target) node inside M; ``nodes_never_source`` / ``nodes_never_target``
    list nodes of M that no included arc consumes (resp. produces).
    """

    ok: bool
    arcs_missing_source: tuple[int, ...] = ()
    arcs_missing_target: tuple[int, ...] = ()
    nodes_never_source: tuple[int, ...] = ()
    nodes_never_target: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def check_self_sufficiency(h: Hypergraph | Subhypergraph,
                           m: Iterable[int]) -> SelfSufficiencyReport:
    """Check that (h, M) is self-sufficient.

    Two conditions: every included arc has at least one source node and at
    least one target node in M, and every node of M appears at least once as a
    source and at least once as a target across the included arcs.
    """
    sub = _as_sub(h)
    mset = as_node_set(m)
    if not mset <= sub.node_indices:
        raise ValueError("m is not a subset of the subhypergraph's nodes")
    cols = sub.arc_order
    mrows = np.fromiter(sorted(mset), dtype=np.intp, count=len(mset))
    s = sub.parent.input_matrix
    t = sub.parent.output_matrix
    if mrows.size:
        sm = s[np.ix_(mrows, cols)] > 0
        tm = t[np.ix_(mrows, cols)] > 0
    else:
        sm = np.zeros((0, cols.size), dtype=bool)
        tm = np.zeros((0, cols.size), dtype=bool)
    bad_src = tuple(int(cols[j]) for j in np.flatnonzero(~sm.any(axis=0)))
    bad_tgt = tuple(int(cols[j]) for j in np.flatnonzero(~tm.any(axis=0)))
    never_src = tuple(int(mrows[i]) for i in np.flatnonzero(~sm.any(axis=1)))
    never_tgt = tuple(int(mrows[i]) for i in np.flatnonzero(~tm.any(axis=1)))
    ok = (len(mset) > 0 and not bad_src and not bad_tgt
          and not never_src and not never_tgt)
    return SelfSufficiencyReport(ok, bad_src, bad_tgt, never_src, never_tgt)


def restrict(h: Hypergraph, arcs: Iterable[int]) -> Subhypergraph:
    """The subhypergraph on the given arcs, with all incident nodes included."""
    arc_set = as_node_set(arcs)
    if not arc_set:
        raise ValueError("cannot restrict to an empty arc set")
    cols = np.fromiter(sorted(arc_set), dtype=np.intp, count=len(arc_set))
    touched = ((h.input_matrix[:, cols] > 0)
               | (h.output_matrix[:, cols] > 0)).any(axis=1)
    return Subhypergraph(h, frozenset(np.flatnonzero(touched).tolist()), arc_set)
