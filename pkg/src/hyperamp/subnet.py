"""Joint search for the subhypergraph and node set M maximizing the MAF.

The search alternates between evaluating the amplification factor at the
current candidate and solving a mixed-integer master problem that picks arc
intensities x, membership indicators y (and, under feature constraints,
presence indicators t) maximizing the worst slack rho at the current alpha.
Convergence follows the same slack criterion as ``compute_maf``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from hyperamp.hypergraph import (
    Hypergraph,
    IntensityVector,
    NodeSet,
    as_node_set,
    check_self_sufficiency,
    restrict,
)
from hyperamp.lp import (
    MixedIntegerProgram,
    NumericalError,
    SolveStatus,
    solve_milp,
)
from hyperamp.maf import (
    IterationRecord,
    MafConfig,
    amplification_factor,
    compute_maf,
)

EPSILON_X = 1e-6
_STALL_LIMIT = 3
_SELF_CHECK_TOL = 1e-6


class NoSelfSufficientSubnet(Exception):
    """The hypergraph admits no nonempty subnetwork meeting the constraints."""


@dataclass(frozen=True)
class FeatureSpec:
    """Required node roles in the selected subnetwork.

    ``sources`` must never be produced by an active arc, ``sinks`` never
    consumed, and ``non_amplifying`` must have nonpositive net production;
    all three kinds are forced to be present and excluded from M.
    """

    sources: NodeSet = frozenset()
    sinks: NodeSet = frozenset()
    non_amplifying: NodeSet = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "sources", as_node_set(self.sources))
        object.__setattr__(self, "sinks", as_node_set(self.sinks))
        object.__setattr__(self, "non_amplifying",
                           as_node_set(self.non_amplifying))
        if (self.sources & self.sinks or self.sources & self.non_amplifying
                or self.sinks & self.non_amplifying):
            raise ValueError("feature node sets must be pairwise disjoint")

    @property
    def all_nodes(self) -> NodeSet:
        return self.sources | self.sinks | self.non_amplifying

    def __bool__(self) -> bool:
        return bool(self.all_nodes)


@dataclass(frozen=True)
class SubnetSolution:
    """A selected subnetwork: node set M, active arcs/nodes, alpha, intensity.

    Indices refer to ``hypergraph``; ``intensity`` has one entry per arc of
    ``hypergraph`` and is zero outside ``active_arcs``; ``alpha`` is the
    amplification factor of exactly that intensity on the active arcs.
    """

    hypergraph: Hypergraph
    m: NodeSet
    active_arcs: frozenset[int]
    active_nodes: NodeSet
    alpha: float
    intensity: IntensityVector
    converged: bool
    iterations: int
    gap: float | None
    trace: tuple[IterationRecord, ...] = field(repr=False)


def build_master(h: Hypergraph, alpha_it: float,
                 features: FeatureSpec | None = None,
                 delta: float = 1e4) -> MixedIntegerProgram:
    """The master MILP at a fixed alpha: max rho over intensities x and
    binary memberships y (plus presence indicators t under features).

    Per node v the slack row ``rho <= (Tx)_v - alpha (Sx)_v + M_v (1 - y_v)``
    uses ``M_v = alpha * delta * (S row sum of v)`` to deactivate it when v is
    not in M.  Structural rows: M nonempty; ``(Sx)_v >= y_v``; every M node
    is produced and consumed by active arcs; every active arc touches an M
    node on both sides; total intensity at least 1.
    """
    feats = features or FeatureSpec()
    n, a = h.n_nodes, h.n_arcs
    s = h.input_matrix.astype(float)
    t = h.output_matrix.astype(float)
    s_sup = s > 0
    t_sup = t > 0
    with_t = bool(feats)
    nv = a + 1 + n + (n if with_t else 0)
    x_of = np.arange(a)
    rho_at = a
    y_of = a + 1 + np.arange(n)
    t_of = a + 1 + n + np.arange(n)

    obj = np.zeros(nv)
    obj[rho_at] = 1.0
    lower = np.zeros(nv)
    upper = np.empty(nv)
    upper[x_of] = delta
    upper[rho_at] = np.inf
    upper[y_of] = 1.0
    names = [f"x_{lbl}" for lbl in h.arcs] + ["rho"]
    names += [f"y_{lbl}" for lbl in h.nodes]
    binaries = set(y_of.tolist())
    if with_t:
        upper[t_of] = 1.0
        names += [f"t_{lbl}" for lbl in h.nodes]
        binaries |= set(t_of.tolist())
        for v in feats.all_nodes:
            lower[t_of[v]] = 1.0
            upper[y_of[v]] = 0.0
        for v in feats.sources:
            upper[x_of[t_sup[v]]] = 0.0
        for v in feats.sinks:
            upper[x_of[s_sup[v]]] = 0.0
    p = MixedIntegerProgram(objective=obj, lower=lower, upper=upper,
                            names=names, binaries=frozenset(binaries))

    big_m = alpha_it * delta * s.sum(axis=1)
    for v in range(n):
        row = np.zeros(nv)
        row[x_of] = alpha_it * s[v] - t[v]
        row[rho_at] = 1.0
        row[y_of[v]] = big_m[v]
        p.add_row(row, "<=", big_m[v])
    row = np.zeros(nv)
    row[y_of] = 1.0
    p.add_row(row, ">=", 1.0)
    for v in range(n):
        row = np.zeros(nv)
        row[x_of] = s[v]
        row[y_of[v]] = -1.0
        p.add_row(row, ">=", 0.0)
    for v in range(n):
        for sup in (t_sup[v], s_sup[v]):
            row = np.zeros(nv)
            row[x_of[sup]] = 1.0
            row[y_of[v]] = -1.0
            p.add_row(row, ">=", 0.0)
    for j in range(a):
        for sup in (t_sup[:, j], s_sup[:, j]):
            row = np.zeros(nv)
            row[x_of[j]] = 1.0
            row[y_of[sup]] = -delta
            p.add_row(row, "<=", 0.0)
    row = np.zeros(nv)
    row[x_of] = 1.0
    p.add_row(row, ">=", 1.0)

    if with_t:
        incident = s_sup | t_sup
        for v in range(n):
            for j in np.flatnonzero(incident[v]):
                row = np.zeros(nv)
                row[x_of[j]] = 1.0
                row[t_of[v]] = -delta
                p.add_row(row, "<=", 0.0)
            row = np.zeros(nv)
            row[x_of[incident[v]]] = -1.0
            row[t_of[v]] = 1.0
            p.add_row(row, "<=", 0.0)
            row = np.zeros(nv)
            row[y_of[v]] = 1.0
            row[t_of[v]] = -1.0
            p.add_row(row, "<=", 0.0)
        q = t - s
        for v in sorted(feats.non_amplifying):
            row = np.zeros(nv)
            row[x_of] = q[v]
            p.add_row(row, "<=", 0.0)
    return p


@dataclass
class _Search:
    """State of one master-iteration run on an already-reduced hypergraph."""

    h: Hypergraph
    features: FeatureSpec
    cfg: MafConfig
    alpha: float = 0.0
    m: NodeSet = frozenset()
    x: np.ndarray | None = None
    trace: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    gap: float | None = None

    def run(self, stop_above_one: bool) -> SubnetSolution | None:
        self._initial_candidate()
        if stop_above_one and self.alpha > 1.0:
            sol = self._try_extract()
            if sol is not None:
                return sol
        stalls = 0
        for it in range(1, self.cfg.max_iterations + 1):
            t0 = time.perf_counter()
            master = build_master(self.h, self.alpha, self.features,
                                  self.cfg.delta)
            res = solve_milp(master, warm_starts=[self._binary_assignment()],
                             bound_target=self.cfg.epsilon_rho)
            millis = (time.perf_counter() - t0) * 1000.0
            self.iterations = it
            if res.status is SolveStatus.INFEASIBLE:
                raise NoSelfSufficientSubnet(
                    "the master problem is infeasible"
                    + (" under the feature constraints" if self.features
                       else ""))
            if res.status is not SolveStatus.OPTIMAL:
                raise NumericalError(f"master returned {res.status}")
            self.gap = res.bound
            improved = res.x is not None and self._accept(res, it, millis)
            if res.bound <= self.cfg.epsilon_rho:
                self.converged = True
                break
            stalls = 0 if improved else stalls + 1
            if stop_above_one and self.alpha > 1.0:
                sol = self._try_extract()
                if sol is not None:
                    return sol
            if stalls >= _STALL_LIMIT:
                break
        if stop_above_one and self.alpha <= 1.0:
            return None
        return self._extract(require_optimal=not stop_above_one)

    def _initial_candidate(self) -> None:
        eligible = [v for v in range(self.h.n_nodes)
                    if v not in self.features.all_nodes]
        if not eligible:
            raise NoSelfSufficientSubnet(
                "no node is eligible for membership in M")
        self.m = frozenset(eligible)
        self.x = np.ones(self.h.n_arcs)
        self.alpha = amplification_factor(self.h, self.m, self.x)
        self.trace.append(IterationRecord(0, self.alpha, None, 0.0))

    def _binary_assignment(self) -> dict[int, int]:
        a, n = self.h.n_arcs, self.h.n_nodes
        assign = {a + 1 + v: int(v in self.m) for v in range(n)}
        if self.features:
            active = self.x > EPSILON_X
            incident = ((self.h.input_matrix[:, active] > 0)
                        | (self.h.output_matrix[:, active] > 0)).any(axis=1)
            for v in range(n):
                assign[a + 1 + n + v] = int(bool(incident[v])
                                            or v in self.features.all_nodes)
        return assign

    def _accept(self, res, it: int, millis: float) -> bool:
        a, n = self.h.n_arcs, self.h.n_nodes
        y = res.x[a + 1:a + 1 + n]
        m_new = frozenset(int(v) for v in np.flatnonzero(y > 0.5))
        if not m_new:
            return False
        x_new = res.x[:a].copy()
        cand = amplification_factor(self.h, m_new, x_new)
        if cand <= self.alpha:
            return False
        self.alpha, self.m, self.x = cand, m_new, x_new
        self.trace.append(IterationRecord(it, cand, res.value, millis))
        return True

    def _try_extract(self) -> SubnetSolution | None:
        try:
            sol = self._extract(require_optimal=False)
        except (NumericalError, NoSelfSufficientSubnet):
            return None
        return sol if sol.alpha > 1.0 else None

    def _extract(self, require_optimal: bool) -> SubnetSolution:
        """Turn the current (m, x) candidate into a checked SubnetSolution.

        The intensity is thresholded to pick the active arcs; the reported
        alpha is re-evaluated on exactly the reported intensity.  With
        ``require_optimal`` the subnetwork's converged MAF must agree with
        the candidate within tolerance.
        """
        reason = "intensity vector has no active arcs"
        for threshold in (EPSILON_X, 1e-9):
            arcs = frozenset(int(j) for j in np.flatnonzero(self.x > threshold))
            if not arcs:
                continue
            sub = restrict(self.h, arcs)
            if not (self.m and self.m <= sub.node_indices):
                reason = "M is not covered by the active arcs"
                continue
            if not check_self_sufficiency(sub, self.m):
                reason = "active arcs are not self-sufficient on M"
                continue
            cols = sorted(arcs)
            alpha_out = amplification_factor(sub, self.m, self.x[cols])
            if require_optimal:
                check = compute_maf(sub, self.m, MafConfig(
                    epsilon_rho=self.cfg.epsilon_rho,
                    max_iterations=self.cfg.max_iterations,
                    delta=self.cfg.delta))
                if abs(check.alpha - alpha_out) > _SELF_CHECK_TOL:
                    reason = (f"candidate alpha {alpha_out!r} disagrees with "
                              f"its subnetwork's MAF {check.alpha!r}")
                    continue
            intensity = np.zeros(self.h.n_arcs)
            intensity[cols] = self.x[cols]
            return SubnetSolution(
                hypergraph=self.h, m=self.m, active_arcs=arcs,
                active_nodes=sub.node_indices, alpha=alpha_out,
                intensity=intensity, converged=self.converged,
                iterations=self.iterations, gap=self.gap,
                trace=tuple(self.trace))
        raise NumericalError(f"candidate extraction failed: {reason}")


def _reduced_for_search(h: Hypergraph, features: FeatureSpec) -> Hypergraph:
    """Drop arcs forbidden by the features, then reduce with feature nodes
    protected from removal."""
    from hyperamp.preprocess import reduce_protected

    keep_arcs = np.ones(h.n_arcs, dtype=bool)
    for v in features.sources:
        keep_arcs &= ~(h.output_matrix[v] > 0)
    for v in features.sinks:
        keep_arcs &= ~(h.input_matrix[v] > 0)
    pruned = h
    if not keep_arcs.all():
        if not keep_arcs.any():
            raise NoSelfSufficientSubnet(
                "the feature constraints exclude every arc")
        cols = np.flatnonzero(keep_arcs)
        used = ((h.input_matrix[:, cols] > 0)
                | (h.output_matrix[:, cols] > 0)).any(axis=1)
        for v in features.all_nodes:
            used[v] = True
        rows = np.flatnonzero(used)
        pruned = Hypergraph(tuple(h.nodes[i] for i in rows),
                            tuple(h.arcs[j] for j in cols),
                            h.input_matrix[np.ix_(rows, cols)],
                            h.output_matrix[np.ix_(rows, cols)])
    protected = frozenset(pruned.node_index(h.nodes[v])
                          for v in features.all_nodes)
    reduced, _ = reduce_protected(pruned, protected)
    return reduced


def _map_features(src: Hypergraph, dst: Hypergraph,
                  features: FeatureSpec) -> FeatureSpec:
    def remap(nodes: NodeSet) -> frozenset[int]:
        return frozenset(dst.node_index(src.nodes[v]) for v in nodes)

    return FeatureSpec(remap(features.sources), remap(features.sinks),
                       remap(features.non_amplifying))


def lift_solution(sol: SubnetSolution, parent: Hypergraph) -> SubnetSolution:
    """Re-express a solution found on a label-preserving subnetwork of
    ``parent`` in the parent's node/arc indices."""
    h = sol.hypergraph
    node_map = {v: parent.node_index(h.nodes[v]) for v in range(h.n_nodes)}
    arc_map = {j: parent.arc_index(h.arcs[j]) for j in range(h.n_arcs)}
    intensity = np.zeros(parent.n_arcs)
    for j, orig in arc_map.items():
        intensity[orig] = sol.intensity[j]
    return SubnetSolution(
        hypergraph=parent,
        m=frozenset(node_map[v] for v in sol.m),
        active_arcs=frozenset(arc_map[j] for j in sol.active_arcs),
        active_nodes=frozenset(node_map[v] for v in sol.active_nodes),
        alpha=sol.alpha, intensity=intensity, converged=sol.converged,
        iterations=sol.iterations, gap=sol.gap, trace=sol.trace)


def find_max_subnet(h: Hypergraph, features: FeatureSpec | None = None,
                    config: MafConfig | None = None) -> SubnetSolution:
    """Find the subhypergraph and node set M with the largest MAF.

    The hypergraph is reduced internally (feature nodes protected) before the
    master iteration, and the returned solution is re-expressed in ``h``'s
    node/arc indices.  The result's alpha is verified internally against
    ``compute_maf`` on the extracted subnetwork.  Raises
    :class:`NoSelfSufficientSubnet` when no admissible subnetwork exists; an
    exhausted iteration budget returns the best candidate with
    ``converged=False``.
    """
    search = _prepare(h, features, config)
    return lift_solution(search.run(stop_above_one=False), h)


def first_self_amplifying(h: Hypergraph, features: FeatureSpec | None = None,
                          config: MafConfig | None = None
                          ) -> SubnetSolution | None:
    """Return the first search iterate certifying alpha > 1, or None.

    Runs the same loop as :func:`find_max_subnet` but exits as soon as an
    iterate passes the self-sufficiency check with alpha > 1; such early
    exits carry ``converged=False``.  Returns None when the search concludes
    with alpha <= 1.
    """
    search = _prepare(h, features, config)
    sol = search.run(stop_above_one=True)
    return None if sol is None else lift_solution(sol, h)


def _prepare(h: Hypergraph, features: FeatureSpec | None,
             config: MafConfig | None) -> _Search:
    feats = features or FeatureSpec()
    cfg = config or MafConfig()
    out_of_range = [v for v in feats.all_nodes if not 0 <= v < h.n_nodes]
    if out_of_range:
        raise ValueError(f"feature node index {out_of_range[0]} out of range")
    reduced = _reduced_for_search(h, feats)
    if reduced.n_arcs == 0:
        raise NoSelfSufficientSubnet("the reduced hypergraph is empty")
    return _Search(reduced, _map_features(h, reduced, feats), cfg)
